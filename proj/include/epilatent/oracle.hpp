#ifndef EPILATENT_ORACLE_HPP
#define EPILATENT_ORACLE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "epilatent/mixing.hpp"
#include "epilatent/rng.hpp"

namespace epilatent {

/// One-step conditional mean given last week's counts: for every theta >= 0,
/// E[Y_t | Y_{t-1}] = delta + R0 * phi .* (wG * Y_prev * wI^T).
Eigen::MatrixXd conditional_mean(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& phi,
                                 const GeoMixing& wG, const AgeMixing& wI, const Eigen::MatrixXd& y_prev,
                                 double R0 = 1.0);

/// One-step conditional variance: mu (1 + psi mu) + theta (1 + psi) V with
/// V = R0 * phi^2 .* (wG^2 * Y_prev * (wI^2)^T) (squares elementwise).
Eigen::MatrixXd conditional_variance(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& phi,
                                     const GeoMixing& wG, const AgeMixing& wI, const Eigen::MatrixXd& y_prev,
                                     double theta, double psi, double R0 = 1.0);

/// One-step conditional covariance between distinct recipient cells (g,i)
/// and (a,b); always nonnegative, zero at theta = 0.
double conditional_covariance(int g, int i, int a, int b, const Eigen::MatrixXd& phi, const GeoMixing& wG,
                              const AgeMixing& wI, const Eigen::MatrixXd& y_prev, double theta,
                              double R0 = 1.0);

struct CellPair {
    int g1, i1, g2, i2;
};

/// Empirical vs analytic one-step moments. `flag_*` entries are true when
/// |analytic - empirical| <= z_threshold * SE (delete-block jackknife SEs).
struct MomentReport {
    Eigen::MatrixXd analytic_mean, analytic_var;
    Eigen::MatrixXd empirical_mean, empirical_var;
    Eigen::MatrixXd se_mean, se_var;
    std::vector<double> analytic_cov, empirical_cov, se_cov;  // per requested pair
    std::vector<CellPair> pairs;
    double z_threshold = 4.0;
    long long n_draws = 0;

    bool all_pass() const;
    std::string to_csv() const;
};

/// Draws `n_draws` one-step simulations from `simulate_step` (a closure
/// returning a G x I count matrix), accumulates block statistics over
/// `blocks` equal slabs, and compares against the supplied analytic moments.
MomentReport mc_moments(const std::function<Eigen::MatrixXd(Rng&)>& simulate_step, int G, int I,
                        const Eigen::MatrixXd& analytic_mean, const Eigen::MatrixXd& analytic_var,
                        const std::vector<CellPair>& pairs, const std::vector<double>& analytic_cov,
                        long long n_draws, std::uint64_t seed, double z_threshold = 4.0, int blocks = 100,
                        int jobs = 1);

}  // namespace epilatent

#endif
