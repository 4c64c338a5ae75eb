#ifndef EPILATENT_FORECAST_HPP
#define EPILATENT_FORECAST_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "epilatent/posterior.hpp"
#include "epilatent/sampler.hpp"

namespace epilatent {

/// Posterior-predictive draws over horizons 1..H plus the cellwise
/// conditional distribution at each horizon (the closed-form density given
/// that draw's simulated path), which is what scoring evaluates.
struct ForecastSet {
    enum class Dist { negbin, betabinom };

    int K = 0, H = 0, G = 0, I = 0;
    Dist dist = Dist::negbin;
    std::vector<long long> draws;   // (k, h, g, i)
    std::vector<double> par1;       // lambda (negbin) or p (betabinom), per (k,h,g,i)
    std::vector<double> size;       // betabinom only: susceptible size per (k,h,g,i)
    std::vector<double> dispersion; // per draw k: psi or k_precision

    std::size_t idx(int k, int h, int g, int i) const {
        return ((static_cast<std::size_t>(k) * H + h) * G + g) * I + i;
    }
    long long draw(int k, int h, int g, int i) const { return draws[idx(k, h, g, i)]; }

    /// log pmf of a G x I outcome under draw k's horizon-h distribution.
    double cell_logpmf(int k, int h, const Eigen::MatrixXd& outcome) const;
};

/// Forward-simulate every retained posterior draw H weeks past the end of
/// the training panel (sampling the latent layer and intermediate counts).
/// `max_draws` > 0 thins evenly to at most that many draws.
ForecastSet posterior_predictive(const RarePosterior& model, const DrawSet& draws, int H,
                                 std::uint64_t seed, int max_draws = 0);
ForecastSet posterior_predictive(const OutbreakPosterior& model, const DrawSet& draws, int H,
                                 std::uint64_t seed, int max_draws = 0);

struct LogScoreResult {
    double value = 0.0;
    bool degenerate = false;  // every draw assigned -inf
};

/// Monte Carlo log score: log mean over draws of the horizon-h joint pmf at
/// the realized outcome (max-shifted log-sum-exp).
LogScoreResult log_score(const ForecastSet& forecast, const Eigen::MatrixXd& truth, int h);

/// Paired log-score differences A - B across datasets, per horizon.
struct ScoreTable {
    std::vector<double> mean_diff;             // per h
    std::vector<double> se;                    // per h
    std::vector<std::vector<double>> diffs;    // [h][dataset]

    int horizons() const { return static_cast<int>(mean_diff.size()); }
    std::string to_csv() const;
};

/// scores_x[dataset][h]; both models must cover the same datasets/horizons.
ScoreTable paired_scores(const std::vector<std::vector<double>>& scores_a,
                         const std::vector<std::vector<double>>& scores_b);

}  // namespace epilatent

#endif
