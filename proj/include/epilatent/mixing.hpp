#ifndef EPILATENT_MIXING_HPP
#define EPILATENT_MIXING_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "epilatent/rng.hpp"

namespace epilatent {

/// Symmetric, elementwise-positive contact rate matrix between age groups.
struct ContactMatrix {
    Eigen::MatrixXd C;
    void validate() const;
};

/// Column-stochastic age mixing weights: w(i, i') is the share of cases
/// generated by source group i' that lands in recipient group i.
struct AgeMixing {
    Eigen::MatrixXd w;
    void validate() const;
};

/// Column-stochastic geographic mixing weights, same orientation.
struct GeoMixing {
    Eigen::MatrixXd w;
    void validate() const;
};

/// Hyperparameters of the generative contact prior: independent
/// Gamma(alpha, scale) entries on the lower triangle (shape-scale
/// convention), mirrored to keep C symmetric.
struct ContactPriorHyper {
    double alpha_diag = 4.32;
    double alpha_offdiag = 1.30;
    double scale = 1.0 / 12.0;  // default matches I = 6

    void validate() const;
    static ContactPriorHyper defaults(int I);
};

/// Column-normalize a contact matrix into mixing weights.
AgeMixing normalize_contact(const ContactMatrix& contact);

/// Geographic weights proportional to (1 + adjacency order)^(-rho).
GeoMixing geo_weights_power_decay(const Eigen::MatrixXi& orders, double rho);

/// Gravity weights: w(g, g') proportional to tau[g] * D(g, g')^(-rho[g']).
/// Every distance raised to a power must be strictly positive (the diagonal
/// included -- use the within-region average distance, never zero).
GeoMixing geo_weights_gravity(const Eigen::MatrixXd& D, const Eigen::VectorXd& tau,
                              const Eigen::VectorXd& rho);

/// One-parameter deformation of a known mixing structure: eigenvalues of
/// C_known raised to the power kappa, recomposed, then column-normalized.
/// kappa = 1 reproduces normalize_contact(C_known) exactly; kappa -> 0 tends
/// to the identity (fully assortative) for symmetric C_known.
AgeMixing eigen_deformation(const Eigen::MatrixXd& C_known, double kappa);

/// Precomputed eigenstructure for repeated kappa evaluations (model fitting).
struct EigenDeformation {
    explicit EigenDeformation(const Eigen::MatrixXd& C_known);
    int size() const { return static_cast<int>(log_eigenvalues.size()); }
    /// Raw recomposition Omega * Lambda^kappa * Omega^{-1} (no clamping) and,
    /// optionally, its derivative with respect to kappa.
    Eigen::MatrixXd recompose(double kappa, Eigen::MatrixXd* d_dkappa = nullptr) const;

    Eigen::MatrixXd vectors;      // Omega
    Eigen::MatrixXd vectors_inv;  // Omega^{-1}
    Eigen::VectorXd eigenvalues;
    Eigen::VectorXd log_eigenvalues;
};

/// Draw a contact matrix from the generative prior (free lower triangle,
/// mirrored upper). Columns of the induced mixing weights are Dirichlet.
ContactMatrix sample_contact_prior(const ContactPriorHyper& hyper, int I, Rng& rng);

/// Column totals of C: per-group contact activity.
Eigen::VectorXd activity_from_contact(const ContactMatrix& contact);

/// Solve the prior shapes from a target expected diagonal weight
/// E[w_ii] = a1 / (a1 + (I-1) a2), with the convention that `conc_diag`
/// IS the diagonal shape a1 (so conc_diag = 4.32 at the reported setting).
ContactPriorHyper hyper_from_target(double expected_diag, double conc_diag, int I);

ContactMatrix load_contact_matrix(const std::string& csv_path);
void save_contact_matrix(const ContactMatrix& contact, const std::vector<std::string>& age_labels,
                         const std::string& csv_path);

}  // namespace epilatent

#endif
