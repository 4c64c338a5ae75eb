#ifndef EPILATENT_POSTERIOR_HPP
#define EPILATENT_POSTERIOR_HPP

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "epilatent/dgp.hpp"
#include "epilatent/mixing.hpp"
#include "epilatent/panel.hpp"

namespace epilatent {

enum class Transform { identity, exp };

/// One named block of the unconstrained parameter vector.
struct ParamBlock {
    std::string name;
    int offset = 0;
    int size = 0;
    Transform transform = Transform::identity;
    std::vector<std::string> labels;  // per-scalar names; autogenerated when empty
};

/// Bijection between the flat unconstrained vector and named, constrained
/// parameters: exp for positive blocks, identity otherwise. Round-trip
/// unconstrain(constrain(x)) == x to machine precision.
struct ParamLayout {
    std::vector<ParamBlock> blocks;

    int dim() const;
    bool has_block(const std::string& name) const;
    const ParamBlock& block(const std::string& name) const;
    std::vector<std::string> flat_names() const;

    Eigen::VectorXd constrain(const Eigen::VectorXd& x) const;
    Eigen::VectorXd unconstrain(const Eigen::VectorXd& v) const;
    /// log |d constrained / d unconstrained| summed over coordinates.
    double log_jacobian(const Eigen::VectorXd& x) const;
};

/// One prior entry per sampled block. Families:
///   normal(mu, sigma)          on an identity-transformed coordinate
///   normal_unc(mu, sigma)      on the unconstrained coordinate of a positive block
///   halfnormal(sigma)          on the constrained value (Jacobian included)
///   halfcauchy(sigma)          on the constrained value (Jacobian included)
///   gamma(shape, scale)        on the constrained value (Jacobian included)
///   contact_gamma(a_diag, a_offdiag, scale)   lower-triangle contact entries
///   std_normal                 latent innovations
///   hier_normal_unc            log rho_g | (mean_log_rho, sd_log_rho)
///   gamma_on_log(shape, scale) density factor on log(activity), a derived
///                              quantity (no Jacobian by construction)
struct PriorEntry {
    std::string block;
    std::string family;
    std::vector<double> params;
};

struct PriorSpec {
    std::vector<PriorEntry> entries;

    const PriorEntry& find(const std::string& block) const;
    bool has(const std::string& block) const;

    /// Presets: "simstudy" and "analysis" for the rare-disease variants,
    /// "outbreak" for the outbreak variant.
    static PriorSpec preset(const std::string& name, Variant variant, int I = 6);

    static PriorSpec parse_file(const std::string& path);
    void write_file(const std::string& path) const;
    std::string to_string() const;
};

/// Generic prior evaluation over a layout (handles every family except the
/// model-coupled hier_normal_unc / gamma_on_log, which posteriors add
/// themselves). Returns the log density including constraining Jacobians.
double log_prior_generic(const Eigen::VectorXd& x, const ParamLayout& layout, const PriorSpec& spec,
                         Eigen::VectorXd* grad);

/// Target density contract shared by the models and the sampler: value plus
/// gradient of the unnormalized log posterior; -inf marks an invalid point.
class Posterior {
public:
    virtual ~Posterior() = default;
    virtual const ParamLayout& layout() const = 0;
    virtual double logp_grad(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const = 0;
    int dim() const { return layout().dim(); }
    double logp(const Eigen::VectorXd& x) const { return logp_grad(x, nullptr); }
};

struct RareModelOptions {
    Variant variant = Variant::full;
    PriorSpec priors;                              // empty -> simstudy preset
    ContactPriorHyper contact_hyper;               // full variant
    Eigen::MatrixXd known_contact;                 // reduced variant
    double R0 = 1.0;
};

/// Decoded structural draw (latent innovations excluded).
struct RareDraw {
    RareDiseaseParams params;
    double kappa = 1.0;  // reduced variant eigen-power
};

/// Unnormalized log posterior and gradient for the rare-disease instance
/// (naive / reduced / full). The likelihood conditions on week 1 and runs
/// t = 2..T; latent innovations exist only for cells with positive lag-1
/// incidence (full variant). Pure function of (x, panel): concurrent chains
/// may share one instance.
class RarePosterior : public Posterior {
public:
    RarePosterior(PanelData panel, Eigen::MatrixXi orders, RareModelOptions options);

    const ParamLayout& layout() const override { return layout_; }
    double logp_grad(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const override;

    double log_likelihood(const Eigen::VectorXd& x) const;
    double log_prior(const Eigen::VectorXd& x) const;

    RareDraw decode(const Eigen::VectorXd& x) const;
    Variant variant() const { return options_.variant; }
    const PanelData& panel() const { return panel_; }
    const Eigen::MatrixXi& orders() const { return orders_; }
    const RareModelOptions& options() const { return options_; }
    int latent_count() const { return static_cast<int>(active_z_.size()); }

private:
    double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad, bool with_prior, bool with_lik) const;

    PanelData panel_;
    Eigen::MatrixXi orders_;
    RareModelOptions options_;
    ParamLayout layout_;
    std::unique_ptr<EigenDeformation> deformation_;  // reduced variant
    Eigen::MatrixXd log_share_;
    std::vector<Eigen::MatrixXd> counts_;            // per week
    std::vector<double> sin_t_, cos_t_;
    std::vector<bool> holiday_;
    std::vector<std::array<int, 3>> active_z_;       // (t, g, i), t >= 2, 1-based t
    std::vector<int> z_index_;                       // (t-1)*G*I + g*I + i -> z position or -1

    // block offsets (-1 when absent from the variant)
    int off_b0_ = -1, off_bgeo_ = -1, off_bage_ = -1, off_bsin_ = -1, off_bcos_ = -1, off_bx_ = -1;
    int off_psi_ = -1, off_e0_ = -1, off_egeo_ = -1, off_eage_ = -1, off_epop_ = -1, off_rho_ = -1;
    int off_kappa_ = -1, off_theta_ = -1, off_contact_ = -1, off_z_ = -1;
};

struct OutbreakModelOptions {
    PriorSpec priors;  // empty -> outbreak preset
    ContactPriorHyper contact_hyper;
};

struct OutbreakDraw {
    OutbreakParams params;
};

/// Unnormalized log posterior and gradient for the outbreak instance.
/// Susceptible/prevalence estimates are recomputed from the observed history
/// (history is data); the distributed-lag recurrence makes that O(T).
class OutbreakPosterior : public Posterior {
public:
    OutbreakPosterior(PanelData panel, Eigen::MatrixXd distance, OutbreakModelOptions options);

    const ParamLayout& layout() const override { return layout_; }
    double logp_grad(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const override;

    double log_likelihood(const Eigen::VectorXd& x) const;
    double log_prior(const Eigen::VectorXd& x) const;

    OutbreakDraw decode(const Eigen::VectorXd& x) const;
    const PanelData& panel() const { return panel_; }
    const Eigen::MatrixXd& distance() const { return distance_; }
    int latent_count() const { return static_cast<int>(active_z_.size()); }

private:
    double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad, bool with_prior, bool with_lik) const;

    PanelData panel_;
    Eigen::MatrixXd distance_;
    OutbreakModelOptions options_;
    ParamLayout layout_;
    std::vector<Eigen::MatrixXd> counts_;
    std::vector<Eigen::MatrixXd> susceptible_;       // X-hat per week t=2..T (index t-2), data
    std::vector<std::array<int, 3>> active_z_;
    std::vector<int> z_index_;

    int off_delta_ = -1, off_theta_ = -1, off_k_ = -1, off_gamma_ = -1, off_logR_ = -1;
    int off_tau_ = -1, off_mlr_ = -1, off_slr_ = -1, off_rho_ = -1, off_contact_ = -1, off_z_ = -1;
};

/// Central finite-difference check of logp_grad at x: max over coordinates of
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
double max_grad_rel_error(const Posterior& post, const Eigen::VectorXd& x, double step = 1e-5);

}  // namespace epilatent

#endif
