#ifndef EPILATENT_DGP_HPP
#define EPILATENT_DGP_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epilatent/mixing.hpp"
#include "epilatent/panel.hpp"
#include "epilatent/rng.hpp"

namespace epilatent {

enum class Variant { naive, reduced, full, outbreak };

Variant variant_from_string(const std::string& s);
std::string variant_to_string(Variant v);

/// Which distribution realizes the latent infectiousness layer. The exact
/// gamma is the generative truth; the moment-matched lognormal mirrors the
/// layer the posterior actually fits (first two moments identical).
enum class LatentKind { gamma, lognormal };

/// Parameters of the rare-disease (endemic-epidemic) instance. Vectors carry
/// the full group length with the first element pinned to 0 (reference
/// category, identifiability).
struct RareDiseaseParams {
    int G = 0, I = 0;
    double beta0 = 0.0;
    Eigen::VectorXd beta_geo;  // length G, beta_geo[0] == 0
    Eigen::VectorXd beta_age;  // length I, beta_age[0] == 0
    Eigen::VectorXd beta_sin;  // length I
    Eigen::VectorXd beta_cos;  // length I
    double beta_xmas = 0.0;
    double eta0 = 0.0;
    Eigen::VectorXd eta_geo;   // length G, eta_geo[0] == 0
    Eigen::VectorXd eta_age;   // length I, eta_age[0] == 0
    double eta_logpop = 0.0;
    double rho = 1.0;          // spatial decay, > 0
    double psi = 0.5;          // observation dispersion, > 0
    double theta = 0.0;        // latent dispersion, >= 0
    ContactMatrix contact;

    void validate() const;
    static RareDiseaseParams from_config_file(const std::string& path);
    void write_config_file(const std::string& path) const;
};

/// Parameters of the outbreak-driven instance.
struct OutbreakParams {
    int G = 0, I = 0, T = 0;
    Eigen::MatrixXd delta;        // G x I endemic hazard, > 0
    std::vector<double> log_R;    // length T-1; R_{t-1} multiplies the latent mean at week t
    ContactMatrix contact;        // activity alpha_i = column totals
    Eigen::VectorXd tau;          // length G, > 0
    Eigen::VectorXd rho_geo;      // length G, > 0
    double mean_log_rho = 0.0;
    double sd_log_rho = 1.0;
    double gamma_decay = 1.0;     // prevalence decay, > 0
    double theta = 0.0;
    double k_precision = 1e4;     // beta-binomial precision, > 0

    void validate() const;
    static OutbreakParams from_config_file(const std::string& path);
    void write_config_file(const std::string& path) const;
};

/// Realized infectiousness contributions r(t, g, i); the t = 1 slice is zero
/// by convention (nothing conditions it).
struct LatentField {
    int T = 0, G = 0, I = 0;
    std::vector<double> r;
    double at(int t, int g, int i) const { return r[(static_cast<std::size_t>(t) * G + g) * I + i]; }
    double& at_ref(int t, int g, int i) { return r[(static_cast<std::size_t>(t) * G + g) * I + i]; }
};

/// Endemic rate delta_tgi on the natural scale for week t (1-based):
/// log delta = log(E_gi / E_total) + beta0 + beta_g + beta_i
///           + beta_sin_i sin(wt) + beta_cos_i cos(wt) + beta_xmas 1{woy in {1,52}},
/// w = 2 pi / 52.
Eigen::MatrixXd endemic_rate(const RareDiseaseParams& params, const Eigen::MatrixXd& populations,
                             int t, int week_of_year);
Eigen::MatrixXd endemic_rate(const RareDiseaseParams& params, const PanelData& panel, int t);

/// Time-invariant susceptibility phi_gi:
/// log phi = eta_logpop log(E_gi / E_total) + eta0 + eta_g + eta_i.
Eigen::MatrixXd susceptibility(const RareDiseaseParams& params, const Eigen::MatrixXd& populations);

/// Latent layer draw: r = 0 exactly where prev = 0; deterministic
/// r = mean_mult * prev at theta = 0; otherwise Gamma(mean/theta, theta) or
/// the moment-matched lognormal.
Eigen::MatrixXd sample_latent(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& mean_mult,
                              double theta, Rng& rng, LatentKind kind = LatentKind::gamma);

/// lambda = delta + phi .* (wG * r * wI^T)  (two matrix products).
Eigen::MatrixXd linear_predictor(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& phi,
                                 const GeoMixing& wG, const AgeMixing& wI, const Eigen::MatrixXd& r);

/// Distributed-lag prevalence estimate from history[0..t-2] (weeks 1..t-1):
/// sum over lags d of exp(-gamma (d-1)) * Y_{t-d}. Exact, all lags.
Eigen::MatrixXd prevalence_estimate(const std::vector<Eigen::MatrixXd>& history, double gamma);

/// Susceptible pool estimate E - cumulative incidence, floored at zero;
/// floored cell count is reported through the optional counter.
Eigen::MatrixXd susceptible_estimate(const std::vector<Eigen::MatrixXd>& history,
                                     const Eigen::MatrixXd& populations,
                                     long long* floored_cells = nullptr);

/// p = 1 - exp(-(delta + (1/E) * (wG * r * wI^T))).
Eigen::MatrixXd infection_probability(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& populations,
                                      const GeoMixing& wG, const AgeMixing& wI, const Eigen::MatrixXd& r);

struct SimulateOptions {
    std::optional<Eigen::MatrixXd> initial_counts;  // week 1; endemic NegBin draw when absent
    std::optional<std::vector<int>> week_of_year;   // default ((t-1) mod 52) + 1
    LatentKind latent = LatentKind::gamma;
};

struct SimulationResult {
    PanelData panel;
    LatentField latent;
};

/// Forward-simulate T weeks of the rare-disease instance. Deterministic
/// given (seed, options). Throws NumericError if any lambda exceeds 1e9.
SimulationResult simulate_rare(const RareDiseaseParams& params, const Eigen::MatrixXd& populations,
                               const Eigen::MatrixXi& orders, int T, Variant variant, std::uint64_t seed,
                               const SimulateOptions& options = {});

/// Forward-simulate the outbreak instance; week-1 counts are required.
/// Y(t,g,i) <= susceptible estimate always (beta-binomial support).
SimulationResult simulate_outbreak(const OutbreakParams& params, const Eigen::MatrixXd& populations,
                                   const Eigen::MatrixXd& distance, int T, std::uint64_t seed,
                                   const Eigen::MatrixXd& initial_counts);

struct ScenarioEntry {
    int scenario = 0;
    double theta = 0.0, psi = 0.0;
    int replicate = 0;
    std::uint64_t seed = 0;
    std::string panel_path;
};

/// Simulate a (theta, psi) scenario grid of replicate datasets, each
/// T_train + H weeks long, with the deterministic seed schedule
/// seed = base + 1,000,000 * scenario_index + replicate. Writes one panel
/// CSV per dataset, a shared population CSV, and manifest.csv.
std::vector<ScenarioEntry> scenario_grid(const RareDiseaseParams& base, const Eigen::MatrixXd& populations,
                                         const Eigen::MatrixXi& orders, const std::vector<double>& thetas,
                                         const std::vector<double>& psis, int replicates, int T_train, int H,
                                         std::uint64_t seed, const std::string& out_dir,
                                         Variant variant = Variant::full);

std::vector<ScenarioEntry> read_manifest(const std::string& manifest_csv);

}  // namespace epilatent

#endif
