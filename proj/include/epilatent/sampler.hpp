#ifndef EPILATENT_SAMPLER_HPP
#define EPILATENT_SAMPLER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace epilatent {

/// Target density contract: returns log density at x and, when grad is not
/// null, fills the gradient. Non-finite values mark invalid points (the
/// sampler records a divergence, never throws). Must be safe to call from
/// concurrent chains.
using LogDensityFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct SamplerConfig {
    int chains = 4;
    int warmup = 1000;
    int sampling = 1000;
    double target_accept = 0.8;
    int max_treedepth = 10;
    std::uint64_t seed = 1;
    int jobs = 1;
    double init_radius = 2.0;                  // uniform(-r, r) jitter per chain
    std::optional<Eigen::VectorXd> init;       // replaces the random init point

    void validate() const;
};

struct ChainResult {
    Eigen::MatrixXd draws;  // sampling x dim, post-warmup only
    std::vector<double> accept_stat;
    std::vector<double> energy;
    std::vector<int> treedepth;
    std::vector<std::uint8_t> divergent;
    double step_size = 0.0;
    Eigen::VectorXd inv_metric;
    int divergences = 0;
};

struct DrawSet {
    std::vector<std::string> names;
    std::vector<ChainResult> chains;

    int n_chains() const { return static_cast<int>(chains.size()); }
    int iters() const { return chains.empty() ? 0 : static_cast<int>(chains[0].draws.rows()); }
    int dim() const { return chains.empty() ? 0 : static_cast<int>(chains[0].draws.cols()); }
    int total_divergences() const;

    /// All draws of one parameter, chain-major.
    Eigen::VectorXd pooled(int param) const;
};

/// Multinomial no-U-turn sampler with a diagonal metric. Warmup runs
/// dual-averaging step-size adaptation toward target_accept (Hoffman &
/// Gelman 2014) around expanding diagonal-metric estimation windows
/// (15% initial step-size phase, doubling windows from 25, 10% final
/// phase). Retained draws exclude warmup. Deterministic per (seed, chain).
DrawSet nuts_sample(const LogDensityFn& target, int dim, const SamplerConfig& config,
                    std::vector<std::string> names = {});

/// Rank-normalized split-Rhat (Vehtari et al. 2021). NaN for constant
/// parameters (flagged, not an error).
Eigen::VectorXd split_rhat(const DrawSet& draws);

/// Bulk effective sample size via rank-normalized autocorrelations with
/// Geyer initial-monotone-sequence truncation. NaN for constant parameters.
Eigen::VectorXd ess_bulk(const DrawSet& draws);

struct SummaryRow {
    std::string name;
    double mean, p5, p50, p95, rhat, ess;
};

std::vector<SummaryRow> summarize_draws(const DrawSet& draws);

/// Map every stored draw through `fn` (e.g. unconstrained -> constrained plus
/// derived quantities); sampler stats carry over unchanged.
DrawSet transform_draws(const DrawSet& draws, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                        std::vector<std::string> names);

/// One CSV per chain (<prefix>_chain<k>.csv, header = parameter names, one
/// extra column set: accept_stat, treedepth, divergent, energy).
void save_drawset(const DrawSet& draws, const std::string& out_dir, const std::string& prefix);
DrawSet load_drawset(const std::string& out_dir, const std::string& prefix, int chains);

void save_diagnostics(const std::vector<SummaryRow>& rows, const std::string& path);

/// Interpolated sample quantile (type 7).
double quantile(std::vector<double> values, double q);

}  // namespace epilatent

#endif
