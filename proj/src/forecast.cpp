#include "epilatent/forecast.hpp"

#include <cmath>
#include <limits>

#include "epilatent/csv.hpp"
#include "epilatent/distributions.hpp"
#include "epilatent/errors.hpp"
#include "epilatent/special.hpp"

namespace epilatent {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLambdaGuard = 1e9;

// evenly thinned draw indices over the pooled (chain-major) draws
std::vector<std::pair<int, int>> select_draws(const DrawSet& ds, int max_draws) {
    std::vector<std::pair<int, int>> all;
    for (int c = 0; c < ds.n_chains(); ++c)
        for (int it = 0; it < ds.chains[c].draws.rows(); ++it) all.push_back({c, it});
    if (max_draws <= 0 || static_cast<int>(all.size()) <= max_draws) return all;
    std::vector<std::pair<int, int>> out;
    const double stride = static_cast<double>(all.size()) / max_draws;
    for (int k = 0; k < max_draws; ++k) out.push_back(all[static_cast<std::size_t>(k * stride)]);
    return out;
}

int continue_week(int last_week, int h) { return (last_week - 1 + h) % 52 + 1; }

}  // namespace

double ForecastSet::cell_logpmf(int k, int h, const Eigen::MatrixXd& outcome) const {
    if (outcome.rows() != G || outcome.cols() != I) throw ShapeError("cell_logpmf: outcome must be G x I");
    double lp = 0.0;
    for (int g = 0; g < G; ++g)
        for (int i = 0; i < I; ++i) {
            const long long y = static_cast<long long>(outcome(g, i));
            const std::size_t q = idx(k, h, g, i);
            if (dist == Dist::negbin) {
                lp += negbin_lpmf(y, par1[q], dispersion[k]);
            } else {
                const long long n = static_cast<long long>(size[q]);
                lp += (n == 0) ? ((y == 0) ? 0.0 : kNegInf)
                               : betabinom_lpmf(y, n, par1[q], dispersion[k]);
            }
            if (lp == kNegInf) return kNegInf;
        }
    return lp;
}

ForecastSet posterior_predictive(const RarePosterior& model, const DrawSet& ds, int H, std::uint64_t seed,
                                 int max_draws) {
    if (H < 1) throw ShapeError("posterior_predictive: H must be >= 1");
    const PanelData& panel = model.panel();
    const int G = panel.G, I = panel.I, T = panel.T;
    const auto picks = select_draws(ds, max_draws);
    const int K = static_cast<int>(picks.size());
    if (K < 1) throw ShapeError("posterior_predictive: empty draw set");

    ForecastSet fc;
    fc.K = K;
    fc.H = H;
    fc.G = G;
    fc.I = I;
    fc.dist = ForecastSet::Dist::negbin;
    fc.draws.assign(static_cast<std::size_t>(K) * H * G * I, 0);
    fc.par1.assign(fc.draws.size(), 0.0);
    fc.dispersion.assign(K, 0.0);

    const Eigen::MatrixXd last_counts = panel.counts_at(T - 1);
    const int last_week = panel.week_of_year[T - 1];
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(G, I);
    const Variant variant = model.variant();

    for (int k = 0; k < K; ++k) {
        const auto [c, it] = picks[k];
        const RareDraw d = model.decode(ds.chains[c].draws.row(it).transpose());
        const RareDiseaseParams& p = d.params;
        fc.dispersion[k] = p.psi;

        GeoMixing wG;
        AgeMixing wI;
        Eigen::MatrixXd phi;
        if (variant != Variant::naive) {
            wG = geo_weights_power_decay(model.orders(), p.rho);
            wI = (variant == Variant::full) ? normalize_contact(p.contact)
                                            : eigen_deformation(model.options().known_contact, d.kappa);
            phi = susceptibility(p, panel.populations);
        }

        Rng rng(seed, static_cast<std::uint64_t>(k) + 1);
        Eigen::MatrixXd prev = last_counts;
        for (int h = 1; h <= H; ++h) {
            const Eigen::MatrixXd delta =
                endemic_rate(p, panel.populations, T + h, continue_week(last_week, h));
            Eigen::MatrixXd lambda;
            if (variant == Variant::naive) {
                lambda = delta;
            } else {
                const Eigen::MatrixXd r = (variant == Variant::full)
                                              ? sample_latent(prev, ones, p.theta, rng)
                                              : (model.options().R0 * prev).eval();
                lambda = linear_predictor(delta, phi, wG, wI, r);
            }
            for (int g = 0; g < G; ++g)
                for (int i = 0; i < I; ++i) {
                    const double lam = lambda(g, i);
                    if (!std::isfinite(lam) || lam > kLambdaGuard)
                        throw NumericError("posterior_predictive: forecast path diverged");
                    const std::size_t q = fc.idx(k, h - 1, g, i);
                    fc.par1[q] = lam;
                    const long long y = rng.neg_binomial(lam, p.psi);
                    fc.draws[q] = y;
                    prev(g, i) = static_cast<double>(y);
                }
        }
    }
    return fc;
}

ForecastSet posterior_predictive(const OutbreakPosterior& model, const DrawSet& ds, int H, std::uint64_t seed,
                                 int max_draws) {
    if (H < 1) throw ShapeError("posterior_predictive: H must be >= 1");
    const PanelData& panel = model.panel();
    const int G = panel.G, I = panel.I, T = panel.T;
    const auto picks = select_draws(ds, max_draws);
    const int K = static_cast<int>(picks.size());
    if (K < 1) throw ShapeError("posterior_predictive: empty draw set");

    ForecastSet fc;
    fc.K = K;
    fc.H = H;
    fc.G = G;
    fc.I = I;
    fc.dist = ForecastSet::Dist::betabinom;
    fc.draws.assign(static_cast<std::size_t>(K) * H * G * I, 0);
    fc.par1.assign(fc.draws.size(), 0.0);
    fc.size.assign(fc.draws.size(), 0.0);
    fc.dispersion.assign(K, 0.0);

    std::vector<Eigen::MatrixXd> base_history;
    for (int t = 0; t < T; ++t) base_history.push_back(panel.counts_at(t));

    for (int k = 0; k < K; ++k) {
        const auto [c, it] = picks[k];
        const OutbreakDraw d = model.decode(ds.chains[c].draws.row(it).transpose());
        const OutbreakParams& p = d.params;
        fc.dispersion[k] = p.k_precision;

        const GeoMixing wG = geo_weights_gravity(model.distance(), p.tau, p.rho_geo);
        const AgeMixing wI = normalize_contact(p.contact);
        const Eigen::VectorXd activity = activity_from_contact(p.contact);
        // the reproduction multiplier is only sampled through week T; future
        // weeks carry the last value forward
        const double r_mult = std::exp(p.log_R.back());
        Eigen::MatrixXd mean_mult(G, I);
        for (int g = 0; g < G; ++g)
            for (int i = 0; i < I; ++i) mean_mult(g, i) = r_mult * activity[i];

        Rng rng(seed, static_cast<std::uint64_t>(k) + 1);
        std::vector<Eigen::MatrixXd> history = base_history;
        for (int h = 1; h <= H; ++h) {
            const Eigen::MatrixXd y_hat = prevalence_estimate(history, p.gamma_decay);
            const Eigen::MatrixXd x_hat = susceptible_estimate(history, panel.populations);
            const Eigen::MatrixXd r = sample_latent(y_hat, mean_mult, p.theta, rng);
            const Eigen::MatrixXd prob = infection_probability(p.delta, panel.populations, wG, wI, r);
            Eigen::MatrixXd y_new(G, I);
            for (int g = 0; g < G; ++g)
                for (int i = 0; i < I; ++i) {
                    const std::size_t q = fc.idx(k, h - 1, g, i);
                    const long long n = static_cast<long long>(x_hat(g, i));
                    fc.size[q] = static_cast<double>(n);
                    fc.par1[q] = prob(g, i);
                    const long long y = (n > 0) ? rng.beta_binomial(n, prob(g, i), p.k_precision) : 0;
                    fc.draws[q] = y;
                    y_new(g, i) = static_cast<double>(y);
                }
            history.push_back(std::move(y_new));
        }
    }
    return fc;
}

LogScoreResult log_score(const ForecastSet& fc, const Eigen::MatrixXd& truth, int h) {
    if (h < 1 || h > fc.H) throw ShapeError("log_score: horizon outside 1..H");
    std::vector<double> joint(fc.K);
    for (int k = 0; k < fc.K; ++k) joint[k] = fc.cell_logpmf(k, h - 1, truth);
    const double lse = log_sum_exp(joint);
    LogScoreResult out;
    if (lse == kNegInf) {
        out.value = kNegInf;
        out.degenerate = true;
        return out;
    }
    out.value = lse - std::log(static_cast<double>(fc.K));
    return out;
}

ScoreTable paired_scores(const std::vector<std::vector<double>>& scores_a,
                         const std::vector<std::vector<double>>& scores_b) {
    if (scores_a.size() != scores_b.size() || scores_a.empty())
        throw ShapeError("paired_scores: dataset sets must match and be nonempty");
    const std::size_t D = scores_a.size();
    const std::size_t H = scores_a[0].size();
    for (std::size_t d = 0; d < D; ++d)
        if (scores_a[d].size() != H || scores_b[d].size() != H)
            throw ShapeError("paired_scores: ragged horizon lists");

    ScoreTable t;
    t.mean_diff.resize(H);
    t.se.resize(H);
    t.diffs.assign(H, std::vector<double>(D));
    for (std::size_t h = 0; h < H; ++h) {
        double mean = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
            t.diffs[h][d] = scores_a[d][h] - scores_b[d][h];
            mean += t.diffs[h][d];
        }
        mean /= static_cast<double>(D);
        t.mean_diff[h] = mean;
        double ss = 0.0;
        for (std::size_t d = 0; d < D; ++d) ss += (t.diffs[h][d] - mean) * (t.diffs[h][d] - mean);
        t.se[h] = (D > 1) ? std::sqrt(ss / (static_cast<double>(D) * (static_cast<double>(D) - 1.0))) : 0.0;
    }
    return t;
}

std::string ScoreTable::to_csv() const {
    CsvTable t({"h", "mean_diff", "se", "lo95", "hi95"});
    for (int h = 0; h < horizons(); ++h)
        t.add_row({std::to_string(h + 1), format_double(mean_diff[h]), format_double(se[h]),
                   format_double(mean_diff[h] - 1.96 * se[h]), format_double(mean_diff[h] + 1.96 * se[h])});
    return t.to_string();
}

}  // namespace epilatent
