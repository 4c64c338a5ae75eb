#include "epilatent/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <thread>

#include "epilatent/csv.hpp"
#include "epilatent/errors.hpp"
#include "epilatent/rng.hpp"
#include "epilatent/special.hpp"

namespace epilatent {

namespace {

constexpr double kMaxEnergyChange = 1000.0;  // divergence threshold
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double log_add_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// one evaluated phase-space point
struct Point {
    Eigen::VectorXd q, p, grad;
    double logp = -kInf;
    double hamiltonian(const Eigen::VectorXd& inv_metric) const {
        return -logp + 0.5 * p.dot(inv_metric.cwiseProduct(p));
    }
};

struct Subtree {
    Point minus, plus;     // trajectory endpoints
    Point proposal;
    double h_proposal = kInf;
    Eigen::VectorXd rho;   // momentum sum over leaves
    double log_weight = -kInf;
    double sum_accept = 0.0;
    long long n_leaf = 0;
    bool divergent = false;
    bool ok = false;       // no divergence and no internal U-turn
};

class NutsChain {
public:
    NutsChain(const LogDensityFn& target, int dim, const SamplerConfig& cfg, Rng rng)
        : target_(target), dim_(dim), cfg_(cfg), rng_(std::move(rng)) {
        inv_metric_ = Eigen::VectorXd::Ones(dim);
    }

    ChainResult run() {
        initialize();
        ChainResult res;
        res.draws.resize(cfg_.sampling, dim_);
        res.accept_stat.reserve(cfg_.sampling);
        res.energy.reserve(cfg_.sampling);
        res.treedepth.reserve(cfg_.sampling);
        res.divergent.reserve(cfg_.sampling);

        const AdaptSchedule sched = make_schedule(cfg_.warmup);
        step_size_ = find_initial_step_size();
        da_reset(step_size_);
        WelfordAccumulator welford(dim_);
        int window_end = sched.metric_windows.empty() ? -1 : sched.metric_windows.front();
        std::size_t window_idx = 0;

        for (int it = 0; it < cfg_.warmup; ++it) {
            const Transition tr = transition();
            da_update(tr.accept_stat);
            const bool in_metric_phase = it >= sched.init_buffer && it < cfg_.warmup - sched.term_buffer;
            if (in_metric_phase && !sched.metric_windows.empty()) {
                welford.add(q_);
                if (it + 1 == window_end) {
                    inv_metric_ = welford.regularized_variance();
                    welford = WelfordAccumulator(dim_);
                    step_size_ = find_initial_step_size();
                    da_reset(step_size_);
                    ++window_idx;
                    window_end = window_idx < sched.metric_windows.size()
                                     ? sched.metric_windows[window_idx]
                                     : -1;
                }
            }
        }
        // freeze adaptation at the averaged step size
        if (cfg_.warmup > 0) step_size_ = std::exp(da_log_eps_bar_);

        for (int it = 0; it < cfg_.sampling; ++it) {
            const Transition tr = transition();
            res.draws.row(it) = q_.transpose();
            res.accept_stat.push_back(tr.accept_stat);
            res.energy.push_back(tr.energy);
            res.treedepth.push_back(tr.treedepth);
            res.divergent.push_back(tr.divergent ? 1 : 0);
            if (tr.divergent) ++res.divergences;
        }
        res.step_size = step_size_;
        res.inv_metric = inv_metric_;
        return res;
    }

private:
    struct Transition {
        double accept_stat = 0.0;
        double energy = 0.0;
        int treedepth = 0;
        bool divergent = false;
    };

    struct AdaptSchedule {
        int init_buffer = 0, term_buffer = 0;
        std::vector<int> metric_windows;  // end iterations (exclusive-ish markers)
    };

    class WelfordAccumulator {
    public:
        explicit WelfordAccumulator(int dim)
            : n_(0), mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::VectorXd::Zero(dim)) {}
        void add(const Eigen::VectorXd& x) {
            ++n_;
            const Eigen::VectorXd d = x - mean_;
            mean_ += d / static_cast<double>(n_);
            m2_ += d.cwiseProduct(x - mean_);
        }
        Eigen::VectorXd regularized_variance() const {
            Eigen::VectorXd v = Eigen::VectorXd::Constant(mean_.size(), 1e-3);
            if (n_ > 1) {
                const double n = static_cast<double>(n_);
                const Eigen::VectorXd raw = m2_ / (n - 1.0);
                v = (n / (n + 5.0)) * raw.array() + 1e-3 * (5.0 / (n + 5.0));
            }
            return v;
        }

    private:
        long long n_;
        Eigen::VectorXd mean_, m2_;
    };

    static AdaptSchedule make_schedule(int warmup) {
        AdaptSchedule s;
        if (warmup < 20) {
            s.init_buffer = warmup;
            return s;
        }
        s.init_buffer = static_cast<int>(std::lround(0.15 * warmup));
        s.term_buffer = static_cast<int>(std::lround(0.10 * warmup));
        int start = s.init_buffer;
        const int end = warmup - s.term_buffer;
        int width = 25;
        while (start < end) {
            int next = start + width;
            // absorb a final stub window
            if (next + 2 * width > end) next = end;
            s.metric_windows.push_back(next);
            start = next;
            width *= 2;
        }
        return s;
    }

    void initialize() {
        if (cfg_.init) {
            q_ = *cfg_.init;
            Eigen::VectorXd grad(dim_);
            const double lp = target_(q_, &grad);
            if (!std::isfinite(lp) || !grad.allFinite())
                throw NumericError("nuts_sample: supplied init point has non-finite density or gradient");
            logp_ = lp;
            grad_ = grad;
            return;
        }
        for (int attempt = 0; attempt < 100; ++attempt) {
            Eigen::VectorXd q(dim_);
            for (int d = 0; d < dim_; ++d) q[d] = rng_.uniform(-cfg_.init_radius, cfg_.init_radius);
            Eigen::VectorXd grad(dim_);
            const double lp = target_(q, &grad);
            if (std::isfinite(lp) && grad.allFinite()) {
                q_ = q;
                logp_ = lp;
                grad_ = grad;
                return;
            }
        }
        throw NumericError("nuts_sample: no finite initialization found in 100 jittered attempts");
    }

    Eigen::VectorXd sample_momentum() {
        Eigen::VectorXd p(dim_);
        for (int d = 0; d < dim_; ++d) p[d] = rng_.normal() / std::sqrt(inv_metric_[d]);
        return p;
    }

    // velocity = M^{-1} p
    Eigen::VectorXd velocity(const Eigen::VectorXd& p) const { return inv_metric_.cwiseProduct(p); }

    Point leapfrog(const Point& from, double eps) const {
        Point out;
        out.p = from.p + 0.5 * eps * from.grad;
        out.q = from.q + eps * velocity(out.p);
        out.grad.resize(dim_);
        out.logp = target_(out.q, &out.grad);
        if (!std::isfinite(out.logp) || !out.grad.allFinite()) {
            out.logp = -kInf;
            out.grad.setZero();
            return out;
        }
        out.p += 0.5 * eps * out.grad;
        return out;
    }

    Subtree build_leaf(const Point& from, double eps, double h0) {
        Subtree t;
        const Point next = leapfrog(from, eps);
        const double h = next.hamiltonian(inv_metric_);
        const double dh = h - h0;  // energy error
        t.divergent = !(dh < kMaxEnergyChange);
        t.minus = next;
        t.plus = next;
        t.proposal = next;
        t.h_proposal = h;
        t.rho = next.p;
        t.log_weight = std::isfinite(dh) ? -dh : -kInf;
        t.sum_accept = std::isfinite(dh) ? std::min(1.0, std::exp(-dh)) : 0.0;
        t.n_leaf = 1;
        t.ok = !t.divergent;
        return t;
    }

    Subtree build_tree(int depth, const Point& from, double eps, double h0) {
        if (depth == 0) return build_leaf(from, eps, h0);
        Subtree left = build_tree(depth - 1, from, eps, h0);
        if (!left.ok) return left;
        Subtree right = build_tree(depth - 1, eps > 0 ? left.plus : left.minus, eps, h0);

        Subtree merged;
        merged.sum_accept = left.sum_accept + right.sum_accept;
        merged.n_leaf = left.n_leaf + right.n_leaf;
        merged.divergent = right.divergent;
        if (!right.ok) {
            merged.ok = false;
            return merged;
        }
        merged.minus = (eps > 0) ? left.minus : right.minus;
        merged.plus = (eps > 0) ? right.plus : left.plus;
        merged.log_weight = log_add_exp(left.log_weight, right.log_weight);
        // multinomial proposal within the subtree
        const double pick_right = std::exp(right.log_weight - merged.log_weight);
        if (rng_.uniform() < pick_right) {
            merged.proposal = right.proposal;
            merged.h_proposal = right.h_proposal;
        } else {
            merged.proposal = left.proposal;
            merged.h_proposal = left.h_proposal;
        }
        merged.rho = left.rho + right.rho;
        const bool no_uturn = velocity(merged.minus.p).dot(merged.rho) > 0.0 &&
                              velocity(merged.plus.p).dot(merged.rho) > 0.0;
        merged.ok = no_uturn;
        return merged;
    }

    Transition transition() {
        Point current;
        current.q = q_;
        current.grad = grad_;
        current.logp = logp_;
        current.p = sample_momentum();
        const double h0 = current.hamiltonian(inv_metric_);

        Point chosen = current;
        double chosen_h = h0;
        Point fwd = current, bwd = current;
        Eigen::VectorXd rho = current.p;
        double log_weight = 0.0;  // weight of the initial point relative to h0
        double sum_accept = 0.0;
        long long n_leaf = 0;
        bool divergent = false;
        int depth = 0;

        while (depth < cfg_.max_treedepth) {
            const double dir = (rng_.uniform() < 0.5) ? -1.0 : 1.0;
            const Subtree sub = build_tree(depth, dir > 0 ? fwd : bwd, dir * step_size_, h0);
            sum_accept += sub.sum_accept;
            n_leaf += sub.n_leaf;
            if (sub.divergent) divergent = true;
            if (!sub.ok) break;
            if (dir > 0)
                fwd = sub.plus;
            else
                bwd = sub.minus;
            // biased progressive sampling across doublings
            if (std::log(rng_.uniform()) < sub.log_weight - log_weight) {
                chosen = sub.proposal;
                chosen_h = sub.h_proposal;
            }
            log_weight = log_add_exp(log_weight, sub.log_weight);
            rho += sub.rho;
            ++depth;
            const bool no_uturn =
                velocity(bwd.p).dot(rho) > 0.0 && velocity(fwd.p).dot(rho) > 0.0;
            if (!no_uturn) break;
        }

        q_ = chosen.q;
        grad_ = chosen.grad;
        logp_ = chosen.logp;

        Transition tr;
        tr.accept_stat = (n_leaf > 0) ? sum_accept / static_cast<double>(n_leaf) : 0.0;
        tr.energy = chosen_h;
        tr.treedepth = depth;
        tr.divergent = divergent;
        return tr;
    }

    double find_initial_step_size() {
        // Hoffman & Gelman heuristic: double/halve one leapfrog step until the
        // acceptance probability crosses 1/2.
        double eps = 1.0;
        Point start;
        start.q = q_;
        start.grad = grad_;
        start.logp = logp_;
        start.p = sample_momentum();
        const double h0 = start.hamiltonian(inv_metric_);
        auto accept_logprob = [&](double e) {
            const Point next = leapfrog(start, e);
            const double h = next.hamiltonian(inv_metric_);
            return std::isfinite(h) ? h0 - h : -kInf;
        };
        double alog = accept_logprob(eps);
        while (!std::isfinite(alog) && eps > 1e-10) {
            eps *= 0.5;
            alog = accept_logprob(eps);
        }
        const double sign = (alog > std::log(0.5)) ? 1.0 : -1.0;
        for (int iter = 0; iter < 50; ++iter) {
            if (sign * alog <= sign * std::log(0.5)) break;
            eps *= std::pow(2.0, sign);
            if (eps < 1e-10 || eps > 1e7) break;
            alog = accept_logprob(eps);
            if (!std::isfinite(alog)) {
                eps *= 0.5;
                break;
            }
        }
        return eps;
    }

    void da_reset(double eps) {
        da_mu_ = std::log(10.0 * eps);
        da_log_eps_bar_ = std::log(eps);
        da_h_bar_ = 0.0;
        da_count_ = 0;
    }

    void da_update(double accept_stat) {
        // dual averaging (Hoffman & Gelman 2014): gamma 0.05, t0 10, kappa 0.75
        ++da_count_;
        const double m = static_cast<double>(da_count_);
        da_h_bar_ = (1.0 - 1.0 / (m + 10.0)) * da_h_bar_ +
                    (cfg_.target_accept - accept_stat) / (m + 10.0);
        const double log_eps = da_mu_ - std::sqrt(m) / 0.05 * da_h_bar_;
        const double w = std::pow(m, -0.75);
        da_log_eps_bar_ = w * log_eps + (1.0 - w) * da_log_eps_bar_;
        step_size_ = std::exp(log_eps);
    }

    const LogDensityFn& target_;
    int dim_;
    SamplerConfig cfg_;
    Rng rng_;
    Eigen::VectorXd inv_metric_;
    Eigen::VectorXd q_, grad_;
    double logp_ = -kInf;
    double step_size_ = 1.0;
    double da_mu_ = 0.0, da_log_eps_bar_ = 0.0, da_h_bar_ = 0.0;
    long long da_count_ = 0;
};

}  // namespace

void SamplerConfig::validate() const {
    if (chains < 1 || warmup < 0 || sampling < 1) throw ConfigError("sampler: chains/warmup/sampling out of range");
    if (!(target_accept > 0.0) || !(target_accept < 1.0))
        throw ConfigError("sampler: target_accept must lie in (0,1)");
    if (max_treedepth < 1 || max_treedepth > 14) throw ConfigError("sampler: max_treedepth out of range");
}

int DrawSet::total_divergences() const {
    int n = 0;
    for (const auto& c : chains) n += c.divergences;
    return n;
}

Eigen::VectorXd DrawSet::pooled(int param) const {
    Eigen::VectorXd out(static_cast<long long>(n_chains()) * iters());
    int pos = 0;
    for (const auto& c : chains)
        for (int it = 0; it < c.draws.rows(); ++it) out[pos++] = c.draws(it, param);
    return out;
}

DrawSet nuts_sample(const LogDensityFn& target, int dim, const SamplerConfig& config,
                    std::vector<std::string> names) {
    config.validate();
    if (dim < 1) throw ShapeError("nuts_sample: dim must be >= 1");
    if (names.empty())
        for (int d = 0; d < dim; ++d) names.push_back("p[" + std::to_string(d + 1) + "]");
    if (static_cast<int>(names.size()) != dim) throw ShapeError("nuts_sample: names/dim mismatch");

    DrawSet ds;
    ds.names = std::move(names);
    ds.chains.resize(config.chains);

    std::atomic<int> next{0};
    std::vector<std::string> errors(config.chains);
    auto worker = [&] {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= config.chains) return;
            try {
                NutsChain chain(target, dim, config, Rng(config.seed, static_cast<std::uint64_t>(c) + 1));
                ds.chains[c] = chain.run();
            } catch (const std::exception& e) {
                errors[c] = e.what();
            }
        }
    };
    const int jobs = std::max(1, std::min(config.jobs, config.chains));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (int c = 0; c < config.chains; ++c)
        if (!errors[c].empty()) throw NumericError("chain " + std::to_string(c + 1) + ": " + errors[c]);
    return ds;
}

// ---------------------------------------------------------------------------
// diagnostics

namespace {

// split every chain in half; returns matrix columns = split chains
std::vector<Eigen::VectorXd> split_chains(const DrawSet& ds, int param) {
    std::vector<Eigen::VectorXd> out;
    const int n = ds.iters();
    const int half = n / 2;
    if (half < 2) throw ShapeError("diagnostics: need at least 4 retained iterations");
    for (const auto& c : ds.chains) {
        out.push_back(c.draws.col(param).head(half));
        out.push_back(c.draws.col(param).tail(half));
    }
    return out;
}

bool is_constant(const std::vector<Eigen::VectorXd>& chains) {
    const double v0 = chains[0][0];
    for (const auto& c : chains)
        for (int i = 0; i < c.size(); ++i)
            if (c[i] != v0) return false;
    return true;
}

// rank-normalize pooled values (average ranks for ties, then inverse normal)
std::vector<Eigen::VectorXd> rank_normalize(const std::vector<Eigen::VectorXd>& chains) {
    const int m = static_cast<int>(chains.size());
    const int n = static_cast<int>(chains[0].size());
    const long long total = static_cast<long long>(m) * n;
    std::vector<std::pair<double, long long>> pooled;
    pooled.reserve(total);
    for (int c = 0; c < m; ++c)
        for (int i = 0; i < n; ++i) pooled.push_back({chains[c][i], static_cast<long long>(c) * n + i});
    std::sort(pooled.begin(), pooled.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> rank(total);
    long long i = 0;
    while (i < total) {
        long long j = i;
        while (j + 1 < total && pooled[j + 1].first == pooled[i].first) ++j;
        const double avg = 0.5 * (i + j) + 1.0;  // average 1-based rank
        for (long long k = i; k <= j; ++k) rank[pooled[k].second] = avg;
        i = j + 1;
    }
    std::vector<Eigen::VectorXd> out(m, Eigen::VectorXd(n));
    const double denom = static_cast<double>(total) + 0.25;
    for (int c = 0; c < m; ++c)
        for (int k = 0; k < n; ++k)
            out[c][k] = inv_norm_cdf((rank[static_cast<long long>(c) * n + k] - 0.375) / denom);
    return out;
}

struct ChainVariance {
    double within = 0.0;     // W
    double var_plus = 0.0;   // (n-1)/n W + B/n
};

ChainVariance chain_variances(const std::vector<Eigen::VectorXd>& chains) {
    const int m = static_cast<int>(chains.size());
    const int n = static_cast<int>(chains[0].size());
    Eigen::VectorXd means(m), vars(m);
    for (int c = 0; c < m; ++c) {
        means[c] = chains[c].mean();
        vars[c] = (chains[c].array() - means[c]).square().sum() / (n - 1.0);
    }
    const double grand = means.mean();
    const double b_over_n = (means.array() - grand).square().sum() / (m - 1.0);  // B/n
    ChainVariance cv;
    cv.within = vars.mean();
    cv.var_plus = (n - 1.0) / n * cv.within + b_over_n;
    return cv;
}

double rhat_from(const std::vector<Eigen::VectorXd>& chains) {
    const ChainVariance cv = chain_variances(chains);
    if (!(cv.within > 0.0)) return kNan;
    return std::sqrt(cv.var_plus / cv.within);
}

double ess_from(const std::vector<Eigen::VectorXd>& chains) {
    const int m = static_cast<int>(chains.size());
    const int n = static_cast<int>(chains[0].size());
    const ChainVariance cv = chain_variances(chains);
    if (!(cv.var_plus > 0.0)) return kNan;

    // per-chain autocovariances (biased, 1/n normalization)
    std::vector<Eigen::VectorXd> centered(m);
    for (int c = 0; c < m; ++c) centered[c] = chains[c].array() - chains[c].mean();
    auto mean_autocov = [&](int lag) {
        double acc = 0.0;
        for (int c = 0; c < m; ++c) {
            double s = 0.0;
            for (int i = 0; i + lag < n; ++i) s += centered[c][i] * centered[c][i + lag];
            acc += s / n;
        }
        return acc / m;
    };

    const double c0 = mean_autocov(0) * n / (n - 1.0);
    (void)c0;
    double tau = 1.0;  // 1 + 2 sum rho_t, built from Geyer pairs
    double prev_pair = kInf;
    double rho_prev = 1.0 - (cv.within - mean_autocov(1)) / cv.var_plus;  // rho_1
    // P_0 = rho_0 + rho_1 with rho_0 = 1
    double pair = 1.0 + rho_prev;
    int lag = 1;
    double sum_pairs = 0.0;
    while (pair > 0.0 && lag + 2 < n) {
        pair = std::min(pair, prev_pair);  // enforce monotone nonincreasing
        sum_pairs += pair;
        prev_pair = pair;
        const double rho_a = 1.0 - (cv.within - mean_autocov(lag + 1)) / cv.var_plus;
        const double rho_b = 1.0 - (cv.within - mean_autocov(lag + 2)) / cv.var_plus;
        pair = rho_a + rho_b;
        lag += 2;
    }
    tau = -1.0 + 2.0 * sum_pairs;
    if (!(tau > 0.0)) tau = 1e-8;
    const double ess = static_cast<double>(m) * n / tau;
    // the estimator is unreliable past m*n*log10(m*n) (too few lags); cap
    const double cap = static_cast<double>(m) * n * std::log10(static_cast<double>(m) * n);
    return std::min(ess, cap);
}

}  // namespace

Eigen::VectorXd split_rhat(const DrawSet& ds) {
    if (ds.n_chains() < 2) throw ShapeError("split_rhat: need at least 2 chains");
    Eigen::VectorXd out(ds.dim());
    for (int p = 0; p < ds.dim(); ++p) {
        const auto chains = split_chains(ds, p);
        if (is_constant(chains)) {
            out[p] = kNan;
            continue;
        }
        out[p] = rhat_from(rank_normalize(chains));
    }
    return out;
}

Eigen::VectorXd ess_bulk(const DrawSet& ds) {
    if (ds.n_chains() < 1) throw ShapeError("ess_bulk: empty draw set");
    Eigen::VectorXd out(ds.dim());
    for (int p = 0; p < ds.dim(); ++p) {
        const auto chains = split_chains(ds, p);
        if (is_constant(chains)) {
            out[p] = kNan;
            continue;
        }
        out[p] = ess_from(rank_normalize(chains));
    }
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ShapeError("quantile: empty input");
    std::sort(values.begin(), values.end());
    const double pos = q * (values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - lo;
    return (1.0 - frac) * values[lo] + frac * values[hi];
}

std::vector<SummaryRow> summarize_draws(const DrawSet& ds) {
    const Eigen::VectorXd rhat = split_rhat(ds);
    const Eigen::VectorXd ess = ess_bulk(ds);
    std::vector<SummaryRow> rows;
    for (int p = 0; p < ds.dim(); ++p) {
        const Eigen::VectorXd pooled = ds.pooled(p);
        std::vector<double> v(pooled.data(), pooled.data() + pooled.size());
        SummaryRow r;
        r.name = ds.names[p];
        r.mean = pooled.mean();
        r.p5 = quantile(v, 0.05);
        r.p50 = quantile(v, 0.50);
        r.p95 = quantile(v, 0.95);
        r.rhat = rhat[p];
        r.ess = ess[p];
        rows.push_back(std::move(r));
    }
    return rows;
}

DrawSet transform_draws(const DrawSet& ds, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                        std::vector<std::string> names) {
    DrawSet out;
    out.names = std::move(names);
    out.chains.resize(ds.n_chains());
    for (int c = 0; c < ds.n_chains(); ++c) {
        const ChainResult& src = ds.chains[c];
        ChainResult& dst = out.chains[c];
        dst = src;
        dst.draws.resize(src.draws.rows(), static_cast<int>(out.names.size()));
        for (int it = 0; it < src.draws.rows(); ++it) {
            const Eigen::VectorXd mapped = fn(src.draws.row(it).transpose());
            if (mapped.size() != static_cast<long long>(out.names.size()))
                throw ShapeError("transform_draws: mapped dimension mismatch");
            dst.draws.row(it) = mapped.transpose();
        }
    }
    return out;
}

void save_drawset(const DrawSet& ds, const std::string& out_dir, const std::string& prefix) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    for (int c = 0; c < ds.n_chains(); ++c) {
        std::vector<std::string> header = ds.names;
        header.insert(header.end(), {"accept_stat__", "treedepth__", "divergent__", "energy__"});
        CsvTable t(header);
        const ChainResult& cr = ds.chains[c];
        for (int it = 0; it < cr.draws.rows(); ++it) {
            std::vector<std::string> row;
            row.reserve(header.size());
            for (int p = 0; p < cr.draws.cols(); ++p) row.push_back(format_double(cr.draws(it, p)));
            row.push_back(format_double(cr.accept_stat[it]));
            row.push_back(std::to_string(cr.treedepth[it]));
            row.push_back(std::to_string(static_cast<int>(cr.divergent[it])));
            row.push_back(format_double(cr.energy[it]));
            t.add_row(std::move(row));
        }
        t.write_file((fs::path(out_dir) / (prefix + "_chain" + std::to_string(c + 1) + ".csv")).string());
    }
}

DrawSet load_drawset(const std::string& out_dir, const std::string& prefix, int chains) {
    namespace fs = std::filesystem;
    DrawSet ds;
    for (int c = 0; c < chains; ++c) {
        const CsvTable t =
            CsvTable::read_file((fs::path(out_dir) / (prefix + "_chain" + std::to_string(c + 1) + ".csv")).string());
        const int ncol = static_cast<int>(t.header().size());
        if (ncol < 5) throw ShapeError("load_drawset: malformed chain file");
        const int dim = ncol - 4;
        if (c == 0) ds.names.assign(t.header().begin(), t.header().begin() + dim);
        ChainResult cr;
        cr.draws.resize(static_cast<int>(t.rows()), dim);
        for (std::size_t r = 0; r < t.rows(); ++r) {
            for (int p = 0; p < dim; ++p) cr.draws(static_cast<int>(r), p) = t.cell_double(r, p);
            cr.accept_stat.push_back(t.cell_double(r, dim));
            cr.treedepth.push_back(static_cast<int>(t.cell_int(r, dim + 1)));
            cr.divergent.push_back(static_cast<std::uint8_t>(t.cell_int(r, dim + 2)));
            cr.energy.push_back(t.cell_double(r, dim + 3));
            if (cr.divergent.back()) ++cr.divergences;
        }
        cr.inv_metric = Eigen::VectorXd::Ones(dim);
        ds.chains.push_back(std::move(cr));
    }
    return ds;
}

void save_diagnostics(const std::vector<SummaryRow>& rows, const std::string& path) {
    CsvTable t({"parameter", "rhat", "ess", "mean", "p5", "p50", "p95"});
    for (const auto& r : rows)
        t.add_row({r.name, format_double(r.rhat), format_double(r.ess), format_double(r.mean),
                   format_double(r.p5), format_double(r.p50), format_double(r.p95)});
    t.write_file(path);
}

}  // namespace epilatent
