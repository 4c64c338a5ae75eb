#include "epilatent/oracle.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "epilatent/csv.hpp"
#include "epilatent/errors.hpp"

namespace epilatent {

Eigen::MatrixXd conditional_mean(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& phi,
                                 const GeoMixing& wG, const AgeMixing& wI, const Eigen::MatrixXd& y_prev,
                                 double R0) {
    return delta + R0 * (phi.array() * (wG.w * y_prev * wI.w.transpose()).array()).matrix();
}

namespace {

Eigen::MatrixXd excess_kernel(const Eigen::MatrixXd& phi, const GeoMixing& wG, const AgeMixing& wI,
                              const Eigen::MatrixXd& y_prev, double R0) {
    const Eigen::MatrixXd wG2 = wG.w.array().square().matrix();
    const Eigen::MatrixXd wI2 = wI.w.array().square().matrix();
    return R0 * (phi.array().square() * (wG2 * y_prev * wI2.transpose()).array()).matrix();
}

}  // namespace

Eigen::MatrixXd conditional_variance(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& phi,
                                     const GeoMixing& wG, const AgeMixing& wI, const Eigen::MatrixXd& y_prev,
                                     double theta, double psi, double R0) {
    if (!(theta >= 0.0) || !(psi >= 0.0)) throw DomainError("conditional_variance: theta, psi must be >= 0");
    const Eigen::MatrixXd mu = conditional_mean(delta, phi, wG, wI, y_prev, R0);
    const Eigen::MatrixXd v = excess_kernel(phi, wG, wI, y_prev, R0);
    return (mu.array() * (1.0 + psi * mu.array()) + theta * (1.0 + psi) * v.array()).matrix();
}

double conditional_covariance(int g, int i, int a, int b, const Eigen::MatrixXd& phi, const GeoMixing& wG,
                              const AgeMixing& wI, const Eigen::MatrixXd& y_prev, double theta, double R0) {
    if (g == a && i == b) throw DomainError("conditional_covariance: cells must be distinct");
    double acc = 0.0;
    for (int gs = 0; gs < y_prev.rows(); ++gs)
        for (int is = 0; is < y_prev.cols(); ++is)
            acc += wG.w(g, gs) * wI.w(i, is) * wG.w(a, gs) * wI.w(b, is) * y_prev(gs, is);
    return theta * R0 * phi(g, i) * phi(a, b) * acc;
}

namespace {

// per-block accumulators: sums of x, x^2 per cell and x*y per pair
struct BlockStats {
    long long n = 0;
    Eigen::MatrixXd sum, sum_sq;
    std::vector<double> sum_xy;
};

double jackknife_se(const std::vector<double>& leave_one_out, double full) {
    const int B = static_cast<int>(leave_one_out.size());
    double mean = 0.0;
    for (double v : leave_one_out) mean += v;
    mean /= B;
    double ss = 0.0;
    for (double v : leave_one_out) ss += (v - mean) * (v - mean);
    (void)full;
    return std::sqrt(ss * (B - 1.0) / B);
}

}  // namespace

bool MomentReport::all_pass() const {
    for (int g = 0; g < analytic_mean.rows(); ++g)
        for (int i = 0; i < analytic_mean.cols(); ++i) {
            if (std::fabs(analytic_mean(g, i) - empirical_mean(g, i)) > z_threshold * se_mean(g, i)) return false;
            if (std::fabs(analytic_var(g, i) - empirical_var(g, i)) > z_threshold * se_var(g, i)) return false;
        }
    for (std::size_t p = 0; p < pairs.size(); ++p)
        if (std::fabs(analytic_cov[p] - empirical_cov[p]) > z_threshold * se_cov[p]) return false;
    return true;
}

std::string MomentReport::to_csv() const {
    CsvTable t({"statistic", "g", "i", "a", "b", "analytic", "empirical", "se", "pass"});
    auto emit = [&](const char* stat, int g, int i, int a, int b, double an, double em, double se) {
        const bool ok = std::fabs(an - em) <= z_threshold * se;
        t.add_row({stat, std::to_string(g + 1), std::to_string(i + 1),
                   a >= 0 ? std::to_string(a + 1) : "", b >= 0 ? std::to_string(b + 1) : "",
                   format_double(an), format_double(em), format_double(se), ok ? "1" : "0"});
    };
    for (int g = 0; g < analytic_mean.rows(); ++g)
        for (int i = 0; i < analytic_mean.cols(); ++i) {
            emit("mean", g, i, -1, -1, analytic_mean(g, i), empirical_mean(g, i), se_mean(g, i));
            emit("var", g, i, -1, -1, analytic_var(g, i), empirical_var(g, i), se_var(g, i));
        }
    for (std::size_t p = 0; p < pairs.size(); ++p)
        emit("cov", pairs[p].g1, pairs[p].i1, pairs[p].g2, pairs[p].i2, analytic_cov[p], empirical_cov[p],
             se_cov[p]);
    return t.to_string();
}

MomentReport mc_moments(const std::function<Eigen::MatrixXd(Rng&)>& simulate_step, int G, int I,
                        const Eigen::MatrixXd& analytic_mean, const Eigen::MatrixXd& analytic_var,
                        const std::vector<CellPair>& pairs, const std::vector<double>& analytic_cov,
                        long long n_draws, std::uint64_t seed, double z_threshold, int blocks, int jobs) {
    if (n_draws < 10000) throw DomainError("mc_moments: need at least 1e4 draws");
    if (pairs.size() != analytic_cov.size()) throw ShapeError("mc_moments: pairs/cov size mismatch");
    if (blocks < 10) throw DomainError("mc_moments: need at least 10 blocks");

    std::vector<BlockStats> stats(blocks);
    const long long per_block = n_draws / blocks;

    auto run_block = [&](int b) {
        Rng rng(seed, static_cast<std::uint64_t>(b) + 1);
        BlockStats s;
        s.sum = Eigen::MatrixXd::Zero(G, I);
        s.sum_sq = Eigen::MatrixXd::Zero(G, I);
        s.sum_xy.assign(pairs.size(), 0.0);
        const long long n = (b == blocks - 1) ? n_draws - per_block * (blocks - 1) : per_block;
        for (long long d = 0; d < n; ++d) {
            const Eigen::MatrixXd y = simulate_step(rng);
            s.sum += y;
            s.sum_sq += y.cwiseProduct(y);
            for (std::size_t p = 0; p < pairs.size(); ++p)
                s.sum_xy[p] += y(pairs[p].g1, pairs[p].i1) * y(pairs[p].g2, pairs[p].i2);
        }
        s.n = n;
        stats[b] = std::move(s);
    };

    if (jobs <= 1) {
        for (int b = 0; b < blocks; ++b) run_block(b);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < jobs; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const int b = next.fetch_add(1);
                    if (b >= blocks) return;
                    run_block(b);
                }
            });
        for (auto& th : pool) th.join();
    }

    // totals and leave-one-block-out jackknife
    BlockStats total;
    total.sum = Eigen::MatrixXd::Zero(G, I);
    total.sum_sq = Eigen::MatrixXd::Zero(G, I);
    total.sum_xy.assign(pairs.size(), 0.0);
    for (const auto& s : stats) {
        total.n += s.n;
        total.sum += s.sum;
        total.sum_sq += s.sum_sq;
        for (std::size_t p = 0; p < pairs.size(); ++p) total.sum_xy[p] += s.sum_xy[p];
    }

    MomentReport rep;
    rep.z_threshold = z_threshold;
    rep.n_draws = total.n;
    rep.pairs = pairs;
    rep.analytic_mean = analytic_mean;
    rep.analytic_var = analytic_var;
    rep.analytic_cov = analytic_cov;
    rep.empirical_mean.resize(G, I);
    rep.empirical_var.resize(G, I);
    rep.se_mean.resize(G, I);
    rep.se_var.resize(G, I);
    rep.empirical_cov.assign(pairs.size(), 0.0);
    rep.se_cov.assign(pairs.size(), 0.0);

    const double n_all = static_cast<double>(total.n);
    for (int g = 0; g < G; ++g)
        for (int i = 0; i < I; ++i) {
            const double sx = total.sum(g, i), sxx = total.sum_sq(g, i);
            const double mean_full = sx / n_all;
            const double var_full = (sxx - sx * sx / n_all) / (n_all - 1.0);
            rep.empirical_mean(g, i) = mean_full;
            rep.empirical_var(g, i) = var_full;
            std::vector<double> loo_mean(blocks), loo_var(blocks);
            for (int b = 0; b < blocks; ++b) {
                const double n_b = n_all - stats[b].n;
                const double sx_b = sx - stats[b].sum(g, i);
                const double sxx_b = sxx - stats[b].sum_sq(g, i);
                loo_mean[b] = sx_b / n_b;
                loo_var[b] = (sxx_b - sx_b * sx_b / n_b) / (n_b - 1.0);
            }
            rep.se_mean(g, i) = jackknife_se(loo_mean, mean_full);
            rep.se_var(g, i) = jackknife_se(loo_var, var_full);
        }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& pr = pairs[p];
        const double sx = total.sum(pr.g1, pr.i1), sy = total.sum(pr.g2, pr.i2), sxy = total.sum_xy[p];
        const double cov_full = (sxy - sx * sy / n_all) / (n_all - 1.0);
        rep.empirical_cov[p] = cov_full;
        std::vector<double> loo(blocks);
        for (int b = 0; b < blocks; ++b) {
            const double n_b = n_all - stats[b].n;
            const double sx_b = sx - stats[b].sum(pr.g1, pr.i1);
            const double sy_b = sy - stats[b].sum(pr.g2, pr.i2);
            const double sxy_b = sxy - stats[b].sum_xy[p];
            loo[b] = (sxy_b - sx_b * sy_b / n_b) / (n_b - 1.0);
        }
        rep.se_cov[p] = jackknife_se(loo, cov_full);
    }
    return rep;
}

}  // namespace epilatent
