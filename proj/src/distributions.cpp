#include "epilatent/distributions.hpp"

#include <cmath>
#include <limits>

#include "epilatent/errors.hpp"
#include "epilatent/special.hpp"

namespace epilatent {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2*pi)

// Above this size the NegBin is numerically a Poisson; the lgamma form would
// cancel catastrophically, so use the expansion in psi instead.
constexpr double kNegbinPoissonSize = 1e8;

// Exact O(n) product form of the beta-binomial below this size.
constexpr long long kBetabinomExactMax = 512;

}  // namespace

double poisson_lpmf(long long y, double mu) {
    if (y < 0) return kNegInf;
    if (mu <= 0.0) return (y == 0) ? 0.0 : kNegInf;
    return y * std::log(mu) - mu - std::lgamma(static_cast<double>(y) + 1.0);
}

double negbin_lpmf(long long y, double mu, double psi) {
    if (!(mu > 0.0) || !(psi >= 0.0)) throw DomainError("negbin_lpmf: need mu > 0 and psi >= 0");
    if (y < 0) return kNegInf;
    const double yd = static_cast<double>(y);
    if (psi == 0.0 || 1.0 / psi > kNegbinPoissonSize)
        return poisson_lpmf(y, mu) + 0.5 * psi * ((yd - mu) * (yd - mu) - yd);
    const double n = 1.0 / psi;
    return std::lgamma(yd + n) - std::lgamma(n) - std::lgamma(yd + 1.0) + n * std::log(n / (n + mu)) +
           yd * std::log(mu / (n + mu));
}

NegbinGrad negbin_lpmf_grad(long long y, double mu, double psi) {
    if (!(mu > 0.0) || !(psi > 0.0)) throw DomainError("negbin_lpmf_grad: need mu > 0 and psi > 0");
    if (y < 0) return {kNegInf, 0.0, 0.0};
    const double yd = static_cast<double>(y);
    if (1.0 / psi > kNegbinPoissonSize) {
        const double corr = 0.5 * ((yd - mu) * (yd - mu) - yd);
        return {poisson_lpmf(y, mu) + psi * corr,
                yd / mu - 1.0 + psi * (mu - yd),
                corr};
    }
    const double n = 1.0 / psi;
    const double lp = std::lgamma(yd + n) - std::lgamma(n) - std::lgamma(yd + 1.0) +
                      n * std::log(n / (n + mu)) + yd * std::log(mu / (n + mu));
    const double d_mu = yd / mu - (yd + n) / (n + mu);
    const double d_n =
        digamma(yd + n) - digamma(n) + std::log(n / (n + mu)) + 1.0 - (yd + n) / (n + mu);
    return {lp, d_mu, -d_n * n * n};  // dn/dpsi = -1/psi^2
}

double binomial_lpmf(long long y, long long n, double p) {
    if (y < 0 || y > n) return kNegInf;
    if (p <= 0.0) return (y == 0) ? 0.0 : kNegInf;
    if (p >= 1.0) return (y == n) ? 0.0 : kNegInf;
    const double yd = static_cast<double>(y), nd = static_cast<double>(n);
    return lchoose(nd, yd) + yd * std::log(p) + (nd - yd) * std::log1p(-p);
}

namespace {

// sum_{j=0}^{m-1} log(a + j), exact product form
double log_rising(double a, long long m) {
    double s = 0.0;
    for (long long j = 0; j < m; ++j) s += std::log(a + static_cast<double>(j));
    return s;
}

// sum_{j=0}^{m-1} 1 / (a + j) == digamma(a + m) - digamma(a)
double sum_recip(double a, long long m) {
    double s = 0.0;
    for (long long j = 0; j < m; ++j) s += 1.0 / (a + static_cast<double>(j));
    return s;
}

}  // namespace

double betabinom_lpmf(long long y, long long n, double p, double k) {
    if (n < 0 || !(p > 0.0) || !(p < 1.0) || !(k > 0.0))
        throw DomainError("betabinom_lpmf: need n >= 0, 0 < p < 1, k > 0");
    if (y < 0 || y > n) return kNegInf;
    const double a = p * k, b = (1.0 - p) * k;
    const double lc = lchoose(static_cast<double>(n), static_cast<double>(y));
    if (n <= kBetabinomExactMax)
        return lc + log_rising(a, y) + log_rising(b, n - y) - log_rising(k, n);
    return lc + lbeta(static_cast<double>(y) + a, static_cast<double>(n - y) + b) - lbeta(a, b);
}

BetabinomGrad betabinom_lpmf_grad(long long y, long long n, double p, double k) {
    if (n < 0 || !(p > 0.0) || !(p < 1.0) || !(k > 0.0))
        throw DomainError("betabinom_lpmf_grad: need n >= 0, 0 < p < 1, k > 0");
    if (y < 0 || y > n) return {kNegInf, 0.0, 0.0};
    const double a = p * k, b = (1.0 - p) * k;
    double lp, da, db, dk_direct;
    if (n <= kBetabinomExactMax) {
        lp = lchoose(static_cast<double>(n), static_cast<double>(y)) + log_rising(a, y) +
             log_rising(b, n - y) - log_rising(k, n);
        da = sum_recip(a, y);
        db = sum_recip(b, n - y);
        dk_direct = -sum_recip(k, n);
    } else {
        const double yd = static_cast<double>(y), nd = static_cast<double>(n);
        lp = lchoose(nd, yd) + lbeta(yd + a, nd - yd + b) - lbeta(a, b);
        da = digamma(yd + a) - digamma(a);
        db = digamma(nd - yd + b) - digamma(b);
        dk_direct = -(digamma(nd + k) - digamma(k));
    }
    // a = p k, b = (1-p) k
    const double d_p = k * (da - db);
    const double d_k = p * da + (1.0 - p) * db + dk_direct;
    return {lp, d_p, d_k};
}

double lognormal_latent(double z, double m, double v) {
    if (!(m > 0.0) || !(v > 0.0)) throw DomainError("lognormal_latent: need m > 0 and v > 0");
    const double s2 = std::log1p(v / (m * m));
    return std::exp(std::log(m) - 0.5 * s2 + std::sqrt(s2) * z);
}

LognormalLatentGrad lognormal_latent_grad(double z, double m, double v) {
    if (!(m > 0.0) || !(v > 0.0)) throw DomainError("lognormal_latent_grad: need m > 0 and v > 0");
    const double ratio = v / (m * m);
    const double s2 = std::log1p(ratio);
    const double s = std::sqrt(s2);
    const double r = std::exp(std::log(m) - 0.5 * s2 + s * z);
    // d s2 / d v = 1 / (v + m^2); d s2 / d m = -2 v / (m (v + m^2))
    const double ds2_dv = 1.0 / (v + m * m);
    const double ds2_dm = -2.0 * v / (m * (v + m * m));
    const double common = z / (2.0 * s) - 0.5;  // d(exponent)/d(s2)
    return {r, r * s, r * (1.0 / m + common * ds2_dm), r * common * ds2_dv};
}

double normal_lpdf(double x, double mu, double sigma) {
    const double zr = (x - mu) / sigma;
    return -0.5 * zr * zr - std::log(sigma) - kLogSqrt2Pi;
}

double normal_lpdf_grad(double x, double mu, double sigma) { return -(x - mu) / (sigma * sigma); }

double halfnormal_lpdf(double x, double sigma) {
    if (x < 0.0) return kNegInf;
    const double zr = x / sigma;
    constexpr double kLog2 = 0.69314718055994530942;
    return kLog2 - kLogSqrt2Pi - std::log(sigma) - 0.5 * zr * zr;
}

double halfnormal_lpdf_grad(double x, double sigma) { return -x / (sigma * sigma); }

double halfcauchy_lpdf(double x, double sigma) {
    if (x < 0.0) return kNegInf;
    const double zr = x / sigma;
    return std::log(2.0 / 3.14159265358979323846) - std::log(sigma) - std::log1p(zr * zr);
}

double halfcauchy_lpdf_grad(double x, double sigma) {
    const double zr = x / sigma;
    return -2.0 * zr / (sigma * (1.0 + zr * zr));
}

double gamma_lpdf(double x, double shape, double scale) {
    if (x <= 0.0) return kNegInf;
    return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale);
}

double gamma_lpdf_grad(double x, double shape, double scale) { return (shape - 1.0) / x - 1.0 / scale; }

}  // namespace epilatent
