#include "epilatent/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "epilatent/errors.hpp"

namespace epilatent {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr, const std::array<std::uint32_t, 2>& key) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::array<std::uint32_t, 4> Rng::philox_block(std::array<std::uint32_t, 4> counter,
                                               std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        philox_round(counter, key);
    }
    return counter;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : counter_{0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
      key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      buf_{},
      buf_pos_(4) {}

void Rng::refill_() {
    buf_ = philox_block(counter_, key_);
    buf_pos_ = 0;
    if (++counter_[0] == 0u) ++counter_[1];  // 2^64 blocks per stream
}

std::uint32_t Rng::next_u32() {
    if (buf_pos_ >= 4) refill_();
    return buf_[buf_pos_++];
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
}

double Rng::uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw DomainError("Rng::below: bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % bound;
}

double Rng::normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double Rng::normal(double mean, double sd) { return mean + sd * normal(); }

double Rng::gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw DomainError("Rng::gamma: shape and scale must be positive");
    if (shape < 1.0) {
        const double u = uniform();
        return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
}

double Rng::beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
}

long long Rng::poisson(double mean) {
    if (mean < 0.0 || !std::isfinite(mean)) throw DomainError("Rng::poisson: mean must be finite and >= 0");
    if (mean == 0.0) return 0;
    if (mean < 30.0) {
        // multiplication method
        const double limit = std::exp(-mean);
        long long n = 0;
        double prod = uniform();
        while (prod > limit) {
            ++n;
            prod *= uniform();
        }
        return n;
    }
    // Ahrens-Dieter reduction via an Erlang waiting time; recursion depth is
    // logarithmic in mean.
    const long long m = static_cast<long long>(std::floor(mean * 7.0 / 8.0));
    const double w = gamma(static_cast<double>(m), 1.0);
    if (w <= mean) return m + poisson(mean - w);
    return binomial(m - 1, mean / w);
}

long long Rng::binomial(long long n, double p) {
    if (n < 0 || p < 0.0 || p > 1.0) throw DomainError("Rng::binomial: need n >= 0 and p in [0,1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);
    if (n <= 32) {
        long long c = 0;
        for (long long i = 0; i < n; ++i) c += (uniform() < p);
        return c;
    }
    const double np = static_cast<double>(n) * p;
    if (np <= 15.0) {
        // first waiting-time method: geometric skips between successes
        const double log_q = std::log1p(-p);
        long long count = 0;
        long long pos = 0;
        for (;;) {
            pos += static_cast<long long>(std::floor(std::log(uniform()) / log_q)) + 1;
            if (pos > n) return count;
            ++count;
        }
    }
    // beta order-statistic split (Knuth TAOCP 3.4.1): exact, halves n
    const long long i = (n + 1) / 2;
    const double x = beta(static_cast<double>(i), static_cast<double>(n - i + 1));
    if (x >= p) return binomial(i - 1, p / x);
    return i + binomial(n - i, (p - x) / (1.0 - x));
}

long long Rng::neg_binomial(double mu, double psi) {
    if (!(mu >= 0.0) || !(psi >= 0.0)) throw DomainError("Rng::neg_binomial: need mu >= 0 and psi >= 0");
    if (mu == 0.0) return 0;
    if (psi == 0.0) return poisson(mu);
    const double shape = 1.0 / psi;
    return poisson(gamma(shape, psi * mu));
}

long long Rng::beta_binomial(long long n, double p, double k) {
    if (!(p > 0.0) || !(p < 1.0) || !(k > 0.0))
        throw DomainError("Rng::beta_binomial: need 0 < p < 1 and k > 0");
    if (n == 0) return 0;
    return binomial(n, beta(p * k, (1.0 - p) * k));
}

}  // namespace epilatent
