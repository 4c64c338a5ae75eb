#ifndef EPILATENT_RNG_HPP
#define EPILATENT_RNG_HPP

#include <array>
#include <cstdint>

namespace epilatent {

/// Counter-based pseudo-random generator: Philox4x32-10 (Salmon et al. 2011,
/// "Parallel random numbers: as easy as 1, 2, 3").
///
/// Chosen because simulation manifests must be replayable across platforms
/// and workers: a (seed, stream) pair fully determines the sequence, streams
/// never collide, and the generator has no large hidden state to serialize.
/// All sampling in this project goes through this engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /// Uniform double on the open interval (0,1); 53-bit resolution, never
    /// exactly 0 or 1 so log()/logit() are always safe.
    double uniform();
    double uniform(double lo, double hi);

    /// Integer in [0, bound) without modulo bias.
    std::uint64_t below(std::uint64_t bound);

    /// Standard normal via Box-Muller (the sine partner is discarded; the
    /// draw count per call is fixed, which keeps streams alignment-free).
    double normal();
    double normal(double mean, double sd);

    /// Gamma(shape, scale), shape-scale convention. Marsaglia-Tsang (2000)
    /// squeeze for shape >= 1, boosted by U^(1/shape) below 1.
    double gamma(double shape, double scale);

    double beta(double a, double b);

    long long poisson(double mean);

    /// Exact Binomial(n, p): Bernoulli sum for small n, geometric skips for
    /// small n*p, otherwise the beta order-statistic recursion (halves n per
    /// beta draw, so cost is logarithmic in n).
    long long binomial(long long n, double p);

    /// Negative binomial with mean mu and Var = mu(1 + psi*mu), sampled as a
    /// gamma-Poisson mixture; psi = 0 degenerates to Poisson.
    long long neg_binomial(double mu, double psi);

    /// Beta-binomial with size n, mean probability p, precision k:
    /// Beta(p*k, (1-p)*k) then Binomial.
    long long beta_binomial(long long n, double p, double k);

    /// Exactly the raw Philox block, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> philox_block(std::array<std::uint32_t, 4> counter,
                                                     std::array<std::uint32_t, 2> key);

private:
    void refill_();

    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> buf_;
    int buf_pos_;
};

}  // namespace epilatent

#endif
