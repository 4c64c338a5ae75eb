#ifndef EPILATENT_DISTRIBUTIONS_HPP
#define EPILATENT_DISTRIBUTIONS_HPP

namespace epilatent {

/// Negative binomial with mean mu and Var = mu (1 + psi mu). The usual size
/// parameter is n = 1/psi (p = n / (n + mu)); psi -> 0 is the Poisson limit,
/// which the implementation switches to analytically for 1/psi > 1e8.
double negbin_lpmf(long long y, double mu, double psi);

/// Same value plus partial derivatives with respect to mu and psi.
struct NegbinGrad {
    double lp;
    double d_mu;
    double d_psi;
};
NegbinGrad negbin_lpmf_grad(long long y, double mu, double psi);

double poisson_lpmf(long long y, double mu);

double binomial_lpmf(long long y, long long n, double p);

/// Beta-binomial log pmf with size n, mean probability p in (0,1), precision
/// k > 0. Returns -inf outside the support {0..n} (by contract, y < 0 or
/// y > n is not an error). Exact rising-factorial sums are used for small n;
/// the lgamma form takes over for large n.
double betabinom_lpmf(long long y, long long n, double p, double k);

struct BetabinomGrad {
    double lp;
    double d_p;
    double d_k;
};
BetabinomGrad betabinom_lpmf_grad(long long y, long long n, double p, double k);

/// Non-centered lognormal layer matching a target mean m > 0 and variance
/// v > 0 exactly: r = exp(mu_ln + sigma_ln z) with sigma_ln^2 = log(1+v/m^2),
/// mu_ln = log m - sigma_ln^2 / 2.
double lognormal_latent(double z, double m, double v);

/// Value plus partials with respect to z, m, v (holding the others fixed).
struct LognormalLatentGrad {
    double r;
    double d_z;
    double d_m;
    double d_v;
};
LognormalLatentGrad lognormal_latent_grad(double z, double m, double v);

// Log densities used for priors; each *_grad returns d/dx at x.
double normal_lpdf(double x, double mu, double sigma);
double normal_lpdf_grad(double x, double mu, double sigma);
double halfnormal_lpdf(double x, double sigma);   // x >= 0
double halfnormal_lpdf_grad(double x, double sigma);
double halfcauchy_lpdf(double x, double sigma);   // x >= 0
double halfcauchy_lpdf_grad(double x, double sigma);
double gamma_lpdf(double x, double shape, double scale);
double gamma_lpdf_grad(double x, double shape, double scale);

}  // namespace epilatent

#endif
