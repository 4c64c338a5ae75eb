#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "epilatent/config.hpp"
#include "epilatent/csv.hpp"
#include "epilatent/errors.hpp"
#include "epilatent/rng.hpp"
#include "epilatent/special.hpp"

using namespace epilatent;

namespace {

struct Moments {
    double mean = 0.0, var = 0.0;
    long long n = 0;
};

template <typename F>
Moments sample_moments(long long n, F&& draw) {
    double s = 0.0, ss = 0.0;
    for (long long i = 0; i < n; ++i) {
        const double x = static_cast<double>(draw());
        s += x;
        ss += x * x;
    }
    Moments m;
    m.n = n;
    m.mean = s / n;
    m.var = (ss - s * s / n) / (n - 1);
    return m;
}

}  // namespace

TEST_CASE("philox known-answer vectors") {
    // Random123 kat_vectors, philox4x32 with 10 rounds
    auto out = Rng::philox_block({0u, 0u, 0u, 0u}, {0u, 0u});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);

    out = Rng::philox_block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);

    out = Rng::philox_block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("rng streams are deterministic and distinct") {
    Rng a(42, 7), b(42, 7), c(42, 8);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const auto xa = a.next_u64();
        all_equal = all_equal && (xa == b.next_u64());
        any_diff = any_diff || (xa != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform lies strictly inside (0,1)") {
    Rng rng(1, 0);
    double lo = 1.0, hi = 0.0, s = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        s += u;
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal moments") {
    Rng rng(2, 0);
    const auto m = sample_moments(200000, [&] { return rng.normal(); });
    CHECK(m.mean == doctest::Approx(0.0).scale(1.0).epsilon(0.02));
    CHECK(m.var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("gamma moments, both shape regimes") {
    Rng rng(3, 0);
    auto m = sample_moments(200000, [&] { return rng.gamma(3.7, 2.2); });
    CHECK(m.mean == doctest::Approx(3.7 * 2.2).epsilon(0.02));
    CHECK(m.var == doctest::Approx(3.7 * 2.2 * 2.2).epsilon(0.05));
    m = sample_moments(200000, [&] { return rng.gamma(0.4, 1.5); });
    CHECK(m.mean == doctest::Approx(0.4 * 1.5).epsilon(0.03));
    CHECK(m.var == doctest::Approx(0.4 * 1.5 * 1.5).epsilon(0.08));
}

TEST_CASE("poisson moments across the algorithm switch") {
    Rng rng(4, 0);
    auto m = sample_moments(200000, [&] { return rng.poisson(3.5); });
    CHECK(m.mean == doctest::Approx(3.5).epsilon(0.02));
    CHECK(m.var == doctest::Approx(3.5).epsilon(0.05));
    m = sample_moments(100000, [&] { return rng.poisson(150.0); });
    CHECK(m.mean == doctest::Approx(150.0).epsilon(0.01));
    CHECK(m.var == doctest::Approx(150.0).epsilon(0.05));
}

TEST_CASE("binomial moments across all three paths") {
    Rng rng(5, 0);
    auto m = sample_moments(200000, [&] { return rng.binomial(20, 0.3); });
    CHECK(m.mean == doctest::Approx(6.0).epsilon(0.02));
    CHECK(m.var == doctest::Approx(20 * 0.3 * 0.7).epsilon(0.05));
    m = sample_moments(50000, [&] { return rng.binomial(5000, 0.24); });
    CHECK(m.mean == doctest::Approx(1200.0).epsilon(0.005));
    CHECK(m.var == doctest::Approx(5000 * 0.24 * 0.76).epsilon(0.05));
    m = sample_moments(50000, [&] { return rng.binomial(5000, 0.9); });
    CHECK(m.mean == doctest::Approx(4500.0).epsilon(0.005));
    CHECK(m.var == doctest::Approx(5000 * 0.9 * 0.1).epsilon(0.06));
    CHECK(rng.binomial(10, 0.0) == 0);
    CHECK(rng.binomial(10, 1.0) == 10);
}

TEST_CASE("negative binomial mean-dispersion parameterization") {
    Rng rng(6, 0);
    const double mu = 7.0, psi = 0.6;
    const auto m = sample_moments(200000, [&] { return rng.neg_binomial(mu, psi); });
    CHECK(m.mean == doctest::Approx(mu).epsilon(0.02));
    CHECK(m.var == doctest::Approx(mu * (1.0 + psi * mu)).epsilon(0.05));
    // psi = 0 degenerates to Poisson
    const auto mp = sample_moments(100000, [&] { return rng.neg_binomial(4.0, 0.0); });
    CHECK(mp.var == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("beta-binomial moments") {
    Rng rng(7, 0);
    const double n = 50, p = 0.2, k = 5.0;
    const auto m = sample_moments(200000, [&] { return rng.beta_binomial(50, p, k); });
    CHECK(m.mean == doctest::Approx(n * p).epsilon(0.02));
    CHECK(m.var == doctest::Approx(n * p * (1 - p) * (k + n) / (k + 1)).epsilon(0.05));
}

TEST_CASE("digamma reference values") {
    CHECK(digamma(1.0) == doctest::Approx(-0.57721566490153286).epsilon(1e-12));
    CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-12));
    CHECK(digamma(5.0) == doctest::Approx(1.5061176684318005).epsilon(1e-12));
    CHECK(digamma(123.4) == doctest::Approx(std::log(123.4) - 1.0 / (2 * 123.4)).epsilon(1e-5));
    CHECK_THROWS_AS(digamma(0.0), DomainError);
}

TEST_CASE("normal cdf and inverse are consistent") {
    CHECK(inv_norm_cdf(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(inv_norm_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    for (double p : {0.001, 0.025, 0.2, 0.5, 0.77, 0.999}) {
        CHECK(norm_cdf(inv_norm_cdf(p)) == doctest::Approx(p).epsilon(1e-10));
    }
    CHECK_THROWS_AS(inv_norm_cdf(0.0), DomainError);
}

TEST_CASE("regularized incomplete beta") {
    CHECK(inc_beta(2.0, 3.0, 0.5) == doctest::Approx(0.6875).epsilon(1e-12));
    CHECK(inc_beta(0.5, 0.5, 0.25) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK(inc_beta(4.0, 2.0, 0.0) == 0.0);
    CHECK(inc_beta(4.0, 2.0, 1.0) == 1.0);
}

TEST_CASE("log_sum_exp") {
    CHECK(log_sum_exp({0.0, 0.0}) == doctest::Approx(std::log(2.0)));
    CHECK(log_sum_exp({-1e9, 0.0}) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(std::isinf(log_sum_exp({})));
}

TEST_CASE("csv round trip and errors") {
    CsvTable t({"a", "b"});
    t.add_row({"1", "x"});
    t.add_row({"2", "y"});
    const CsvTable back = CsvTable::from_string(t.to_string(), "mem");
    CHECK(back.rows() == 2);
    CHECK(back.cell_int(1, 0) == 2);
    CHECK(back.cell(0, 1) == "x");

    CHECK_THROWS_AS(CsvTable::from_string("a,b\n1\n", "f"), ParseError);
    CHECK_THROWS_WITH_AS(CsvTable::from_string("a,b\n1,q\n", "f").cell_int(0, 1),
                         doctest::Contains("f:2"), ParseError);
    CHECK_THROWS_AS(back.column("missing"), ParseError);
}

TEST_CASE("key-value config parsing") {
    const auto cfg = KeyValueConfig::parse_string("# comment\nfoo = 12\nbar = 1,2.5,3\nmat = 1,2;3,4\n", "cfg");
    CHECK(cfg.get_int("foo") == 12);
    CHECK(cfg.get_doubles("bar") == std::vector<double>{1.0, 2.5, 3.0});
    const auto m = cfg.get_matrix("mat");
    CHECK(m[1][0] == 3.0);
    CHECK(cfg.get_int("absent", 9) == 9);
    cfg.check_all_consumed();

    const auto cfg2 = KeyValueConfig::parse_string("a = 1\nb = 2\n", "cfg2");
    CHECK(cfg2.get_int("a") == 1);
    CHECK_THROWS_WITH_AS(cfg2.check_all_consumed(), doctest::Contains("unknown key"), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse_string("a = 1\na = 2\n", "dup"), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse_string("nonsense\n", "bad"), ConfigError);
}

TEST_CASE("atomic file write creates parents and replaces") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "epilatent_csv_test";
    fs::remove_all(dir);
    const auto path = (dir / "sub" / "x.txt").string();
    write_file_atomic(path, "one");
    write_file_atomic(path, "two");
    std::ifstream in(path);
    std::string got;
    in >> got;
    CHECK(got == "two");
    fs::remove_all(dir);
}
