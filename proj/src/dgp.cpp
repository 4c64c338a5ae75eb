#include "epilatent/dgp.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "epilatent/config.hpp"
#include "epilatent/csv.hpp"
#include "epilatent/distributions.hpp"
#include "epilatent/errors.hpp"

namespace epilatent {

namespace {

constexpr double kSeasonalFreq = 2.0 * 3.14159265358979323846 / 52.0;
constexpr double kLambdaGuard = 1e9;

bool is_holiday_week(int week_of_year) { return week_of_year == 1 || week_of_year == 52; }

void check_reference_zero(const Eigen::VectorXd& v, const char* name) {
    if (v.size() < 1 || v[0] != 0.0)
        throw ValidationError(std::string("rare params: ") + name + "[1] must be 0 (reference category)");
}

std::string join_doubles(const Eigen::VectorXd& v) {
    std::string s;
    for (int i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    Eigen::VectorXd out(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
    return out;
}

}  // namespace

Variant variant_from_string(const std::string& s) {
    if (s == "naive") return Variant::naive;
    if (s == "reduced") return Variant::reduced;
    if (s == "full") return Variant::full;
    if (s == "outbreak") return Variant::outbreak;
    throw ConfigError("unknown model variant '" + s + "' (expected naive|reduced|full|outbreak)");
}

std::string variant_to_string(Variant v) {
    switch (v) {
        case Variant::naive: return "naive";
        case Variant::reduced: return "reduced";
        case Variant::full: return "full";
        case Variant::outbreak: return "outbreak";
    }
    return "?";
}

void RareDiseaseParams::validate() const {
    if (G < 1 || I < 1) throw ShapeError("rare params: G and I must be >= 1");
    if (beta_geo.size() != G || eta_geo.size() != G) throw ShapeError("rare params: geo effect length != G");
    if (beta_age.size() != I || eta_age.size() != I || beta_sin.size() != I || beta_cos.size() != I)
        throw ShapeError("rare params: age effect length != I");
    check_reference_zero(beta_geo, "beta_geo");
    check_reference_zero(beta_age, "beta_age");
    check_reference_zero(eta_geo, "eta_geo");
    check_reference_zero(eta_age, "eta_age");
    if (!(rho > 0.0)) throw ValidationError("rare params: rho must be > 0");
    if (!(psi > 0.0)) throw ValidationError("rare params: psi must be > 0");
    if (!(theta >= 0.0)) throw ValidationError("rare params: theta must be >= 0");
    if (contact.C.rows() != I) throw ShapeError("rare params: contact matrix must be I x I");
    contact.validate();
}

RareDiseaseParams RareDiseaseParams::from_config_file(const std::string& path) {
    const KeyValueConfig cfg = KeyValueConfig::parse_file(path);
    RareDiseaseParams p;
    p.G = static_cast<int>(cfg.get_int("G"));
    p.I = static_cast<int>(cfg.get_int("I"));
    p.beta0 = cfg.get_double("beta0");
    p.beta_geo = to_vector(cfg.get_doubles("beta_geo"));
    p.beta_age = to_vector(cfg.get_doubles("beta_age"));
    p.beta_sin = to_vector(cfg.get_doubles("beta_sin"));
    p.beta_cos = to_vector(cfg.get_doubles("beta_cos"));
    p.beta_xmas = cfg.get_double("beta_xmas");
    p.eta0 = cfg.get_double("eta0");
    p.eta_geo = to_vector(cfg.get_doubles("eta_geo"));
    p.eta_age = to_vector(cfg.get_doubles("eta_age"));
    p.eta_logpop = cfg.get_double("eta_logpop");
    p.rho = cfg.get_double("rho");
    p.psi = cfg.get_double("psi");
    p.theta = cfg.get_double("theta");
    const auto rows = cfg.get_matrix("contact");
    Eigen::MatrixXd C(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) C(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    p.contact = ContactMatrix{C};
    cfg.check_all_consumed();
    p.validate();
    return p;
}

void RareDiseaseParams::write_config_file(const std::string& path) const {
    validate();
    KeyValueConfig cfg;
    cfg.set("G", std::to_string(G));
    cfg.set("I", std::to_string(I));
    cfg.set("beta0", format_double(beta0));
    cfg.set("beta_geo", join_doubles(beta_geo));
    cfg.set("beta_age", join_doubles(beta_age));
    cfg.set("beta_sin", join_doubles(beta_sin));
    cfg.set("beta_cos", join_doubles(beta_cos));
    cfg.set("beta_xmas", format_double(beta_xmas));
    cfg.set("eta0", format_double(eta0));
    cfg.set("eta_geo", join_doubles(eta_geo));
    cfg.set("eta_age", join_doubles(eta_age));
    cfg.set("eta_logpop", format_double(eta_logpop));
    cfg.set("rho", format_double(rho));
    cfg.set("psi", format_double(psi));
    cfg.set("theta", format_double(theta));
    std::string contact_text;
    for (int i = 0; i < contact.C.rows(); ++i) {
        if (i) contact_text += ";";
        for (int j = 0; j < contact.C.cols(); ++j) contact_text += (j ? "," : "") + format_double(contact.C(i, j));
    }
    cfg.set("contact", contact_text);
    cfg.write_file(path);
}

void OutbreakParams::validate() const {
    if (G < 1 || I < 1 || T < 2) throw ShapeError("outbreak params: need G, I >= 1 and T >= 2");
    if (delta.rows() != G || delta.cols() != I) throw ShapeError("outbreak params: delta must be G x I");
    if ((delta.array() <= 0.0).any()) throw ValidationError("outbreak params: delta must be > 0");
    if (static_cast<int>(log_R.size()) != T - 1) throw ShapeError("outbreak params: log_R must have length T-1");
    if (contact.C.rows() != I) throw ShapeError("outbreak params: contact matrix must be I x I");
    contact.validate();
    if (tau.size() != G || rho_geo.size() != G) throw ShapeError("outbreak params: tau/rho_geo must have length G");
    if ((tau.array() <= 0.0).any() || (rho_geo.array() <= 0.0).any())
        throw ValidationError("outbreak params: tau and rho_geo must be > 0");
    if (!(sd_log_rho > 0.0)) throw ValidationError("outbreak params: sd_log_rho must be > 0");
    if (!(gamma_decay > 0.0)) throw ValidationError("outbreak params: gamma_decay must be > 0");
    if (!(theta >= 0.0)) throw ValidationError("outbreak params: theta must be >= 0");
    if (!(k_precision > 0.0)) throw ValidationError("outbreak params: k_precision must be > 0");
}

OutbreakParams OutbreakParams::from_config_file(const std::string& path) {
    const KeyValueConfig cfg = KeyValueConfig::parse_file(path);
    OutbreakParams p;
    p.G = static_cast<int>(cfg.get_int("G"));
    p.I = static_cast<int>(cfg.get_int("I"));
    p.T = static_cast<int>(cfg.get_int("T"));
    const auto delta_rows = cfg.get_matrix("delta");
    p.delta.resize(p.G, p.I);
    if (static_cast<int>(delta_rows.size()) != p.G || static_cast<int>(delta_rows[0].size()) != p.I)
        throw ConfigError(path + ": delta must be G x I");
    for (int g = 0; g < p.G; ++g)
        for (int i = 0; i < p.I; ++i) p.delta(g, i) = delta_rows[g][i];
    p.log_R = cfg.get_doubles("log_R");
    const auto contact_rows = cfg.get_matrix("contact");
    Eigen::MatrixXd C(static_cast<int>(contact_rows.size()), static_cast<int>(contact_rows[0].size()));
    for (std::size_t i = 0; i < contact_rows.size(); ++i)
        for (std::size_t j = 0; j < contact_rows[i].size(); ++j)
            C(static_cast<int>(i), static_cast<int>(j)) = contact_rows[i][j];
    p.contact = ContactMatrix{C};
    p.tau = to_vector(cfg.get_doubles("tau"));
    p.rho_geo = to_vector(cfg.get_doubles("rho_geo"));
    p.mean_log_rho = cfg.get_double("mean_log_rho", 0.0);
    p.sd_log_rho = cfg.get_double("sd_log_rho", 1.0);
    p.gamma_decay = cfg.get_double("gamma");
    p.theta = cfg.get_double("theta");
    p.k_precision = cfg.get_double("k");
    cfg.check_all_consumed();
    p.validate();
    return p;
}

void OutbreakParams::write_config_file(const std::string& path) const {
    validate();
    KeyValueConfig cfg;
    cfg.set("G", std::to_string(G));
    cfg.set("I", std::to_string(I));
    cfg.set("T", std::to_string(T));
    auto matrix_text = [](const Eigen::MatrixXd& m) {
        std::string s;
        for (int i = 0; i < m.rows(); ++i) {
            if (i) s += ";";
            for (int j = 0; j < m.cols(); ++j) s += (j ? "," : "") + format_double(m(i, j));
        }
        return s;
    };
    cfg.set("delta", matrix_text(delta));
    std::string lr;
    for (std::size_t t = 0; t < log_R.size(); ++t) lr += (t ? "," : "") + format_double(log_R[t]);
    cfg.set("log_R", lr);
    cfg.set("contact", matrix_text(contact.C));
    cfg.set("tau", join_doubles(tau));
    cfg.set("rho_geo", join_doubles(rho_geo));
    cfg.set("mean_log_rho", format_double(mean_log_rho));
    cfg.set("sd_log_rho", format_double(sd_log_rho));
    cfg.set("gamma", format_double(gamma_decay));
    cfg.set("theta", format_double(theta));
    cfg.set("k", format_double(k_precision));
    cfg.write_file(path);
}

Eigen::MatrixXd endemic_rate(const RareDiseaseParams& params, const Eigen::MatrixXd& populations,
                             int t, int week_of_year) {
    const double total = populations.sum();
    const double st = std::sin(kSeasonalFreq * t);
    const double ct = std::cos(kSeasonalFreq * t);
    const double holiday = is_holiday_week(week_of_year) ? params.beta_xmas : 0.0;
    Eigen::MatrixXd delta(params.G, params.I);
    for (int g = 0; g < params.G; ++g)
        for (int i = 0; i < params.I; ++i)
            delta(g, i) = std::exp(std::log(populations(g, i) / total) + params.beta0 + params.beta_geo[g] +
                                   params.beta_age[i] + params.beta_sin[i] * st + params.beta_cos[i] * ct +
                                   holiday);
    return delta;
}

Eigen::MatrixXd endemic_rate(const RareDiseaseParams& params, const PanelData& panel, int t) {
    if (t < 1 || t > panel.T) throw ShapeError("endemic_rate: t outside 1..T");
    return endemic_rate(params, panel.populations, t, panel.week_of_year[t - 1]);
}

Eigen::MatrixXd susceptibility(const RareDiseaseParams& params, const Eigen::MatrixXd& populations) {
    const double total = populations.sum();
    Eigen::MatrixXd phi(params.G, params.I);
    for (int g = 0; g < params.G; ++g)
        for (int i = 0; i < params.I; ++i)
            phi(g, i) = std::exp(params.eta_logpop * std::log(populations(g, i) / total) + params.eta0 +
                                 params.eta_geo[g] + params.eta_age[i]);
    return phi;
}

Eigen::MatrixXd sample_latent(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& mean_mult,
                              double theta, Rng& rng, LatentKind kind) {
    if (!(theta >= 0.0)) throw DomainError("sample_latent: theta must be >= 0");
    if (prev.rows() != mean_mult.rows() || prev.cols() != mean_mult.cols())
        throw ShapeError("sample_latent: shape mismatch");
    Eigen::MatrixXd r(prev.rows(), prev.cols());
    for (int g = 0; g < prev.rows(); ++g)
        for (int i = 0; i < prev.cols(); ++i) {
            const double y = prev(g, i);
            if (y < 0.0) throw DomainError("sample_latent: negative prevalence");
            if (y == 0.0) {
                r(g, i) = 0.0;  // known zero
            } else {
                const double mean = mean_mult(g, i) * y;
                if (theta == 0.0) {
                    r(g, i) = mean;
                } else if (kind == LatentKind::gamma) {
                    r(g, i) = rng.gamma(mean / theta, theta);
                } else {
                    r(g, i) = lognormal_latent(rng.normal(), mean, theta * mean);
                }
            }
        }
    return r;
}

Eigen::MatrixXd linear_predictor(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& phi,
                                 const GeoMixing& wG, const AgeMixing& wI, const Eigen::MatrixXd& r) {
    if (delta.rows() != r.rows() || delta.cols() != r.cols() || phi.rows() != r.rows() || phi.cols() != r.cols())
        throw ShapeError("linear_predictor: shape mismatch");
    return delta + (phi.array() * (wG.w * r * wI.w.transpose()).array()).matrix();
}

Eigen::MatrixXd prevalence_estimate(const std::vector<Eigen::MatrixXd>& history, double gamma) {
    if (history.empty()) throw ShapeError("prevalence_estimate: empty history");
    if (!(gamma >= 0.0)) throw DomainError("prevalence_estimate: gamma must be >= 0");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(history[0].rows(), history[0].cols());
    const int n = static_cast<int>(history.size());
    for (int d = 1; d <= n; ++d) out += std::exp(-gamma * (d - 1)) * history[n - d];
    return out;
}

Eigen::MatrixXd susceptible_estimate(const std::vector<Eigen::MatrixXd>& history,
                                     const Eigen::MatrixXd& populations, long long* floored_cells) {
    Eigen::MatrixXd out = populations;
    for (const auto& h : history) out -= h;
    long long floored = 0;
    for (int g = 0; g < out.rows(); ++g)
        for (int i = 0; i < out.cols(); ++i)
            if (out(g, i) < 0.0) {
                out(g, i) = 0.0;
                ++floored;
            }
    if (floored_cells) *floored_cells = floored;
    return out;
}

Eigen::MatrixXd infection_probability(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& populations,
                                      const GeoMixing& wG, const AgeMixing& wI, const Eigen::MatrixXd& r) {
    if ((delta.array() <= 0.0).any()) throw DomainError("infection_probability: delta must be > 0");
    const Eigen::MatrixXd mixed = wG.w * r * wI.w.transpose();
    Eigen::MatrixXd p(delta.rows(), delta.cols());
    for (int g = 0; g < delta.rows(); ++g)
        for (int i = 0; i < delta.cols(); ++i) {
            const double hazard = delta(g, i) + mixed(g, i) / populations(g, i);
            if (hazard > kLambdaGuard)
                throw NumericError("infection_probability: hazard diverged past 1e9");
            p(g, i) = -std::expm1(-hazard);
        }
    return p;
}

namespace {

void guard_lambda(const Eigen::MatrixXd& lambda, int t) {
    for (int g = 0; g < lambda.rows(); ++g)
        for (int i = 0; i < lambda.cols(); ++i)
            if (!(lambda(g, i) <= kLambdaGuard) || !std::isfinite(lambda(g, i)))
                throw NumericError("simulate: linear predictor diverged (lambda(" + std::to_string(g + 1) + "," +
                                   std::to_string(i + 1) + ") = " + std::to_string(lambda(g, i)) + " at week " +
                                   std::to_string(t) + ")");
}

std::vector<int> default_weeks(int T) {
    std::vector<int> w(T);
    for (int t = 0; t < T; ++t) w[t] = t % 52 + 1;
    return w;
}

std::vector<std::string> index_labels(const char* prefix, int n) {
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(std::string(prefix) + std::to_string(i));
    return out;
}

}  // namespace

SimulationResult simulate_rare(const RareDiseaseParams& params, const Eigen::MatrixXd& populations,
                               const Eigen::MatrixXi& orders, int T, Variant variant, std::uint64_t seed,
                               const SimulateOptions& options) {
    params.validate();
    if (variant == Variant::outbreak) throw ConfigError("simulate_rare: use simulate_outbreak for that variant");
    if (T < 2) throw ShapeError("simulate_rare: T must be >= 2");
    if (populations.rows() != params.G || populations.cols() != params.I)
        throw ShapeError("simulate_rare: populations must be G x I");

    const std::vector<int> weeks = options.week_of_year ? *options.week_of_year : default_weeks(T);
    if (static_cast<int>(weeks.size()) != T) throw ShapeError("simulate_rare: week_of_year must have length T");

    const GeoMixing wG = geo_weights_power_decay(orders, params.rho);
    const AgeMixing wI = normalize_contact(params.contact);
    const Eigen::MatrixXd phi = susceptibility(params, populations);
    // reduced == theta 0 dynamics; naive drops the epidemic term entirely
    const double theta = (variant == Variant::full) ? params.theta : 0.0;

    Rng rng(seed, 0);

    PanelData panel;
    panel.T = T;
    panel.G = params.G;
    panel.I = params.I;
    panel.populations = populations;
    panel.week_of_year = weeks;
    panel.region_labels = index_labels("r", params.G);
    panel.age_labels = index_labels("a", params.I);
    panel.counts.assign(static_cast<std::size_t>(T) * params.G * params.I, 0);

    LatentField latent;
    latent.T = T;
    latent.G = params.G;
    latent.I = params.I;
    latent.r.assign(panel.counts.size(), 0.0);

    Eigen::MatrixXd prev(params.G, params.I);
    {
        const Eigen::MatrixXd delta1 = endemic_rate(params, populations, 1, weeks[0]);
        guard_lambda(delta1, 1);
        for (int g = 0; g < params.G; ++g)
            for (int i = 0; i < params.I; ++i) {
                const long long y = options.initial_counts
                                        ? static_cast<long long>((*options.initial_counts)(g, i))
                                        : rng.neg_binomial(delta1(g, i), params.psi);
                panel.count_ref(0, g, i) = y;
                prev(g, i) = static_cast<double>(y);
            }
    }

    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(params.G, params.I);
    for (int t = 2; t <= T; ++t) {
        const Eigen::MatrixXd delta = endemic_rate(params, populations, t, weeks[t - 1]);
        Eigen::MatrixXd lambda;
        if (variant == Variant::naive) {
            lambda = delta;
        } else {
            const Eigen::MatrixXd r = sample_latent(prev, ones, theta, rng, options.latent);
            for (int g = 0; g < params.G; ++g)
                for (int i = 0; i < params.I; ++i) latent.at_ref(t - 1, g, i) = r(g, i);
            lambda = linear_predictor(delta, phi, wG, wI, r);
        }
        guard_lambda(lambda, t);
        for (int g = 0; g < params.G; ++g)
            for (int i = 0; i < params.I; ++i) {
                const long long y = rng.neg_binomial(lambda(g, i), params.psi);
                panel.count_ref(t - 1, g, i) = y;
                prev(g, i) = static_cast<double>(y);
            }
    }
    panel.validate();
    return {std::move(panel), std::move(latent)};
}

SimulationResult simulate_outbreak(const OutbreakParams& params, const Eigen::MatrixXd& populations,
                                   const Eigen::MatrixXd& distance, int T, std::uint64_t seed,
                                   const Eigen::MatrixXd& initial_counts) {
    params.validate();
    if (T != params.T) throw ShapeError("simulate_outbreak: T must match params.T (log_R length)");
    if (populations.rows() != params.G || populations.cols() != params.I)
        throw ShapeError("simulate_outbreak: populations must be G x I");
    if (initial_counts.rows() != params.G || initial_counts.cols() != params.I)
        throw ShapeError("simulate_outbreak: initial_counts must be G x I");

    const GeoMixing wG = geo_weights_gravity(distance, params.tau, params.rho_geo);
    const AgeMixing wI = normalize_contact(params.contact);
    const Eigen::VectorXd activity = activity_from_contact(params.contact);

    Rng rng(seed, 0);

    PanelData panel;
    panel.T = T;
    panel.G = params.G;
    panel.I = params.I;
    panel.populations = populations;
    panel.week_of_year = default_weeks(T);
    panel.region_labels = index_labels("r", params.G);
    panel.age_labels = index_labels("a", params.I);
    panel.counts.assign(static_cast<std::size_t>(T) * params.G * params.I, 0);

    LatentField latent;
    latent.T = T;
    latent.G = params.G;
    latent.I = params.I;
    latent.r.assign(panel.counts.size(), 0.0);

    std::vector<Eigen::MatrixXd> history;
    history.reserve(T);
    {
        Eigen::MatrixXd y0(params.G, params.I);
        for (int g = 0; g < params.G; ++g)
            for (int i = 0; i < params.I; ++i) {
                const double y = initial_counts(g, i);
                if (y < 0.0 || y > populations(g, i))
                    throw ValidationError("simulate_outbreak: initial counts must lie in [0, E]");
                panel.count_ref(0, g, i) = static_cast<long long>(y);
                y0(g, i) = y;
            }
        history.push_back(std::move(y0));
    }

    for (int t = 2; t <= T; ++t) {
        const Eigen::MatrixXd y_hat = prevalence_estimate(history, params.gamma_decay);
        const Eigen::MatrixXd x_hat = susceptible_estimate(history, populations);
        const double r_mult = std::exp(params.log_R[t - 2]);  // R_{t-1}
        Eigen::MatrixXd mean_mult(params.G, params.I);
        for (int g = 0; g < params.G; ++g)
            for (int i = 0; i < params.I; ++i) mean_mult(g, i) = r_mult * activity[i];
        const Eigen::MatrixXd r = sample_latent(y_hat, mean_mult, params.theta, rng);
        for (int g = 0; g < params.G; ++g)
            for (int i = 0; i < params.I; ++i) latent.at_ref(t - 1, g, i) = r(g, i);
        const Eigen::MatrixXd p = infection_probability(params.delta, populations, wG, wI, r);
        Eigen::MatrixXd y_t(params.G, params.I);
        for (int g = 0; g < params.G; ++g)
            for (int i = 0; i < params.I; ++i) {
                const long long n = static_cast<long long>(x_hat(g, i));
                const long long y = (n > 0) ? rng.beta_binomial(n, p(g, i), params.k_precision) : 0;
                panel.count_ref(t - 1, g, i) = y;
                y_t(g, i) = static_cast<double>(y);
            }
        history.push_back(std::move(y_t));
    }
    panel.validate();
    return {std::move(panel), std::move(latent)};
}

std::vector<ScenarioEntry> scenario_grid(const RareDiseaseParams& base, const Eigen::MatrixXd& populations,
                                         const Eigen::MatrixXi& orders, const std::vector<double>& thetas,
                                         const std::vector<double>& psis, int replicates, int T_train, int H,
                                         std::uint64_t seed, const std::string& out_dir, Variant variant) {
    if (replicates < 1 || T_train < 2 || H < 0) throw ConfigError("scenario_grid: bad grid dimensions");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::vector<ScenarioEntry> entries;
    CsvTable manifest({"scenario", "theta", "psi", "replicate", "seed", "panel"});
    int scenario = 0;
    for (double theta : thetas)
        for (double psi : psis) {
            ++scenario;
            RareDiseaseParams params = base;
            params.theta = theta;
            params.psi = psi;
            for (int rep = 1; rep <= replicates; ++rep) {
                const std::uint64_t data_seed = seed + 1000000ull * static_cast<std::uint64_t>(scenario) +
                                                static_cast<std::uint64_t>(rep);
                const auto sim = simulate_rare(params, populations, orders, T_train + H, variant, data_seed);
                std::ostringstream name;
                name << "panel_s" << scenario << "_r" << rep << ".csv";
                const std::string panel_path = (fs::path(out_dir) / name.str()).string();
                const std::string pop_path = (fs::path(out_dir) / "population.csv").string();
                save_panel(sim.panel, panel_path, pop_path);
                ScenarioEntry e{scenario, theta, psi, rep, data_seed, panel_path};
                manifest.add_row({std::to_string(e.scenario), format_double(e.theta), format_double(e.psi),
                                  std::to_string(e.replicate), std::to_string(e.seed), e.panel_path});
                entries.push_back(std::move(e));
            }
        }
    manifest.write_file((fs::path(out_dir) / "manifest.csv").string());
    return entries;
}

std::vector<ScenarioEntry> read_manifest(const std::string& manifest_csv) {
    const CsvTable t = CsvTable::read_file(manifest_csv);
    const int c_s = t.column("scenario");
    const int c_theta = t.column("theta");
    const int c_psi = t.column("psi");
    const int c_rep = t.column("replicate");
    const int c_seed = t.column("seed");
    const int c_panel = t.column("panel");
    std::vector<ScenarioEntry> out;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        ScenarioEntry e;
        e.scenario = static_cast<int>(t.cell_int(r, c_s));
        e.theta = t.cell_double(r, c_theta);
        e.psi = t.cell_double(r, c_psi);
        e.replicate = static_cast<int>(t.cell_int(r, c_rep));
        e.seed = static_cast<std::uint64_t>(t.cell_int(r, c_seed));
        e.panel_path = t.cell(r, c_panel);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace epilatent
