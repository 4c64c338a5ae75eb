// Command-line front end: simulate | fit | forecast | score | prior-check | diagnose.
// Every command reads a flat key-value config, writes CSV outputs plus a
// resolved-config copy into --out-dir, and is deterministic given (config, seed).
// Exit codes: 0 success, 1 runtime failure, 2 config error, 3 convergence warning.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>

#include "epilatent/config.hpp"
#include "epilatent/csv.hpp"
#include "epilatent/dgp.hpp"
#include "epilatent/errors.hpp"
#include "epilatent/forecast.hpp"
#include "epilatent/mixing.hpp"
#include "epilatent/oracle.hpp"
#include "epilatent/panel.hpp"
#include "epilatent/posterior.hpp"
#include "epilatent/sampler.hpp"

namespace fs = std::filesystem;
using namespace epilatent;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;  // <0: take the config's seed
    int jobs = 1;
};

std::uint64_t resolve_seed(const CommonArgs& args, const KeyValueConfig& cfg, std::uint64_t fallback = 1) {
    if (args.seed >= 0) return static_cast<std::uint64_t>(args.seed);
    return static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(fallback)));
}

std::string resolve_out_dir(const CommonArgs& args, const KeyValueConfig& cfg) {
    std::string out = args.out_dir.empty() ? cfg.get_string("out_dir", "") : args.out_dir;
    if (out.empty()) throw ConfigError("no output directory: pass --out-dir or set out_dir");
    fs::create_directories(out);
    return out;
}

void write_resolved(const KeyValueConfig& resolved, const std::string& out_dir) {
    resolved.write_file((fs::path(out_dir) / "resolved_config.txt").string());
}

struct RareInputs {
    PanelData panel;
    Eigen::MatrixXi orders;
};

RareInputs load_rare_inputs(const KeyValueConfig& cfg, int T_train) {
    RareInputs in;
    in.panel = load_panel(cfg.get_string("panel"), cfg.get_string("populations"));
    if (T_train > 0) in.panel = in.panel.head(T_train);
    in.orders = load_adjacency(cfg.get_string("adjacency"), in.panel.region_labels);
    return in;
}

SamplerConfig sampler_config(const KeyValueConfig& cfg, const CommonArgs& args) {
    SamplerConfig s;
    s.chains = static_cast<int>(cfg.get_int("chains", 4));
    s.warmup = static_cast<int>(cfg.get_int("warmup", 1000));
    s.sampling = static_cast<int>(cfg.get_int("iters", 1000));
    s.target_accept = cfg.get_double("target_accept", 0.8);
    s.max_treedepth = static_cast<int>(cfg.get_int("max_treedepth", 10));
    s.seed = resolve_seed(args, cfg);
    s.jobs = args.jobs;
    return s;
}

std::vector<std::string> constrained_names(const ParamLayout& layout) {
    std::vector<std::string> out;
    for (const auto& b : layout.blocks) {
        std::string stem = b.name;
        if (b.transform == Transform::exp && stem.rfind("log_", 0) == 0) stem = stem.substr(4);
        if (!b.labels.empty()) {
            for (auto lab : b.labels) {
                if (b.transform == Transform::exp && lab.rfind("log_", 0) == 0) lab = lab.substr(4);
                out.push_back(lab);
            }
        } else if (b.size == 1) {
            out.push_back(stem);
        } else {
            for (int k = 0; k < b.size; ++k) out.push_back(stem + "[" + std::to_string(k + 1) + "]");
        }
    }
    return out;
}

double max_finite_rhat(const std::vector<SummaryRow>& rows) {
    double m = 0.0;
    for (const auto& r : rows)
        if (std::isfinite(r.rhat)) m = std::max(m, r.rhat);
    return m;
}

// ---------------------------------------------------------------------------

int run_simulate(const CommonArgs& args) {
    const KeyValueConfig cfg = KeyValueConfig::parse_file(args.config_path);
    const std::string out = resolve_out_dir(args, cfg);
    const std::uint64_t seed = resolve_seed(args, cfg);
    const std::string mode = cfg.get_string("mode", "single");
    const Variant variant = variant_from_string(cfg.get_string("variant", "full"));

    KeyValueConfig resolved = cfg;
    resolved.set("seed", std::to_string(seed));
    resolved.set("out_dir", out);

    if (variant == Variant::outbreak) {
        OutbreakParams params = OutbreakParams::from_config_file(cfg.get_string("params"));
        const PanelData shell = load_panel(cfg.get_string("init_panel"), cfg.get_string("populations"));
        const Eigen::MatrixXd D = cfg.has("tracts")
                                      ? build_distance_matrix(load_tracts(cfg.get_string("tracts")))
                                      : load_distance_matrix(cfg.get_string("distance"), shell.region_labels);
        const auto sim = simulate_outbreak(params, shell.populations, D, params.T, seed, shell.counts_at(0));
        save_panel(sim.panel, (fs::path(out) / "panel.csv").string(),
                   (fs::path(out) / "population.csv").string());
        cfg.check_all_consumed();
        write_resolved(resolved, out);
        std::cout << "simulate: wrote outbreak panel (T=" << params.T << ") to " << out << "\n";
        return 0;
    }

    RareDiseaseParams params = RareDiseaseParams::from_config_file(cfg.get_string("params"));
    const PanelData pops = load_panel(cfg.get_string("init_panel"), cfg.get_string("populations"));
    const Eigen::MatrixXi orders = load_adjacency(cfg.get_string("adjacency"), pops.region_labels);

    if (mode == "grid") {
        const std::vector<double> thetas = cfg.get_doubles("thetas");
        const std::vector<double> psis = cfg.get_doubles("psis");
        const int replicates = static_cast<int>(cfg.get_int("replicates"));
        const int T_train = static_cast<int>(cfg.get_int("T_train"));
        const int H = static_cast<int>(cfg.get_int("H"));
        cfg.check_all_consumed();
        const auto entries =
            scenario_grid(params, pops.populations, orders, thetas, psis, replicates, T_train, H, seed, out, variant);
        write_resolved(resolved, out);
        std::cout << "simulate: wrote " << entries.size() << " datasets + manifest to " << out << "\n";
        return 0;
    }
    if (mode != "single") throw ConfigError("mode must be 'single' or 'grid'");
    const int T = static_cast<int>(cfg.get_int("T"));
    cfg.check_all_consumed();
    const auto sim = simulate_rare(params, pops.populations, orders, T, variant, seed);
    save_panel(sim.panel, (fs::path(out) / "panel.csv").string(), (fs::path(out) / "population.csv").string());
    write_resolved(resolved, out);
    std::cout << "simulate: wrote panel (T=" << T << ", variant=" << variant_to_string(variant) << ") to "
              << out << "\n";
    return 0;
}

std::unique_ptr<Posterior> build_posterior(const KeyValueConfig& cfg, const CommonArgs& args, Variant variant,
                                           int T_train) {
    (void)args;
    if (variant == Variant::outbreak) {
        PanelData panel = load_panel(cfg.get_string("panel"), cfg.get_string("populations"));
        if (T_train > 0) panel = panel.head(T_train);
        const Eigen::MatrixXd D = cfg.has("tracts")
                                      ? build_distance_matrix(load_tracts(cfg.get_string("tracts")))
                                      : load_distance_matrix(cfg.get_string("distance"), panel.region_labels);
        OutbreakModelOptions opts;
        if (cfg.has("priors")) opts.priors = PriorSpec::parse_file(cfg.get_string("priors"));
        return std::make_unique<OutbreakPosterior>(std::move(panel), D, std::move(opts));
    }
    RareInputs in = load_rare_inputs(cfg, T_train);
    RareModelOptions opts;
    opts.variant = variant;
    const std::string preset = cfg.get_string("prior_preset", "simstudy");
    if (cfg.has("priors"))
        opts.priors = PriorSpec::parse_file(cfg.get_string("priors"));
    else
        opts.priors = PriorSpec::preset(preset, variant, in.panel.I);
    if (variant == Variant::full) {
        opts.contact_hyper = ContactPriorHyper::defaults(in.panel.I);
        opts.contact_hyper.alpha_diag = cfg.get_double("contact_alpha_diag", opts.contact_hyper.alpha_diag);
        opts.contact_hyper.alpha_offdiag =
            cfg.get_double("contact_alpha_offdiag", opts.contact_hyper.alpha_offdiag);
    }
    if (variant == Variant::reduced)
        opts.known_contact = load_contact_matrix(cfg.get_string("known_contact")).C;
    return std::make_unique<RarePosterior>(std::move(in.panel), std::move(in.orders), std::move(opts));
}

// constrained draws plus derived mixing weights for readable diagnostics
DrawSet constrained_view(const Posterior& post, const DrawSet& ds) {
    std::vector<std::string> names = constrained_names(post.layout());
    const auto* rare = dynamic_cast<const RarePosterior*>(&post);
    const auto* outbreak = dynamic_cast<const OutbreakPosterior*>(&post);
    int I = 0;
    bool add_w = false;
    if (rare && rare->variant() == Variant::full) {
        I = rare->panel().I;
        add_w = true;
    } else if (outbreak) {
        I = outbreak->panel().I;
        add_w = true;
    }
    if (add_w)
        for (int j = 0; j < I; ++j)
            for (int i = 0; i < I; ++i)
                names.push_back("w_age[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]");
    const ParamLayout& layout = post.layout();
    auto fn = [&layout, rare, outbreak, add_w, I](const Eigen::VectorXd& x) {
        Eigen::VectorXd v = layout.constrain(x);
        if (!add_w) return v;
        Eigen::MatrixXd C;
        if (rare)
            C = rare->decode(x).params.contact.C;
        else
            C = outbreak->decode(x).params.contact.C;
        const Eigen::MatrixXd w = normalize_contact(ContactMatrix{C}).w;
        Eigen::VectorXd out(v.size() + I * I);
        out.head(v.size()) = v;
        int pos = static_cast<int>(v.size());
        for (int j = 0; j < I; ++j)
            for (int i = 0; i < I; ++i) out[pos++] = w(i, j);
        return out;
    };
    return transform_draws(ds, fn, names);
}

int run_fit(const CommonArgs& args) {
    const KeyValueConfig cfg = KeyValueConfig::parse_file(args.config_path);
    const std::string out = resolve_out_dir(args, cfg);
    const Variant variant = variant_from_string(cfg.get_string("variant", "full"));
    const int T_train = static_cast<int>(cfg.get_int("T_train", 0));
    auto post = build_posterior(cfg, args, variant, T_train);
    const SamplerConfig scfg = sampler_config(cfg, args);
    cfg.check_all_consumed();

    KeyValueConfig resolved = cfg;
    resolved.set("seed", std::to_string(scfg.seed));
    resolved.set("out_dir", out);
    resolved.set("chains", std::to_string(scfg.chains));
    resolved.set("warmup", std::to_string(scfg.warmup));
    resolved.set("iters", std::to_string(scfg.sampling));

    const Posterior& p = *post;
    const DrawSet ds = nuts_sample(
        [&p](const Eigen::VectorXd& x, Eigen::VectorXd* grad) { return p.logp_grad(x, grad); }, p.dim(), scfg,
        p.layout().flat_names());
    save_drawset(ds, out, "draws");

    const DrawSet view = constrained_view(p, ds);
    const auto rows = summarize_draws(view);
    save_diagnostics(rows, (fs::path(out) / "diagnostics.csv").string());
    write_resolved(resolved, out);

    const double max_rhat = max_finite_rhat(rows);
    const int divergences = ds.total_divergences();
    std::cout << "fit: " << ds.n_chains() << " chains x " << ds.iters() << " draws, max_rhat="
              << max_rhat << ", divergences=" << divergences << "\n";
    if (max_rhat > 1.01) {
        std::cout << "fit: convergence warning (max_rhat > 1.01)\n";
        return 3;
    }
    return 0;
}

int run_forecast(const CommonArgs& args) {
    const KeyValueConfig cfg = KeyValueConfig::parse_file(args.config_path);
    const std::string out = resolve_out_dir(args, cfg);
    const Variant variant = variant_from_string(cfg.get_string("variant", "full"));
    const int T_train = static_cast<int>(cfg.get_int("T_train", 0));
    auto post = build_posterior(cfg, args, variant, T_train);
    const std::string draws_dir = cfg.get_string("draws_dir");
    const int chains = static_cast<int>(cfg.get_int("chains", 4));
    const int H = static_cast<int>(cfg.get_int("H"));
    const int max_draws = static_cast<int>(cfg.get_int("max_draws", 0));
    const std::uint64_t seed = resolve_seed(args, cfg);
    cfg.check_all_consumed();

    const DrawSet ds = load_drawset(draws_dir, "draws", chains);
    ForecastSet fc;
    if (variant == Variant::outbreak)
        fc = posterior_predictive(static_cast<const OutbreakPosterior&>(*post), ds, H, seed, max_draws);
    else
        fc = posterior_predictive(static_cast<const RarePosterior&>(*post), ds, H, seed, max_draws);

    const PanelData& panel = (variant == Variant::outbreak)
                                 ? static_cast<const OutbreakPosterior&>(*post).panel()
                                 : static_cast<const RarePosterior&>(*post).panel();

    CsvTable cells({"k", "h", "g", "i", "par1", "size"});
    CsvTable draws({"k", "h", "g", "i", "y"});
    for (int k = 0; k < fc.K; ++k)
        for (int h = 0; h < fc.H; ++h)
            for (int g = 0; g < fc.G; ++g)
                for (int i = 0; i < fc.I; ++i) {
                    const std::size_t q = fc.idx(k, h, g, i);
                    cells.add_row({std::to_string(k + 1), std::to_string(h + 1), std::to_string(g + 1),
                                   std::to_string(i + 1), format_double(fc.par1[q]),
                                   fc.dist == ForecastSet::Dist::betabinom ? format_double(fc.size[q]) : ""});
                    draws.add_row({std::to_string(k + 1), std::to_string(h + 1), std::to_string(g + 1),
                                   std::to_string(i + 1), std::to_string(fc.draws[q])});
                }
    cells.write_file((fs::path(out) / "forecast_density.csv").string());
    draws.write_file((fs::path(out) / "forecast_draws.csv").string());
    CsvTable disp({"k", "dispersion", "dist"});
    for (int k = 0; k < fc.K; ++k)
        disp.add_row({std::to_string(k + 1), format_double(fc.dispersion[k]),
                      fc.dist == ForecastSet::Dist::betabinom ? "betabinom" : "negbin"});
    disp.write_file((fs::path(out) / "forecast_dispersion.csv").string());

    CsvTable summary({"h", "region", "age", "mean", "p5", "p50", "p95"});
    for (int h = 0; h < fc.H; ++h)
        for (int g = 0; g < fc.G; ++g)
            for (int i = 0; i < fc.I; ++i) {
                std::vector<double> v(fc.K);
                for (int k = 0; k < fc.K; ++k) v[k] = static_cast<double>(fc.draw(k, h, g, i));
                double mean = 0.0;
                for (double y : v) mean += y;
                mean /= fc.K;
                summary.add_row({std::to_string(h + 1), panel.region_labels[g], panel.age_labels[i],
                                 format_double(mean), format_double(quantile(v, 0.05)),
                                 format_double(quantile(v, 0.50)), format_double(quantile(v, 0.95))});
            }
    summary.write_file((fs::path(out) / "forecast_summary.csv").string());

    KeyValueConfig resolved = cfg;
    resolved.set("seed", std::to_string(seed));
    resolved.set("out_dir", out);
    write_resolved(resolved, out);
    std::cout << "forecast: K=" << fc.K << " draws, H=" << fc.H << " -> " << out << "\n";
    return 0;
}

ForecastSet load_forecast(const std::string& dir) {
    const CsvTable disp = CsvTable::read_file((fs::path(dir) / "forecast_dispersion.csv").string());
    const CsvTable cells = CsvTable::read_file((fs::path(dir) / "forecast_density.csv").string());
    ForecastSet fc;
    fc.K = static_cast<int>(disp.rows());
    fc.dist = disp.cell(0, disp.column("dist")) == "betabinom" ? ForecastSet::Dist::betabinom
                                                               : ForecastSet::Dist::negbin;
    for (std::size_t r = 0; r < disp.rows(); ++r) fc.dispersion.push_back(disp.cell_double(r, 1));
    int maxh = 0, maxg = 0, maxi = 0;
    const int ck = cells.column("k"), ch = cells.column("h"), cg = cells.column("g"), ci = cells.column("i");
    const int cp = cells.column("par1"), cs = cells.column("size");
    for (std::size_t r = 0; r < cells.rows(); ++r) {
        maxh = std::max(maxh, static_cast<int>(cells.cell_int(r, ch)));
        maxg = std::max(maxg, static_cast<int>(cells.cell_int(r, cg)));
        maxi = std::max(maxi, static_cast<int>(cells.cell_int(r, ci)));
    }
    fc.H = maxh;
    fc.G = maxg;
    fc.I = maxi;
    fc.par1.assign(static_cast<std::size_t>(fc.K) * fc.H * fc.G * fc.I, 0.0);
    fc.size.assign(fc.par1.size(), 0.0);
    fc.draws.assign(fc.par1.size(), 0);
    for (std::size_t r = 0; r < cells.rows(); ++r) {
        const std::size_t q = fc.idx(static_cast<int>(cells.cell_int(r, ck)) - 1,
                                     static_cast<int>(cells.cell_int(r, ch)) - 1,
                                     static_cast<int>(cells.cell_int(r, cg)) - 1,
                                     static_cast<int>(cells.cell_int(r, ci)) - 1);
        fc.par1[q] = cells.cell_double(r, cp);
        if (fc.dist == ForecastSet::Dist::betabinom) fc.size[q] = cells.cell_double(r, cs);
    }
    return fc;
}

int run_score(const CommonArgs& args) {
    const KeyValueConfig cfg = KeyValueConfig::parse_file(args.config_path);
    const std::string out = resolve_out_dir(args, cfg);
    const std::string mode = cfg.get_string("mode", "single");

    if (mode == "aggregate") {
        const CsvTable tidy = CsvTable::read_file(cfg.get_string("scores"));
        const std::string model_a = cfg.get_string("model_a");
        const std::string model_b = cfg.get_string("model_b");
        cfg.check_all_consumed();
        const int c_d = tidy.column("dataset"), c_m = tidy.column("model"), c_h = tidy.column("h"),
                  c_ls = tidy.column("ls");
        std::map<std::string, std::map<int, std::map<std::string, double>>> by_dataset;
        int maxh = 0;
        for (std::size_t r = 0; r < tidy.rows(); ++r) {
            const int h = static_cast<int>(tidy.cell_int(r, c_h));
            maxh = std::max(maxh, h);
            by_dataset[tidy.cell(r, c_d)][h][tidy.cell(r, c_m)] = tidy.cell_double(r, c_ls);
        }
        std::vector<std::vector<double>> a, b;
        for (const auto& [ds_name, per_h] : by_dataset) {
            std::vector<double> ra(maxh), rb(maxh);
            for (int h = 1; h <= maxh; ++h) {
                const auto it = per_h.find(h);
                if (it == per_h.end() || !it->second.count(model_a) || !it->second.count(model_b))
                    throw ValidationError("score aggregate: dataset '" + ds_name + "' is missing model scores at h=" +
                                          std::to_string(h));
                ra[h - 1] = it->second.at(model_a);
                rb[h - 1] = it->second.at(model_b);
            }
            a.push_back(std::move(ra));
            b.push_back(std::move(rb));
        }
        const ScoreTable table = paired_scores(a, b);
        write_file_atomic((fs::path(out) / "paired_scores.csv").string(), table.to_csv());
        KeyValueConfig resolved = cfg;
        resolved.set("out_dir", out);
        write_resolved(resolved, out);
        std::cout << "score: paired " << a.size() << " datasets x " << table.horizons() << " horizons -> " << out
                  << "\n";
        return 0;
    }
    if (mode != "single") throw ConfigError("score: mode must be 'single' or 'aggregate'");

    const PanelData truth = load_panel(cfg.get_string("truth_panel"), cfg.get_string("populations"));
    const int T_train = static_cast<int>(cfg.get_int("T_train"));
    const ForecastSet fc = load_forecast(cfg.get_string("forecast_dir"));
    const std::string scenario = cfg.get_string("scenario", "s1");
    const std::string dataset = cfg.get_string("dataset", "d1");
    const std::string model = cfg.get_string("model", "model");
    cfg.check_all_consumed();
    if (T_train + fc.H > truth.T)
        throw ValidationError("score: horizon exceeds the available truth panel (T=" + std::to_string(truth.T) +
                              ")");

    CsvTable tidy({"scenario", "dataset", "model", "h", "ls"});
    for (int h = 1; h <= fc.H; ++h) {
        const auto ls = log_score(fc, truth.counts_at(T_train + h - 1), h);
        tidy.add_row({scenario, dataset, model, std::to_string(h), format_double(ls.value)});
    }
    tidy.write_file((fs::path(out) / "scores.csv").string());
    KeyValueConfig resolved = cfg;
    resolved.set("out_dir", out);
    write_resolved(resolved, out);
    std::cout << "score: wrote " << fc.H << " horizons -> " << out << "\n";
    return 0;
}

int run_prior_check(const CommonArgs& args) {
    const KeyValueConfig cfg = KeyValueConfig::parse_file(args.config_path);
    const std::string out = resolve_out_dir(args, cfg);
    const std::uint64_t seed = resolve_seed(args, cfg);
    const int I = static_cast<int>(cfg.get_int("I", 6));
    ContactPriorHyper hyper = ContactPriorHyper::defaults(I);
    hyper.alpha_diag = cfg.get_double("alpha_diag", hyper.alpha_diag);
    hyper.alpha_offdiag = cfg.get_double("alpha_offdiag", hyper.alpha_offdiag);
    hyper.scale = cfg.get_double("scale", hyper.scale);
    const long long n_draws = cfg.get_int("n_draws", 100000);
    cfg.check_all_consumed();

    std::vector<std::vector<std::vector<double>>> w_draws(
        I, std::vector<std::vector<double>>(I, std::vector<double>()));
    Rng rng(seed, 0);
    for (long long d = 0; d < n_draws; ++d) {
        const ContactMatrix C = sample_contact_prior(hyper, I, rng);
        const Eigen::MatrixXd w = normalize_contact(C).w;
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < I; ++j) w_draws[i][j].push_back(w(i, j));
    }
    CsvTable t({"recipient", "source", "mean", "p5", "p50", "p95"});
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < I; ++j) {
            auto& v = w_draws[i][j];
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            t.add_row({std::to_string(i + 1), std::to_string(j + 1), format_double(mean),
                       format_double(quantile(v, 0.05)), format_double(quantile(v, 0.50)),
                       format_double(quantile(v, 0.95))});
        }
    t.write_file((fs::path(out) / "contact_prior_quantiles.csv").string());
    KeyValueConfig resolved = cfg;
    resolved.set("seed", std::to_string(seed));
    resolved.set("out_dir", out);
    write_resolved(resolved, out);
    std::cout << "prior-check: " << n_draws << " draws, w[1,1] mean = " << format_double([&] {
        double m = 0.0;
        for (double x : w_draws[0][0]) m += x;
        return m / static_cast<double>(w_draws[0][0].size());
    }()) << " -> " << out << "\n";
    return 0;
}

int run_diagnose(const CommonArgs& args) {
    const KeyValueConfig cfg = KeyValueConfig::parse_file(args.config_path);
    const std::string out = resolve_out_dir(args, cfg);
    const std::string draws_dir = cfg.get_string("draws_dir");
    const int chains = static_cast<int>(cfg.get_int("chains", 4));
    cfg.check_all_consumed();
    const DrawSet ds = load_drawset(draws_dir, "draws", chains);
    const auto rows = summarize_draws(ds);
    save_diagnostics(rows, (fs::path(out) / "diagnostics.csv").string());
    KeyValueConfig resolved = cfg;
    resolved.set("out_dir", out);
    write_resolved(resolved, out);
    const double max_rhat = max_finite_rhat(rows);
    std::cout << "diagnose: max_rhat=" << max_rhat << ", divergences=" << ds.total_divergences() << "\n";
    return max_rhat > 1.01 ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and Bayesian inference engine for stratified endemic-epidemic count models"};
    app.require_subcommand(1);

    CommonArgs args;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config_path, "key-value config file")->required();
        sub->add_option("--out-dir", args.out_dir, "output directory (overrides config out_dir)");
        sub->add_option("--seed", args.seed, "RNG seed (overrides config seed)");
        sub->add_option("--jobs", args.jobs, "parallel workers for chains/replicates");
    };

    auto* sim = app.add_subcommand("simulate", "forward-simulate panels or scenario grids");
    auto* fit = app.add_subcommand("fit", "fit a model by NUTS and write draws + diagnostics");
    auto* fcst = app.add_subcommand("forecast", "posterior-predictive forecasts from saved draws");
    auto* score = app.add_subcommand("score", "log scores against truth / paired aggregation");
    auto* prior = app.add_subcommand("prior-check", "sample the contact prior and summarize");
    auto* diag = app.add_subcommand("diagnose", "recompute diagnostics from saved draws");
    for (auto* sub : {sim, fit, fcst, score, prior, diag}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return run_simulate(args);
        if (fit->parsed()) return run_fit(args);
        if (fcst->parsed()) return run_forecast(args);
        if (score->parsed()) return run_score(args);
        if (prior->parsed()) return run_prior_check(args);
        if (diag->parsed()) return run_diagnose(args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
