#include "epilatent/posterior.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "epilatent/config.hpp"
#include "epilatent/csv.hpp"
#include "epilatent/distributions.hpp"
#include "epilatent/errors.hpp"
#include "epilatent/special.hpp"

namespace epilatent {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kSeasonalFreq = 2.0 * 3.14159265358979323846 / 52.0;
// beyond this an exp-transformed coordinate is treated as an invalid point
constexpr double kExpBound = 80.0;

int triangle_size(int I) { return I * (I + 1) / 2; }

// lower-triangle flattening is column-major: (j, i >= j)
void for_each_lower(int I, const std::function<void(int q, int i, int j)>& fn) {
    int q = 0;
    for (int j = 0; j < I; ++j)
        for (int i = j; i < I; ++i) fn(q++, i, j);
}

}  // namespace

// ---------------------------------------------------------------------------
// ParamLayout

int ParamLayout::dim() const {
    int d = 0;
    for (const auto& b : blocks) d += b.size;
    return d;
}

bool ParamLayout::has_block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return true;
    return false;
}

const ParamBlock& ParamLayout::block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return b;
    throw ShapeError("parameter layout has no block '" + name + "'");
}

std::vector<std::string> ParamLayout::flat_names() const {
    std::vector<std::string> out;
    for (const auto& b : blocks) {
        if (!b.labels.empty()) {
            out.insert(out.end(), b.labels.begin(), b.labels.end());
        } else if (b.size == 1) {
            out.push_back(b.name);
        } else {
            for (int k = 0; k < b.size; ++k) out.push_back(b.name + "[" + std::to_string(k + 1) + "]");
        }
    }
    return out;
}

Eigen::VectorXd ParamLayout::constrain(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw ShapeError("constrain: dimension mismatch");
    Eigen::VectorXd v = x;
    for (const auto& b : blocks)
        if (b.transform == Transform::exp)
            for (int k = 0; k < b.size; ++k) v[b.offset + k] = std::exp(x[b.offset + k]);
    return v;
}

Eigen::VectorXd ParamLayout::unconstrain(const Eigen::VectorXd& v) const {
    if (v.size() != dim()) throw ShapeError("unconstrain: dimension mismatch");
    Eigen::VectorXd x = v;
    for (const auto& b : blocks)
        if (b.transform == Transform::exp)
            for (int k = 0; k < b.size; ++k) {
                if (!(v[b.offset + k] > 0.0))
                    throw DomainError("unconstrain: block '" + b.name + "' requires positive values");
                x[b.offset + k] = std::log(v[b.offset + k]);
            }
    return x;
}

double ParamLayout::log_jacobian(const Eigen::VectorXd& x) const {
    double lj = 0.0;
    for (const auto& b : blocks)
        if (b.transform == Transform::exp)
            for (int k = 0; k < b.size; ++k) lj += x[b.offset + k];
    return lj;
}

// ---------------------------------------------------------------------------
// PriorSpec

const PriorEntry& PriorSpec::find(const std::string& block) const {
    for (const auto& e : entries)
        if (e.block == block) return e;
    throw ConfigError("prior spec has no entry for block '" + block + "'");
}

bool PriorSpec::has(const std::string& block) const {
    for (const auto& e : entries)
        if (e.block == block) return true;
    return false;
}

PriorSpec PriorSpec::preset(const std::string& name, Variant variant, int I) {
    PriorSpec s;
    auto add = [&](const char* block, const char* family, std::vector<double> params) {
        s.entries.push_back({block, family, std::move(params)});
    };
    const double contact_scale = 1.0 / (2.0 * I);
    if (variant == Variant::outbreak) {
        if (name != "outbreak") throw ConfigError("outbreak variant uses the 'outbreak' prior preset");
        add("log_delta", "halfnormal", {1.0});
        add("log_theta", "halfcauchy", {5.0});
        add("log_k", "halfcauchy", {1e4});
        add("log_gamma", "halfcauchy", {1.0});
        add("log_R", "normal", {0.0, 2.0});
        add("log_tau", "normal_unc", {0.0, 3.0});
        add("mean_log_rho", "normal", {0.0, 2.0});
        add("sd_log_rho", "halfnormal", {1.0});
        add("log_rho_geo", "hier_normal_unc", {});
        add("contact", "contact_gamma", {4.32, 1.30, contact_scale});
        add("log_activity", "gamma_on_log", {10.8, 1.0 / 12.0});
        add("latent", "std_normal", {});
        return s;
    }
    if (name != "simstudy" && name != "analysis")
        throw ConfigError("unknown prior preset '" + name + "' (expected simstudy|analysis|outbreak)");
    const bool analysis = (name == "analysis");
    add("end_intercept", "normal", {3.0, 2.0});
    add("end_geo", "normal", {0.0, 3.0});
    add("end_age", "normal", {0.0, 3.0});
    add("end_sin", "normal", {0.0, 3.0});
    add("end_cos", "normal", {0.0, 3.0});
    add("end_xmas", "normal", {0.0, 3.0});
    // simstudy places Normal(-1/2, 1) on -log(psi), i.e. Normal(1/2, 1) on log(psi)
    if (analysis)
        add("log_psi", "halfcauchy", {1.0});
    else
        add("log_psi", "normal_unc", {0.5, 1.0});
    if (variant != Variant::naive) {
        add("ne_intercept", "normal", {2.0, 5.0});
        add("ne_geo", "normal", {0.0, 3.0});
        add("ne_age", "normal", {0.0, 3.0});
        add("ne_log_pop", "normal", {0.0, 2.0});
        add("log_rho", "normal_unc", {0.0, 1.0});
    }
    if (variant == Variant::reduced) add("log_kappa", "normal_unc", {0.0, 0.75});
    if (variant == Variant::full) {
        // simstudy places Normal(-2, 1) on -log(theta)
        if (analysis)
            add("log_theta", "halfcauchy", {1.0});
        else
            add("log_theta", "normal_unc", {2.0, 1.0});
        add("contact", "contact_gamma", {4.32, 1.30, contact_scale});
        add("latent", "std_normal", {});
    }
    return s;
}

PriorSpec PriorSpec::parse_file(const std::string& path) {
    const KeyValueConfig cfg = KeyValueConfig::parse_file(path);
    const auto blocks = cfg.get_string("blocks");
    PriorSpec s;
    std::stringstream ss(blocks);
    std::string block;
    while (std::getline(ss, block, ',')) {
        const std::string line = cfg.get_string(block);
        std::stringstream ls(line);
        PriorEntry e;
        e.block = block;
        ls >> e.family;
        double v;
        while (ls >> v) e.params.push_back(v);
        if (e.family.empty()) throw ConfigError(path + ": empty prior family for block '" + block + "'");
        s.entries.push_back(std::move(e));
    }
    cfg.check_all_consumed();
    return s;
}

std::string PriorSpec::to_string() const {
    std::ostringstream out;
    std::string blocks;
    for (const auto& e : entries) blocks += (blocks.empty() ? "" : ",") + e.block;
    out << "blocks = " << blocks << "\n";
    for (const auto& e : entries) {
        out << e.block << " = " << e.family;
        for (double p : e.params) out << " " << format_double(p);
        out << "\n";
    }
    return out.str();
}

void PriorSpec::write_file(const std::string& path) const { write_file_atomic(path, to_string()); }

double log_prior_generic(const Eigen::VectorXd& x, const ParamLayout& layout, const PriorSpec& spec,
                         Eigen::VectorXd* grad) {
    double lp = 0.0;
    for (const auto& b : layout.blocks) {
        if (!spec.has(b.name)) throw ConfigError("no prior entry for block '" + b.name + "'");
        const PriorEntry& e = spec.find(b.name);
        if (e.family == "hier_normal_unc") continue;  // model-coupled, added by the posterior
        if (e.family == "std_normal") {
            for (int k = 0; k < b.size; ++k) {
                const double z = x[b.offset + k];
                lp += -0.5 * z * z - kLogSqrt2Pi;
                if (grad) (*grad)[b.offset + k] += -z;
            }
        } else if (e.family == "normal" || e.family == "normal_unc") {
            if (e.params.size() != 2) throw ConfigError("normal prior needs (mu, sigma)");
            if (e.family == "normal" && b.transform != Transform::identity)
                throw ConfigError("block '" + b.name + "': use normal_unc or a constrained-scale family");
            for (int k = 0; k < b.size; ++k) {
                lp += normal_lpdf(x[b.offset + k], e.params[0], e.params[1]);
                if (grad) (*grad)[b.offset + k] += normal_lpdf_grad(x[b.offset + k], e.params[0], e.params[1]);
            }
        } else if (e.family == "halfnormal" || e.family == "halfcauchy" || e.family == "gamma") {
            if (b.transform != Transform::exp)
                throw ConfigError("block '" + b.name + "': constrained-scale priors need a positive block");
            for (int k = 0; k < b.size; ++k) {
                const double xv = x[b.offset + k];
                const double v = std::exp(xv);
                double lpv, dv;
                if (e.family == "halfnormal") {
                    lpv = halfnormal_lpdf(v, e.params.at(0));
                    dv = halfnormal_lpdf_grad(v, e.params.at(0));
                } else if (e.family == "halfcauchy") {
                    lpv = halfcauchy_lpdf(v, e.params.at(0));
                    dv = halfcauchy_lpdf_grad(v, e.params.at(0));
                } else {
                    lpv = gamma_lpdf(v, e.params.at(0), e.params.at(1));
                    dv = gamma_lpdf_grad(v, e.params.at(0), e.params.at(1));
                }
                lp += lpv + xv;  // + log Jacobian
                if (grad) (*grad)[b.offset + k] += dv * v + 1.0;
            }
        } else if (e.family == "contact_gamma") {
            if (e.params.size() != 3) throw ConfigError("contact_gamma prior needs (a_diag, a_offdiag, scale)");
            const int I = static_cast<int>(std::lround((std::sqrt(8.0 * b.size + 1.0) - 1.0) / 2.0));
            if (triangle_size(I) != b.size) throw ShapeError("contact block size is not a triangle number");
            const double scale = e.params[2];
            for_each_lower(I, [&](int q, int i, int j) {
                const double alpha = (i == j) ? e.params[0] : e.params[1];
                const double c = x[b.offset + q];
                // gamma lpdf on exp(c) plus Jacobian, combined analytically
                lp += alpha * c - std::exp(c) / scale - std::lgamma(alpha) - alpha * std::log(scale);
                if (grad) (*grad)[b.offset + q] += alpha - std::exp(c) / scale;
            });
        } else {
            throw ConfigError("unknown prior family '" + e.family + "' for block '" + b.name + "'");
        }
    }
    return lp;
}

// ---------------------------------------------------------------------------
// RarePosterior

RarePosterior::RarePosterior(PanelData panel, Eigen::MatrixXi orders, RareModelOptions options)
    : panel_(std::move(panel)), orders_(std::move(orders)), options_(std::move(options)) {
    panel_.validate();
    if (options_.variant == Variant::outbreak)
        throw ConfigError("RarePosterior: use OutbreakPosterior for the outbreak variant");
    if (panel_.T < 2) throw ShapeError("RarePosterior: panel must have T >= 2");
    if (orders_.rows() != panel_.G || orders_.cols() != panel_.G)
        throw ShapeError("RarePosterior: adjacency orders must be G x G");
    const int G = panel_.G, I = panel_.I, T = panel_.T;

    if (options_.priors.entries.empty()) options_.priors = PriorSpec::preset("simstudy", options_.variant, I);
    if (options_.variant == Variant::reduced) {
        if (options_.known_contact.rows() != I || options_.known_contact.cols() != I)
            throw ShapeError("RarePosterior: reduced variant needs a known I x I contact matrix");
        deformation_ = std::make_unique<EigenDeformation>(options_.known_contact);
    }

    log_share_.resize(G, I);
    const double total = panel_.populations.sum();
    for (int g = 0; g < G; ++g)
        for (int i = 0; i < I; ++i) log_share_(g, i) = std::log(panel_.populations(g, i) / total);

    counts_.reserve(T);
    for (int t = 1; t <= T; ++t) counts_.push_back(panel_.counts_at(t - 1));
    sin_t_.resize(T);
    cos_t_.resize(T);
    holiday_.resize(T);
    for (int t = 1; t <= T; ++t) {
        sin_t_[t - 1] = std::sin(kSeasonalFreq * t);
        cos_t_[t - 1] = std::cos(kSeasonalFreq * t);
        holiday_[t - 1] = (panel_.week_of_year[t - 1] == 1 || panel_.week_of_year[t - 1] == 52);
    }

    z_index_.assign(static_cast<std::size_t>(T) * G * I, -1);
    if (options_.variant == Variant::full) {
        for (int t = 2; t <= T; ++t)
            for (int g = 0; g < G; ++g)
                for (int i = 0; i < I; ++i)
                    if (counts_[t - 2](g, i) > 0.0) {
                        z_index_[(static_cast<std::size_t>(t - 1) * G + g) * I + i] =
                            static_cast<int>(active_z_.size());
                        active_z_.push_back({t, g, i});
                    }
    }

    auto add_block = [&](const char* name, int size, Transform tr, std::vector<std::string> labels = {}) {
        ParamBlock b;
        b.name = name;
        b.size = size;
        b.transform = tr;
        b.offset = layout_.dim();
        b.labels = std::move(labels);
        layout_.blocks.push_back(std::move(b));
        return layout_.blocks.back().offset;
    };
    auto shifted_labels = [&](const char* stem, int n) {
        std::vector<std::string> out;
        for (int k = 2; k <= n; ++k) out.push_back(std::string(stem) + "[" + std::to_string(k) + "]");
        return out;
    };

    off_b0_ = add_block("end_intercept", 1, Transform::identity);
    off_bgeo_ = add_block("end_geo", G - 1, Transform::identity, shifted_labels("end_geo", G));
    off_bage_ = add_block("end_age", I - 1, Transform::identity, shifted_labels("end_age", I));
    off_bsin_ = add_block("end_sin", I, Transform::identity);
    off_bcos_ = add_block("end_cos", I, Transform::identity);
    off_bx_ = add_block("end_xmas", 1, Transform::identity);
    off_psi_ = add_block("log_psi", 1, Transform::exp);
    if (options_.variant != Variant::naive) {
        off_e0_ = add_block("ne_intercept", 1, Transform::identity);
        off_egeo_ = add_block("ne_geo", G - 1, Transform::identity, shifted_labels("ne_geo", G));
        off_eage_ = add_block("ne_age", I - 1, Transform::identity, shifted_labels("ne_age", I));
        off_epop_ = add_block("ne_log_pop", 1, Transform::identity);
        off_rho_ = add_block("log_rho", 1, Transform::exp);
    }
    if (options_.variant == Variant::reduced) off_kappa_ = add_block("log_kappa", 1, Transform::exp);
    if (options_.variant == Variant::full) {
        off_theta_ = add_block("log_theta", 1, Transform::exp);
        std::vector<std::string> clabels;
        for_each_lower(I, [&](int, int i, int j) {
            clabels.push_back("contact[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]");
        });
        off_contact_ = add_block("contact", triangle_size(I), Transform::exp, std::move(clabels));
        std::vector<std::string> zlabels;
        for (const auto& c : active_z_)
            zlabels.push_back("z[" + std::to_string(c[0]) + "," + std::to_string(c[1] + 1) + "," +
                              std::to_string(c[2] + 1) + "]");
        off_z_ = add_block("latent", static_cast<int>(active_z_.size()), Transform::identity,
                           std::move(zlabels));
    }
    for (const auto& b : layout_.blocks) (void)options_.priors.find(b.name);  // fail fast on gaps
}

double RarePosterior::log_likelihood(const Eigen::VectorXd& x) const { return eval(x, nullptr, false, true); }
double RarePosterior::log_prior(const Eigen::VectorXd& x) const { return eval(x, nullptr, true, false); }
double RarePosterior::logp_grad(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    return eval(x, grad, true, true);
}

RareDraw RarePosterior::decode(const Eigen::VectorXd& x) const {
    const int G = panel_.G, I = panel_.I;
    RareDraw d;
    RareDiseaseParams& p = d.params;
    p.G = G;
    p.I = I;
    p.beta0 = x[off_b0_];
    p.beta_geo = Eigen::VectorXd::Zero(G);
    for (int g = 1; g < G; ++g) p.beta_geo[g] = x[off_bgeo_ + g - 1];
    p.beta_age = Eigen::VectorXd::Zero(I);
    for (int i = 1; i < I; ++i) p.beta_age[i] = x[off_bage_ + i - 1];
    p.beta_sin = x.segment(off_bsin_, I);
    p.beta_cos = x.segment(off_bcos_, I);
    p.beta_xmas = x[off_bx_];
    p.psi = std::exp(x[off_psi_]);
    p.eta_geo = Eigen::VectorXd::Zero(G);
    p.eta_age = Eigen::VectorXd::Zero(I);
    p.rho = 1.0;
    if (options_.variant != Variant::naive) {
        p.eta0 = x[off_e0_];
        for (int g = 1; g < G; ++g) p.eta_geo[g] = x[off_egeo_ + g - 1];
        for (int i = 1; i < I; ++i) p.eta_age[i] = x[off_eage_ + i - 1];
        p.eta_logpop = x[off_epop_];
        p.rho = std::exp(x[off_rho_]);
    }
    p.theta = (options_.variant == Variant::full) ? std::exp(x[off_theta_]) : 0.0;
    if (options_.variant == Variant::full) {
        Eigen::MatrixXd C(I, I);
        for_each_lower(I, [&](int q, int i, int j) {
            const double v = std::exp(x[off_contact_ + q]);
            C(i, j) = v;
            C(j, i) = v;
        });
        p.contact = ContactMatrix{C};
    } else if (options_.variant == Variant::reduced) {
        p.contact = ContactMatrix{options_.known_contact};
        d.kappa = std::exp(x[off_kappa_]);
    } else {
        p.contact = ContactMatrix{Eigen::MatrixXd::Ones(I, I)};
    }
    p.validate();
    return d;
}

double RarePosterior::eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad, bool with_prior,
                           bool with_lik) const {
    const int G = panel_.G, I = panel_.I, T = panel_.T;
    if (x.size() != layout_.dim()) throw ShapeError("RarePosterior: parameter vector has wrong length");
    if (grad) {
        grad->resize(x.size());
        grad->setZero();
    }
    for (const auto& b : layout_.blocks)
        if (b.transform == Transform::exp)
            for (int k = 0; k < b.size; ++k)
                if (std::fabs(x[b.offset + k]) > kExpBound) return kNegInf;

    double lp = 0.0;
    const bool epidemic = options_.variant != Variant::naive;
    const bool full = options_.variant == Variant::full;
    const double R0 = options_.R0;

    if (with_lik) {
        const double beta0 = x[off_b0_];
        Eigen::VectorXd beta_geo = Eigen::VectorXd::Zero(G);
        for (int g = 1; g < G; ++g) beta_geo[g] = x[off_bgeo_ + g - 1];
        Eigen::VectorXd beta_age = Eigen::VectorXd::Zero(I);
        for (int i = 1; i < I; ++i) beta_age[i] = x[off_bage_ + i - 1];
        const Eigen::VectorXd beta_sin = x.segment(off_bsin_, I);
        const Eigen::VectorXd beta_cos = x.segment(off_bcos_, I);
        const double beta_xmas = x[off_bx_];
        const double psi = std::exp(x[off_psi_]);

        Eigen::MatrixXd phi, wG, wI;
        Eigen::MatrixXd decay;                  // (1+o)^(-rho), pre-normalization
        Eigen::VectorXd decay_colsum;
        Eigen::MatrixXd C;
        Eigen::VectorXd contact_colsum;
        Eigen::MatrixXd deform, deform_dkappa;  // reduced
        Eigen::VectorXd deform_colsum;
        double rho = 1.0, theta = 0.0, kappa = 1.0;

        if (epidemic) {
            const double eta0 = x[off_e0_];
            Eigen::VectorXd eta_geo = Eigen::VectorXd::Zero(G);
            for (int g = 1; g < G; ++g) eta_geo[g] = x[off_egeo_ + g - 1];
            Eigen::VectorXd eta_age = Eigen::VectorXd::Zero(I);
            for (int i = 1; i < I; ++i) eta_age[i] = x[off_eage_ + i - 1];
            const double eta_logpop = x[off_epop_];
            rho = std::exp(x[off_rho_]);

            phi.resize(G, I);
            for (int g = 0; g < G; ++g)
                for (int i = 0; i < I; ++i)
                    phi(g, i) = std::exp(eta_logpop * log_share_(g, i) + eta0 + eta_geo[g] + eta_age[i]);

            decay.resize(G, G);
            for (int g = 0; g < G; ++g)
                for (int h = 0; h < G; ++h) decay(g, h) = std::pow(1.0 + orders_(g, h), -rho);
            decay_colsum = decay.colwise().sum();
            wG = decay.array().rowwise() / decay_colsum.transpose().array();

            if (full) {
                theta = std::exp(x[off_theta_]);
                C.resize(I, I);
                for_each_lower(I, [&](int q, int i, int j) {
                    const double v = std::exp(x[off_contact_ + q]);
                    C(i, j) = v;
                    C(j, i) = v;
                });
                contact_colsum = C.colwise().sum();
                wI = C.array().rowwise() / contact_colsum.transpose().array();
            } else {
                kappa = std::exp(x[off_kappa_]);
                deform = deformation_->recompose(kappa, grad ? &deform_dkappa : nullptr);
                for (int i = 0; i < I; ++i)
                    for (int j = 0; j < I; ++j)
                        if (!(deform(i, j) > 0.0)) return kNegInf;  // outside the admissible kappa region
                deform_colsum = deform.colwise().sum();
                wI = deform.array().rowwise() / deform_colsum.transpose().array();
            }
        }

        Eigen::MatrixXd g_phi_acc = Eigen::MatrixXd::Zero(G, I);
        Eigen::MatrixXd g_wG_acc = Eigen::MatrixXd::Zero(G, G);
        Eigen::MatrixXd g_wI_acc = Eigen::MatrixXd::Zero(I, I);
        Eigen::VectorXd g_beta_geo = Eigen::VectorXd::Zero(G);
        Eigen::VectorXd g_beta_age = Eigen::VectorXd::Zero(I);
        Eigen::VectorXd g_beta_sin = Eigen::VectorXd::Zero(I);
        Eigen::VectorXd g_beta_cos = Eigen::VectorXd::Zero(I);
        double g_beta0 = 0.0, g_beta_xmas = 0.0, g_psi_nat = 0.0, g_theta_nat = 0.0;

        Eigen::MatrixXd r(G, I), dr_dz(G, I), dr_dtheta(G, I), g_lambda(G, I);
        for (int t = 2; t <= T; ++t) {
            const Eigen::MatrixXd& y_prev = counts_[t - 2];
            const Eigen::MatrixXd& y = counts_[t - 1];
            const double st = sin_t_[t - 1], ct = cos_t_[t - 1];
            const double ht = holiday_[t - 1] ? 1.0 : 0.0;

            Eigen::MatrixXd delta(G, I);
            for (int g = 0; g < G; ++g)
                for (int i = 0; i < I; ++i)
                    delta(g, i) = std::exp(log_share_(g, i) + beta0 + beta_geo[g] + beta_age[i] +
                                           beta_sin[i] * st + beta_cos[i] * ct + beta_xmas * ht);

            Eigen::MatrixXd lambda;
            Eigen::MatrixXd mixed;
            if (epidemic) {
                if (full) {
                    for (int g = 0; g < G; ++g)
                        for (int i = 0; i < I; ++i) {
                            const double prev = y_prev(g, i);
                            if (prev > 0.0) {
                                const int zi =
                                    z_index_[(static_cast<std::size_t>(t - 1) * G + g) * I + i];
                                const double m = R0 * prev;
                                const auto lg = lognormal_latent_grad(x[off_z_ + zi], m, theta * m);
                                r(g, i) = lg.r;
                                dr_dz(g, i) = lg.d_z;
                                dr_dtheta(g, i) = lg.d_v * m;
                            } else {
                                r(g, i) = 0.0;
                                dr_dz(g, i) = 0.0;
                                dr_dtheta(g, i) = 0.0;
                            }
                        }
                } else {
                    r = R0 * y_prev;  // theta = 0 path: latent collapses to its mean
                }
                mixed = wG * r * wI.transpose();
                lambda = delta + (phi.array() * mixed.array()).matrix();
            } else {
                lambda = delta;
            }

            for (int g = 0; g < G; ++g)
                for (int i = 0; i < I; ++i) {
                    const double lam = lambda(g, i);
                    if (!std::isfinite(lam) || !(lam > 0.0)) return kNegInf;
                    const long long yv = static_cast<long long>(y(g, i));
                    if (grad) {
                        const NegbinGrad ng = negbin_lpmf_grad(yv, lam, psi);
                        lp += ng.lp;
                        g_lambda(g, i) = ng.d_mu;
                        g_psi_nat += ng.d_psi;
                        const double w = ng.d_mu * delta(g, i);
                        g_beta0 += w;
                        g_beta_geo[g] += w;
                        g_beta_age[i] += w;
                        g_beta_sin[i] += w * st;
                        g_beta_cos[i] += w * ct;
                        g_beta_xmas += w * ht;
                    } else {
                        lp += negbin_lpmf(yv, lam, psi);
                    }
                    if (!std::isfinite(lp)) return kNegInf;
                }

            if (grad && epidemic) {
                const Eigen::MatrixXd gM = (g_lambda.array() * phi.array()).matrix();
                g_phi_acc += (g_lambda.array() * mixed.array()).matrix();
                g_wG_acc += gM * (r * wI.transpose()).transpose();
                g_wI_acc += gM.transpose() * (wG * r);
                if (full) {
                    const Eigen::MatrixXd gr = wG.transpose() * gM * wI;
                    for (int g = 0; g < G; ++g)
                        for (int i = 0; i < I; ++i)
                            if (y_prev(g, i) > 0.0) {
                                const int zi =
                                    z_index_[(static_cast<std::size_t>(t - 1) * G + g) * I + i];
                                (*grad)[off_z_ + zi] += gr(g, i) * dr_dz(g, i);
                                g_theta_nat += gr(g, i) * dr_dtheta(g, i);
                            }
                }
            }
        }

        if (grad) {
            (*grad)[off_b0_] += g_beta0;
            for (int g = 1; g < G; ++g) (*grad)[off_bgeo_ + g - 1] += g_beta_geo[g];
            for (int i = 1; i < I; ++i) (*grad)[off_bage_ + i - 1] += g_beta_age[i];
            for (int i = 0; i < I; ++i) {
                (*grad)[off_bsin_ + i] += g_beta_sin[i];
                (*grad)[off_bcos_ + i] += g_beta_cos[i];
            }
            (*grad)[off_bx_] += g_beta_xmas;
            (*grad)[off_psi_] += psi * g_psi_nat;

            if (epidemic) {
                double g_eta0 = 0.0, g_epop = 0.0;
                Eigen::VectorXd g_eta_geo = Eigen::VectorXd::Zero(G);
                Eigen::VectorXd g_eta_age = Eigen::VectorXd::Zero(I);
                for (int g = 0; g < G; ++g)
                    for (int i = 0; i < I; ++i) {
                        const double w = g_phi_acc(g, i) * phi(g, i);
                        g_eta0 += w;
                        g_eta_geo[g] += w;
                        g_eta_age[i] += w;
                        g_epop += w * log_share_(g, i);
                    }
                (*grad)[off_e0_] += g_eta0;
                for (int g = 1; g < G; ++g) (*grad)[off_egeo_ + g - 1] += g_eta_geo[g];
                for (int i = 1; i < I; ++i) (*grad)[off_eage_ + i - 1] += g_eta_age[i];
                (*grad)[off_epop_] += g_epop;

                // rho through the column-normalized decay weights
                double g_rho_nat = 0.0;
                for (int j = 0; j < G; ++j) {
                    const double inner = g_wG_acc.col(j).dot(wG.col(j));
                    for (int k = 0; k < G; ++k) {
                        const double dA = (g_wG_acc(k, j) - inner) / decay_colsum[j];
                        g_rho_nat += dA * (-std::log1p(static_cast<double>(orders_(k, j)))) * decay(k, j);
                    }
                }
                (*grad)[off_rho_] += rho * g_rho_nat;

                if (full) {
                    Eigen::MatrixXd dC(I, I);
                    for (int j = 0; j < I; ++j) {
                        const double inner = g_wI_acc.col(j).dot(wI.col(j));
                        for (int k = 0; k < I; ++k) dC(k, j) = (g_wI_acc(k, j) - inner) / contact_colsum[j];
                    }
                    for_each_lower(I, [&](int q, int i, int j) {
                        const double dsum = (i == j) ? dC(i, j) : dC(i, j) + dC(j, i);
                        (*grad)[off_contact_ + q] += dsum * C(i, j);
                    });
                    (*grad)[off_theta_] += theta * g_theta_nat;
                } else {
                    double g_kappa_nat = 0.0;
                    for (int j = 0; j < I; ++j) {
                        const double inner = g_wI_acc.col(j).dot(wI.col(j));
                        for (int k = 0; k < I; ++k) {
                            const double dM = (g_wI_acc(k, j) - inner) / deform_colsum[j];
                            g_kappa_nat += dM * deform_dkappa(k, j);
                        }
                    }
                    (*grad)[off_kappa_] += kappa * g_kappa_nat;
                }
            }
        }
    }

    if (with_prior) {
        lp += log_prior_generic(x, layout_, options_.priors, grad);
        if (!std::isfinite(lp)) return kNegInf;
    }
    return lp;
}

// ---------------------------------------------------------------------------
// OutbreakPosterior

OutbreakPosterior::OutbreakPosterior(PanelData panel, Eigen::MatrixXd distance, OutbreakModelOptions options)
    : panel_(std::move(panel)), distance_(std::move(distance)), options_(std::move(options)) {
    panel_.validate();
    if (panel_.T < 2) throw ShapeError("OutbreakPosterior: panel must have T >= 2");
    const int G = panel_.G, I = panel_.I, T = panel_.T;
    if (distance_.rows() != G || distance_.cols() != G)
        throw ShapeError("OutbreakPosterior: distance must be G x G");
    for (int g = 0; g < G; ++g)
        for (int h = 0; h < G; ++h)
            if (!(distance_(g, h) > 0.0))
                throw ValidationError("OutbreakPosterior: gravity weights need strictly positive distances "
                                      "(including the within-region diagonal)");

    if (options_.priors.entries.empty())
        options_.priors = PriorSpec::preset("outbreak", Variant::outbreak, I);

    counts_.reserve(T);
    for (int t = 1; t <= T; ++t) counts_.push_back(panel_.counts_at(t - 1));

    // susceptible pool and latent activity pattern are pure data
    Eigen::MatrixXd cumulative = Eigen::MatrixXd::Zero(G, I);
    z_index_.assign(static_cast<std::size_t>(T) * G * I, -1);
    for (int t = 2; t <= T; ++t) {
        cumulative += counts_[t - 2];
        Eigen::MatrixXd x_hat = panel_.populations - cumulative;
        for (int g = 0; g < G; ++g)
            for (int i = 0; i < I; ++i) {
                if (x_hat(g, i) < 0.0) x_hat(g, i) = 0.0;
                if (counts_[t - 1](g, i) > x_hat(g, i))
                    throw ValidationError(
                        "OutbreakPosterior: observed count exceeds the susceptible estimate at (t=" +
                        std::to_string(t) + ", g=" + std::to_string(g + 1) + ", i=" + std::to_string(i + 1) +
                        "); the data are inconsistent with permanent depletion");
                if (cumulative(g, i) > 0.0) {
                    z_index_[(static_cast<std::size_t>(t - 1) * G + g) * I + i] =
                        static_cast<int>(active_z_.size());
                    active_z_.push_back({t, g, i});
                }
            }
        susceptible_.push_back(std::move(x_hat));
    }

    auto add_block = [&](const char* name, int size, Transform tr, std::vector<std::string> labels = {}) {
        ParamBlock b;
        b.name = name;
        b.size = size;
        b.transform = tr;
        b.offset = layout_.dim();
        b.labels = std::move(labels);
        layout_.blocks.push_back(std::move(b));
        return layout_.blocks.back().offset;
    };

    std::vector<std::string> dlabels;
    for (int g = 0; g < G; ++g)
        for (int i = 0; i < I; ++i)
            dlabels.push_back("log_delta[" + std::to_string(g + 1) + "," + std::to_string(i + 1) + "]");
    off_delta_ = add_block("log_delta", G * I, Transform::exp, std::move(dlabels));
    off_theta_ = add_block("log_theta", 1, Transform::exp);
    off_k_ = add_block("log_k", 1, Transform::exp);
    off_gamma_ = add_block("log_gamma", 1, Transform::exp);
    off_logR_ = add_block("log_R", T - 1, Transform::identity);
    off_tau_ = add_block("log_tau", G, Transform::exp);
    off_mlr_ = add_block("mean_log_rho", 1, Transform::identity);
    off_slr_ = add_block("sd_log_rho", 1, Transform::exp);
    off_rho_ = add_block("log_rho_geo", G, Transform::exp);
    std::vector<std::string> clabels;
    for_each_lower(I, [&](int, int i, int j) {
        clabels.push_back("contact[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]");
    });
    off_contact_ = add_block("contact", triangle_size(I), Transform::exp, std::move(clabels));
    std::vector<std::string> zlabels;
    for (const auto& c : active_z_)
        zlabels.push_back("z[" + std::to_string(c[0]) + "," + std::to_string(c[1] + 1) + "," +
                          std::to_string(c[2] + 1) + "]");
    off_z_ = add_block("latent", static_cast<int>(active_z_.size()), Transform::identity, std::move(zlabels));

    for (const auto& b : layout_.blocks) (void)options_.priors.find(b.name);
    (void)options_.priors.find("log_activity");
}

double OutbreakPosterior::log_likelihood(const Eigen::VectorXd& x) const { return eval(x, nullptr, false, true); }
double OutbreakPosterior::log_prior(const Eigen::VectorXd& x) const { return eval(x, nullptr, true, false); }
double OutbreakPosterior::logp_grad(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    return eval(x, grad, true, true);
}

OutbreakDraw OutbreakPosterior::decode(const Eigen::VectorXd& x) const {
    const int G = panel_.G, I = panel_.I, T = panel_.T;
    OutbreakDraw d;
    OutbreakParams& p = d.params;
    p.G = G;
    p.I = I;
    p.T = T;
    p.delta.resize(G, I);
    for (int g = 0; g < G; ++g)
        for (int i = 0; i < I; ++i) p.delta(g, i) = std::exp(x[off_delta_ + g * I + i]);
    p.theta = std::exp(x[off_theta_]);
    p.k_precision = std::exp(x[off_k_]);
    p.gamma_decay = std::exp(x[off_gamma_]);
    p.log_R.assign(T - 1, 0.0);
    for (int t = 0; t < T - 1; ++t) p.log_R[t] = x[off_logR_ + t];
    p.tau = x.segment(off_tau_, G).array().exp();
    p.mean_log_rho = x[off_mlr_];
    p.sd_log_rho = std::exp(x[off_slr_]);
    p.rho_geo = x.segment(off_rho_, G).array().exp();
    Eigen::MatrixXd C(I, I);
    for_each_lower(I, [&](int q, int i, int j) {
        const double v = std::exp(x[off_contact_ + q]);
        C(i, j) = v;
        C(j, i) = v;
    });
    p.contact = ContactMatrix{C};
    p.validate();
    return d;
}

double OutbreakPosterior::eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad, bool with_prior,
                               bool with_lik) const {
    const int G = panel_.G, I = panel_.I, T = panel_.T;
    if (x.size() != layout_.dim()) throw ShapeError("OutbreakPosterior: parameter vector has wrong length");
    if (grad) {
        grad->resize(x.size());
        grad->setZero();
    }
    for (const auto& b : layout_.blocks)
        if (b.transform == Transform::exp)
            for (int k = 0; k < b.size; ++k)
                if (std::fabs(x[b.offset + k]) > kExpBound) return kNegInf;

    double lp = 0.0;

    // contact decode is shared by the likelihood and the activity prior factor
    Eigen::MatrixXd C(I, I);
    for_each_lower(I, [&](int q, int i, int j) {
        const double v = std::exp(x[off_contact_ + q]);
        C(i, j) = v;
        C(j, i) = v;
    });
    const Eigen::VectorXd contact_colsum = C.colwise().sum();
    const Eigen::VectorXd activity = contact_colsum;  // alpha_i
    const Eigen::MatrixXd wI = C.array().rowwise() / contact_colsum.transpose().array();

    Eigen::MatrixXd g_wI_acc = Eigen::MatrixXd::Zero(I, I);
    Eigen::VectorXd g_activity = Eigen::VectorXd::Zero(I);

    if (with_lik) {
        const double theta = std::exp(x[off_theta_]);
        const double kprec = std::exp(x[off_k_]);
        const double gamma = std::exp(x[off_gamma_]);
        const Eigen::VectorXd tau = x.segment(off_tau_, G).array().exp();
        const Eigen::VectorXd rho = x.segment(off_rho_, G).array().exp();

        Eigen::MatrixXd delta(G, I);
        for (int g = 0; g < G; ++g)
            for (int i = 0; i < I; ++i) delta(g, i) = std::exp(x[off_delta_ + g * I + i]);

        // gravity kernel tau_g * D^(-rho_j), column-normalized
        Eigen::MatrixXd kernel(G, G);
        for (int j = 0; j < G; ++j)
            for (int g = 0; g < G; ++g) kernel(g, j) = tau[g] * std::pow(distance_(g, j), -rho[j]);
        const Eigen::VectorXd kernel_colsum = kernel.colwise().sum();
        const Eigen::MatrixXd wG = kernel.array().rowwise() / kernel_colsum.transpose().array();

        Eigen::MatrixXd g_wG_acc = Eigen::MatrixXd::Zero(G, G);
        Eigen::MatrixXd g_delta_nat = Eigen::MatrixXd::Zero(G, I);
        double g_theta_nat = 0.0, g_k_nat = 0.0, g_gamma_nat = 0.0;

        const double decay = std::exp(-gamma);
        Eigen::MatrixXd y_hat = counts_[0];                          // week 2 estimate
        Eigen::MatrixXd dy_hat = Eigen::MatrixXd::Zero(G, I);        // d y_hat / d gamma

        Eigen::MatrixXd r(G, I), dr_dz(G, I), dr_dtheta(G, I), dr_dm(G, I), m_mat(G, I);
        for (int t = 2; t <= T; ++t) {
            const Eigen::MatrixXd& y = counts_[t - 1];
            const Eigen::MatrixXd& x_hat = susceptible_[t - 2];
            const double logR = x[off_logR_ + t - 2];
            const double R = std::exp(logR);

            for (int g = 0; g < G; ++g)
                for (int i = 0; i < I; ++i) {
                    const double yh = y_hat(g, i);
                    const double m = R * activity[i] * yh;
                    m_mat(g, i) = m;
                    if (yh > 0.0 && m > 1e-290) {
                        const int zi = z_index_[(static_cast<std::size_t>(t - 1) * G + g) * I + i];
                        const auto lg = lognormal_latent_grad(x[off_z_ + zi], m, theta * m);
                        r(g, i) = lg.r;
                        dr_dz(g, i) = lg.d_z;
                        dr_dtheta(g, i) = lg.d_v * m;
                        dr_dm(g, i) = lg.d_m + lg.d_v * theta;
                    } else {
                        r(g, i) = 0.0;
                        dr_dz(g, i) = 0.0;
                        dr_dtheta(g, i) = 0.0;
                        dr_dm(g, i) = 0.0;
                    }
                }

            const Eigen::MatrixXd mixed = wG * r * wI.transpose();
            Eigen::MatrixXd g_h(G, I);
            for (int g = 0; g < G; ++g)
                for (int i = 0; i < I; ++i) {
                    const double hazard = delta(g, i) + mixed(g, i) / panel_.populations(g, i);
                    if (!std::isfinite(hazard) || !(hazard > 0.0)) return kNegInf;
                    const double eh = std::exp(-hazard);
                    double p = -std::expm1(-hazard);
                    if (p >= 1.0) p = 1.0 - 1e-15;  // saturated link; derivative comes from eh anyway
                    const long long n = static_cast<long long>(x_hat(g, i));
                    const long long yv = static_cast<long long>(y(g, i));
                    if (grad) {
                        const BetabinomGrad bg = betabinom_lpmf_grad(yv, n, p, kprec);
                        lp += bg.lp;
                        g_h(g, i) = bg.d_p * eh;
                        g_k_nat += bg.d_k;
                    } else {
                        lp += betabinom_lpmf(yv, n, p, kprec);
                        g_h(g, i) = 0.0;
                    }
                    if (!std::isfinite(lp)) return kNegInf;
                }

            if (grad) {
                g_delta_nat += g_h;
                const Eigen::MatrixXd gM =
                    (g_h.array() / panel_.populations.array()).matrix();
                g_wG_acc += gM * (r * wI.transpose()).transpose();
                g_wI_acc += gM.transpose() * (wG * r);
                const Eigen::MatrixXd gr = wG.transpose() * gM * wI;
                for (int g = 0; g < G; ++g)
                    for (int i = 0; i < I; ++i)
                        if (r(g, i) > 0.0) {
                            const int zi = z_index_[(static_cast<std::size_t>(t - 1) * G + g) * I + i];
                            (*grad)[off_z_ + zi] += gr(g, i) * dr_dz(g, i);
                            g_theta_nat += gr(g, i) * dr_dtheta(g, i);
                            const double gm = gr(g, i) * dr_dm(g, i);
                            (*grad)[off_logR_ + t - 2] += gm * m_mat(g, i);  // d m / d logR = m
                            g_activity[i] += gm * R * y_hat(g, i);
                            g_gamma_nat += gm * R * activity[i] * dy_hat(g, i);
                        }
            }

            // advance the distributed-lag recurrences
            if (t < T) {
                dy_hat = decay * (dy_hat - y_hat);
                y_hat = counts_[t - 1] + decay * y_hat;
            }
        }

        if (grad) {
            for (int g = 0; g < G; ++g)
                for (int i = 0; i < I; ++i)
                    (*grad)[off_delta_ + g * I + i] += g_delta_nat(g, i) * delta(g, i);
            (*grad)[off_theta_] += theta * g_theta_nat;
            (*grad)[off_k_] += kprec * g_k_nat;
            (*grad)[off_gamma_] += gamma * g_gamma_nat;
            for (int j = 0; j < G; ++j) {
                const double inner = g_wG_acc.col(j).dot(wG.col(j));
                for (int k = 0; k < G; ++k) {
                    const double dK = (g_wG_acc(k, j) - inner) / kernel_colsum[j];
                    (*grad)[off_tau_ + k] += dK * kernel(k, j);  // d/d log tau_k
                    (*grad)[off_rho_ + j] += dK * kernel(k, j) * (-std::log(distance_(k, j))) * rho[j];
                }
            }
        }
    }

    if (with_prior) {
        lp += log_prior_generic(x, layout_, options_.priors, grad);
        if (!std::isfinite(lp)) return kNegInf;

        // hierarchical prior: log rho_g ~ Normal(mean_log_rho, sd_log_rho)
        const double mu = x[off_mlr_];
        const double sd = std::exp(x[off_slr_]);
        for (int g = 0; g < G; ++g) {
            const double lr = x[off_rho_ + g];
            lp += normal_lpdf(lr, mu, sd);
            if (grad) {
                const double zr = (lr - mu) / sd;
                (*grad)[off_rho_ + g] += -zr / sd;
                (*grad)[off_mlr_] += zr / sd;
                (*grad)[off_slr_] += zr * zr - 1.0;  // chain through sd = exp(x)
            }
        }

        // activity factor: Gamma density on log(alpha_i), a derived quantity
        const PriorEntry& act = options_.priors.find("log_activity");
        const double shape = act.params.at(0), scale = act.params.at(1);
        for (int i = 0; i < I; ++i) {
            if (!(activity[i] > 1.0)) return kNegInf;  // log(alpha) must be positive
            const double w = std::log(activity[i]);
            lp += gamma_lpdf(w, shape, scale);
            if (grad) g_activity[i] += gamma_lpdf_grad(w, shape, scale) / activity[i];
        }
    }

    if (grad) {
        // column-normalization adjoint for wI, then activity column sums,
        // then mirror into the symmetric lower-triangle coordinates
        Eigen::MatrixXd dC(I, I);
        for (int j = 0; j < I; ++j) {
            const double inner = g_wI_acc.col(j).dot(wI.col(j));
            for (int k = 0; k < I; ++k)
                dC(k, j) = (g_wI_acc(k, j) - inner) / contact_colsum[j] + g_activity[j];
        }
        for_each_lower(I, [&](int q, int i, int j) {
            const double dsum = (i == j) ? dC(i, j) : dC(i, j) + dC(j, i);
            (*grad)[off_contact_ + q] += dsum * C(i, j);
        });
    }
    return lp;
}

double max_grad_rel_error(const Posterior& post, const Eigen::VectorXd& x, double step) {
    Eigen::VectorXd grad(x.size());
    const double lp0 = post.logp_grad(x, &grad);
    if (!std::isfinite(lp0)) throw NumericError("max_grad_rel_error: point has non-finite density");
    double worst = 0.0;
    Eigen::VectorXd xp = x;
    for (int d = 0; d < x.size(); ++d) {
        xp[d] = x[d] + step;
        const double up = post.logp_grad(xp, nullptr);
        xp[d] = x[d] - step;
        const double dn = post.logp_grad(xp, nullptr);
        xp[d] = x[d];
        if (!std::isfinite(up) || !std::isfinite(dn))
            throw NumericError("max_grad_rel_error: finite-difference stencil left the support");
        const double fd = (up - dn) / (2.0 * step);
        const double scale = std::max({1.0, std::fabs(fd), std::fabs(grad[d])});
        worst = std::max(worst, std::fabs(fd - grad[d]) / scale);
    }
    return worst;
}

}  // namespace epilatent
