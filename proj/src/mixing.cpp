#include "epilatent/mixing.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "epilatent/csv.hpp"
#include "epilatent/errors.hpp"

namespace epilatent {

namespace {

constexpr double kColumnSumTol = 1e-12;

void check_column_stochastic(const Eigen::MatrixXd& w, const char* what) {
    for (int j = 0; j < w.cols(); ++j) {
        double s = 0.0;
        for (int i = 0; i < w.rows(); ++i) {
            if (w(i, j) < 0.0 || w(i, j) > 1.0 + kColumnSumTol)
                throw ValidationError(std::string(what) + ": entries must lie in [0,1]");
            s += w(i, j);
        }
        if (std::fabs(s - 1.0) > 1e-10)
            throw ValidationError(std::string(what) + ": column " + std::to_string(j + 1) + " sums to " +
                                  std::to_string(s) + ", expected 1");
    }
}

Eigen::MatrixXd column_normalize(const Eigen::MatrixXd& a, const char* what) {
    Eigen::MatrixXd w = a;
    for (int j = 0; j < w.cols(); ++j) {
        const double s = w.col(j).sum();
        if (!(s > 0.0)) throw DomainError(std::string(what) + ": column " + std::to_string(j + 1) + " has no mass");
        w.col(j) /= s;
    }
    return w;
}

}  // namespace

void ContactMatrix::validate() const {
    if (C.rows() != C.cols() || C.rows() < 1) throw ShapeError("contact matrix must be square");
    for (int i = 0; i < C.rows(); ++i)
        for (int j = 0; j < C.cols(); ++j) {
            if (!(C(i, j) > 0.0)) throw DomainError("contact matrix entries must be strictly positive");
            if (C(i, j) != C(j, i)) throw ValidationError("contact matrix must be symmetric");
        }
}

void AgeMixing::validate() const { check_column_stochastic(w, "age mixing"); }
void GeoMixing::validate() const { check_column_stochastic(w, "geo mixing"); }

void ContactPriorHyper::validate() const {
    if (!(alpha_diag > 0.0) || !(alpha_offdiag > 0.0) || !(scale > 0.0))
        throw DomainError("contact prior hyperparameters must be strictly positive");
}

ContactPriorHyper ContactPriorHyper::defaults(int I) {
    ContactPriorHyper h;
    h.scale = 1.0 / (2.0 * I);
    return h;
}

AgeMixing normalize_contact(const ContactMatrix& contact) {
    contact.validate();
    AgeMixing out{column_normalize(contact.C, "normalize_contact")};
    out.validate();
    return out;
}

GeoMixing geo_weights_power_decay(const Eigen::MatrixXi& orders, double rho) {
    if (!(rho >= 0.0)) throw DomainError("geo_weights_power_decay: rho must be >= 0");
    const int G = static_cast<int>(orders.rows());
    Eigen::MatrixXd a(G, G);
    for (int g = 0; g < G; ++g)
        for (int h = 0; h < G; ++h) a(g, h) = std::pow(1.0 + orders(g, h), -rho);
    GeoMixing out{column_normalize(a, "geo_weights_power_decay")};
    out.validate();
    return out;
}

GeoMixing geo_weights_gravity(const Eigen::MatrixXd& D, const Eigen::VectorXd& tau,
                              const Eigen::VectorXd& rho) {
    const int G = static_cast<int>(D.rows());
    if (D.cols() != G || tau.size() != G || rho.size() != G)
        throw ShapeError("geo_weights_gravity: dimension mismatch");
    for (int g = 0; g < G; ++g) {
        if (!(tau[g] > 0.0) || !(rho[g] > 0.0))
            throw DomainError("geo_weights_gravity: tau and rho must be positive");
    }
    Eigen::MatrixXd a(G, G);
    for (int j = 0; j < G; ++j)
        for (int g = 0; g < G; ++g) {
            if (!(D(g, j) > 0.0))
                throw DomainError("geo_weights_gravity: zero distance D(" + std::to_string(g + 1) + "," +
                                  std::to_string(j + 1) + ") with positive decay is singular");
            a(g, j) = tau[g] * std::pow(D(g, j), -rho[j]);
        }
    GeoMixing out{column_normalize(a, "geo_weights_gravity")};
    out.validate();
    return out;
}

EigenDeformation::EigenDeformation(const Eigen::MatrixXd& C_known) {
    if (C_known.rows() != C_known.cols() || C_known.rows() < 1)
        throw ShapeError("eigen_deformation: matrix must be square");
    Eigen::EigenSolver<Eigen::MatrixXd> solver(C_known);
    if (solver.info() != Eigen::Success) throw NumericError("eigen_deformation: eigendecomposition failed");
    const auto values = solver.eigenvalues();
    const auto vecs = solver.eigenvectors();
    const int n = static_cast<int>(values.size());
    const double scale = values.cwiseAbs().maxCoeff();
    eigenvalues.resize(n);
    log_eigenvalues.resize(n);
    vectors.resize(n, n);
    for (int j = 0; j < n; ++j) {
        if (std::fabs(values[j].imag()) > 1e-9 * scale)
            throw NumericError("eigen_deformation: complex eigenvalue encountered");
        if (!(values[j].real() > 0.0))
            throw NumericError("eigen_deformation: eigenvalues must be strictly positive");
        eigenvalues[j] = values[j].real();
        log_eigenvalues[j] = std::log(eigenvalues[j]);
        for (int i = 0; i < n; ++i) {
            if (std::fabs(vecs(i, j).imag()) > 1e-9) throw NumericError("eigen_deformation: complex eigenvector");
            vectors(i, j) = vecs(i, j).real();
        }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(vectors);
    if (!lu.isInvertible()) throw NumericError("eigen_deformation: matrix is not diagonalizable");
    vectors_inv = lu.inverse();
}

Eigen::MatrixXd EigenDeformation::recompose(double kappa, Eigen::MatrixXd* d_dkappa) const {
    const Eigen::ArrayXd powered = (log_eigenvalues.array() * kappa).exp();
    const Eigen::MatrixXd m = vectors * powered.matrix().asDiagonal() * vectors_inv;
    if (d_dkappa)
        *d_dkappa = vectors * (powered * log_eigenvalues.array()).matrix().asDiagonal() * vectors_inv;
    return m;
}

AgeMixing eigen_deformation(const Eigen::MatrixXd& C_known, double kappa) {
    if (!(kappa > 0.0)) throw DomainError("eigen_deformation: kappa must be positive");
    const EigenDeformation deco(C_known);
    Eigen::MatrixXd m = deco.recompose(kappa);
    const double tol = 1e-10 * m.cwiseAbs().maxCoeff();
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
            if (m(i, j) < -tol)
                throw NumericError("eigen_deformation: recomposed entry " + std::to_string(m(i, j)) +
                                   " is negative beyond tolerance");
            if (m(i, j) < 0.0) m(i, j) = 0.0;
        }
    AgeMixing out{column_normalize(m, "eigen_deformation")};
    out.validate();
    return out;
}

ContactMatrix sample_contact_prior(const ContactPriorHyper& hyper, int I, Rng& rng) {
    hyper.validate();
    if (I < 2) throw DomainError("sample_contact_prior: need at least two groups");
    Eigen::MatrixXd C(I, I);
    // column-major over the lower triangle; this ordering is the file/vector
    // convention used everywhere a triangle is flattened
    for (int j = 0; j < I; ++j)
        for (int i = j; i < I; ++i) {
            const double alpha = (i == j) ? hyper.alpha_diag : hyper.alpha_offdiag;
            const double c = rng.gamma(alpha, hyper.scale);
            C(i, j) = c;
            C(j, i) = c;
        }
    return ContactMatrix{C};
}

Eigen::VectorXd activity_from_contact(const ContactMatrix& contact) {
    contact.validate();
    return contact.C.colwise().sum();
}

ContactPriorHyper hyper_from_target(double expected_diag, double conc_diag, int I) {
    if (!(expected_diag > 0.0) || !(expected_diag < 1.0))
        throw DomainError("hyper_from_target: expected_diag must lie in (0,1)");
    if (!(conc_diag > 0.0)) throw DomainError("hyper_from_target: conc_diag must be positive");
    if (I < 2) throw DomainError("hyper_from_target: need at least two groups");
    ContactPriorHyper h;
    h.alpha_diag = conc_diag;
    h.alpha_offdiag = conc_diag * (1.0 - expected_diag) / ((I - 1) * expected_diag);
    h.scale = 1.0 / (2.0 * I);
    h.validate();
    return h;
}

ContactMatrix load_contact_matrix(const std::string& csv_path) {
    const CsvTable t = CsvTable::read_file(csv_path);
    const int I = static_cast<int>(t.header().size());
    if (t.rows() != static_cast<std::size_t>(I))
        throw ShapeError(csv_path + ": contact matrix must be square (header = age labels)");
    Eigen::MatrixXd C(I, I);
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < I; ++j) C(i, j) = t.cell_double(i, j);
    ContactMatrix out{C};
    out.validate();
    return out;
}

void save_contact_matrix(const ContactMatrix& contact, const std::vector<std::string>& age_labels,
                         const std::string& csv_path) {
    contact.validate();
    if (static_cast<int>(age_labels.size()) != contact.C.rows())
        throw ShapeError("save_contact_matrix: label count mismatch");
    CsvTable t(age_labels);
    for (int i = 0; i < contact.C.rows(); ++i) {
        std::vector<std::string> row;
        for (int j = 0; j < contact.C.cols(); ++j) row.push_back(format_double(contact.C(i, j)));
        t.add_row(row);
    }
    t.write_file(csv_path);
}

}  // namespace epilatent
