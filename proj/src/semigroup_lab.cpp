#include "tdbs/semigroup_lab.hpp"

#include "tdbs/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <random>

namespace tdbs {

namespace {

constexpr double kSymTol = 1e-13;

bool nearly_symmetric(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) return false;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= kSymTol * scale;
}

void require_square(const Eigen::MatrixXd& a, const char* what) {
    if (a.rows() != a.cols()) throw ShapeError(std::string(what) + ": matrix is not square");
}

Eigen::VectorXd log_uniform(std::size_t k, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    Eigen::VectorXd v(static_cast<Eigen::Index>(k));
    for (auto& x : v) x = std::exp(u(rng));
    return v;
}

Eigen::MatrixXd gaussian_matrix(std::size_t k, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    const auto n = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) g(i, j) = normal(rng);
    return g;
}

Eigen::MatrixXd orthogonal_from(std::mt19937_64& rng, std::size_t k) {
    const Eigen::MatrixXd g = gaussian_matrix(k, rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    return q;
}

Eigen::MatrixXd spectral(const Eigen::MatrixXd& q, const Eigen::VectorXd& lambda) {
    Eigen::MatrixXd a = q * lambda.asDiagonal() * q.transpose();
    return 0.5 * (a + a.transpose());
}

}  // namespace

MonotoneMatrix::MonotoneMatrix(Eigen::MatrixXd a) : a_(std::move(a)) {
    require_square(a_, "MonotoneMatrix");
    const Eigen::MatrixXd sym = 0.5 * (a_ + a_.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    certificate_ = a_.size() == 0 ? 0.0 : eig.eigenvalues().minCoeff();
    const double scale = a_.size() == 0 ? 0.0 : eig.eigenvalues().cwiseAbs().maxCoeff();
    if (certificate_ < -1e-12 * std::max(1.0, scale)) {
        throw InvalidOperatorError("matrix is not monotone: symmetric part has eigenvalue " +
                                   std::to_string(certificate_));
    }
    symmetric_ = nearly_symmetric(a_);
}

MonotoneMatrix MonotoneMatrix::random_symmetric(std::size_t k, std::uint64_t seed, double lo,
                                                double hi) {
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd q = orthogonal_from(rng, k);
    return MonotoneMatrix(spectral(q, log_uniform(k, rng, lo, hi)));
}

MonotoneMatrix MonotoneMatrix::random_nonsymmetric(std::size_t k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd q = orthogonal_from(rng, k);
    const Eigen::MatrixXd sym = spectral(q, log_uniform(k, rng, 1e-2, 1e1));
    const Eigen::MatrixXd g = gaussian_matrix(k, rng);
    return MonotoneMatrix(sym + 0.5 * (g - g.transpose()));
}

Eigen::MatrixXd random_orthogonal(std::size_t k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return orthogonal_from(rng, k);
}

Eigen::MatrixXd CommutingPair::a1() const { return spectral(q, lambda1); }
Eigen::MatrixXd CommutingPair::a2() const { return spectral(q, lambda2); }

double CommutingPair::commutator() const {
    const Eigen::MatrixXd x = a1();
    const Eigen::MatrixXd y = a2();
    return spectral_norm(x * y - y * x);
}

CommutingPair CommutingPair::random(std::size_t k, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    CommutingPair p;
    p.q = orthogonal_from(rng, k);
    p.lambda1 = log_uniform(k, rng, lo, hi);
    p.lambda2 = log_uniform(k, rng, lo, hi);
    return p;
}

std::vector<Eigen::MatrixXd> commuting_family(std::size_t k, std::size_t count,
                                              std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd q = orthogonal_from(rng, k);
    std::vector<Eigen::MatrixXd> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(spectral(q, log_uniform(k, rng, lo, hi)));
    return out;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd expm_symmetric(const Eigen::MatrixXd& a, double t) {
    require_square(a, "expm");
    if (t < 0.0) throw InvalidIntervalError("expm: t must be non-negative");
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    const Eigen::VectorXd e = (-t * eig.eigenvalues().array()).exp().matrix();
    const Eigen::MatrixXd& v = eig.eigenvectors();
    return v * e.asDiagonal() * v.transpose();
}

Eigen::MatrixXd expm_pade(const Eigen::MatrixXd& a, double t) {
    require_square(a, "expm");
    if (t < 0.0) throw InvalidIntervalError("expm: t must be non-negative");
    const Eigen::Index n = a.rows();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    if (n == 0) return id;

    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    Eigen::MatrixXd x = -t * a;
    const double norm1 = x.cwiseAbs().colwise().sum().maxCoeff();
    int s = 0;
    if (norm1 > theta13) {
        s = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
        x /= std::ldexp(1.0, s);
    }

    const Eigen::MatrixXd x2 = x * x;
    const Eigen::MatrixXd x4 = x2 * x2;
    const Eigen::MatrixXd x6 = x4 * x2;
    const Eigen::MatrixXd u_inner = b[13] * x6 + b[11] * x4 + b[9] * x2;
    const Eigen::MatrixXd u =
        x * (x6 * u_inner + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id);
    const Eigen::MatrixXd v_inner = b[12] * x6 + b[10] * x4 + b[8] * x2;
    const Eigen::MatrixXd v = x6 * v_inner + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;

    Eigen::MatrixXd r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < s; ++k) r = r * r;
    return r;
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& a, double t) {
    return nearly_symmetric(a) ? expm_symmetric(a, t) : expm_pade(a, t);
}

Eigen::MatrixXd expm(const MonotoneMatrix& a, double t) {
    return a.is_symmetric() ? expm_symmetric(a.matrix(), t) : expm_pade(a.matrix(), t);
}

double spectral_norm(const Eigen::MatrixXd& m, int iterations, std::uint64_t seed) {
    if (m.size() == 0) return 0.0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(m.cols());
    for (auto& x : v) x = normal(rng);
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXd mv = m * v;
        const Eigen::VectorXd w = m.transpose() * mv;
        const double norm = w.norm();
        estimate = std::max(estimate, mv.norm());
        if (norm == 0.0) break;
        v = w / norm;
    }
    return std::max(estimate, (m * v).norm());
}

double verify_exp_identity(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2) {
    if (a1.rows() != a2.rows() || a1.cols() != a2.cols()) {
        throw ShapeError("exp identity needs matrices of equal size");
    }
    const Eigen::MatrixXd lhs = expm(a1 + a2, 1.0);
    const Eigen::MatrixXd rhs = expm(a1, 1.0) * expm(a2, 1.0);
    return spectral_norm(lhs - rhs);
}

double verify_exp_identity(const CommutingPair& pair) {
    return verify_exp_identity(pair.a1(), pair.a2());
}

// ---------------------------------------------------------------------------

YosidaPair yosida(const Eigen::MatrixXd& a, double lambda) {
    require_square(a, "yosida");
    if (!(lambda > 0.0)) throw InvalidIntervalError("yosida: lambda must be positive");
    const Eigen::Index n = a.rows();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd m = id + lambda * a;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    if (n > 0 && !(lu.rcond() > 1e-14)) {
        throw InvalidOperatorError("I + lambda A is singular; A is not monotone");
    }
    YosidaPair out;
    out.resolvent = lu.solve(id);
    out.approx = (id - out.resolvent) / lambda;
    return out;
}

Eigen::VectorXd yosida_flow(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2,
                            const Eigen::VectorXd& u0, double lambda, double t) {
    const Eigen::MatrixXd sum = yosida(a1, lambda).approx + yosida(a2, lambda).approx;
    return expm(sum, t) * u0;
}

YosidaTable yosida_flow_convergence(const CommutingPair& pair, const Eigen::VectorXd& u0,
                                    std::span<const double> lambdas, double t) {
    if (!(t > 0.0)) throw InvalidIntervalError("yosida flow: t must be positive");
    const Eigen::MatrixXd a1 = pair.a1();
    const Eigen::MatrixXd a2 = pair.a2();
    const double energy = std::sqrt((a1 * u0).squaredNorm() + (a2 * u0).squaredNorm());

    std::vector<Eigen::VectorXd> flows;
    flows.reserve(lambdas.size());
    for (double l : lambdas) flows.push_back(yosida_flow(a1, a2, u0, l, t));

    YosidaTable table;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        for (std::size_t j = 0; j < lambdas.size(); ++j) {
            YosidaRow row;
            row.lambda = lambdas[i];
            row.mu = lambdas[j];
            row.observed = i == j ? 0.0 : (flows[i] - flows[j]).norm();
            row.bound = 2.0 * std::sqrt(2.0 * (row.lambda + row.mu) * t) * energy;
            row.ratio = row.bound > 0.0 ? row.observed / row.bound : 0.0;
            table.max_ratio = std::max(table.max_ratio, row.ratio);
            table.rows.push_back(row);
        }
    }
    return table;
}

Eigen::VectorXd critical_vector(const CommutingPair& pair) {
    const Eigen::VectorXd c = (pair.lambda1 + pair.lambda2).array().pow(-1.5).matrix();
    return (pair.q * c).normalized();
}

RateFit yosida_rate(const CommutingPair& pair, const Eigen::VectorXd& u0,
                    std::span<const double> lambdas, double mu, double t) {
    if (lambdas.size() < 2) throw InvalidIntervalError("rate fit needs at least two lambdas");
    const Eigen::MatrixXd a1 = pair.a1();
    const Eigen::MatrixXd a2 = pair.a2();
    const Eigen::VectorXd reference = yosida_flow(a1, a2, u0, mu, t);

    RateFit fit;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (double l : lambdas) {
        const double d = (yosida_flow(a1, a2, u0, l, t) - reference).norm();
        fit.lambdas.push_back(l);
        fit.distances.push_back(d);
        const double x = std::log(l);
        const double y = std::log(d);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const auto n = static_cast<double>(lambdas.size());
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return fit;
}

Composition compose_piecewise(std::span<const std::pair<Eigen::MatrixXd, double>> segments) {
    if (segments.empty()) throw InvalidIntervalError("composition needs at least one segment");
    const Eigen::Index n = segments.front().first.rows();
    Composition out;
    out.product = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [a, duration] : segments) {
        if (!(duration > 0.0)) throw InvalidIntervalError("segment durations must be positive");
        if (a.rows() != n || a.cols() != n) throw ShapeError("segments differ in size");
        out.product = expm(a, duration) * out.product;
        sum += duration * a;
    }
    out.weighted_sum = expm(sum, 1.0);
    out.difference = spectral_norm(out.product - out.weighted_sum);
    return out;
}

double contraction_ratio(const Eigen::MatrixXd& a, double t, const Eigen::VectorXd& u) {
    const double base = u.norm();
    if (base == 0.0) return 0.0;
    return (expm(a, t) * u).norm() / base;
}

void write_yosida_csv(std::ostream& os, const YosidaTable& table) {
    const auto old_precision = os.precision(17);
    os << "lambda,mu,observed,bound,ratio\n";
    for (const auto& r : table.rows) {
        os << r.lambda << "," << r.mu << "," << r.observed << "," << r.bound << "," << r.ratio
           << "\n";
    }
    os.precision(old_precision);
}

}  // namespace tdbs
