#include "tdbs/discrete_operator.hpp"

#include "tdbs/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace tdbs {

namespace {

Eigen::VectorXd random_unit(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v.normalized();
}

}  // namespace

DiscreteOperator assemble(const OperatorCoefficients& coeffs, std::shared_ptr<const Grid> grid) {
    if (!grid) throw ShapeError("assemble needs a grid");
    const std::size_t n = grid->dimension();
    if (coeffs.dimension() != n || static_cast<std::size_t>(coeffs.a.rows()) != n ||
        static_cast<std::size_t>(coeffs.a.cols()) != n) {
        throw ShapeError("operator coefficients do not match the grid dimension");
    }

    const auto rows = static_cast<Eigen::Index>(grid->interior_count());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(rows) * (1 + 2 * n + 2 * n * (n - 1)));

    for (std::size_t row = 0; row < grid->interior_count(); ++row) {
        const std::size_t flat = grid->interior_nodes()[row];
        const auto r = static_cast<Eigen::Index>(row);
        double diag = coeffs.q;

        auto add = [&](std::ptrdiff_t offset, double value) {
            const auto idx = grid->interior_index(static_cast<std::size_t>(
                static_cast<std::ptrdiff_t>(flat) + offset));
            if (idx >= 0) triplets.emplace_back(r, static_cast<Eigen::Index>(idx), value);
        };

        for (std::size_t i = 0; i < n; ++i) {
            const double h = grid->spacing(i);
            const auto si = static_cast<std::ptrdiff_t>(grid->stride(i));
            const double aii = coeffs.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
            const double bi = coeffs.b(static_cast<Eigen::Index>(i));
            diag += 2.0 * aii / (h * h);
            add(+si, -aii / (h * h) + bi / (2.0 * h));
            add(-si, -aii / (h * h) - bi / (2.0 * h));
            for (std::size_t j = i + 1; j < n; ++j) {
                const double aij =
                    coeffs.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (aij == 0.0) continue;
                const auto sj = static_cast<std::ptrdiff_t>(grid->stride(j));
                const double c = -aij / (2.0 * h * grid->spacing(j));
                add(+si + sj, c);
                add(-si - sj, c);
                add(+si - sj, -c);
                add(-si + sj, -c);
            }
        }
        triplets.emplace_back(r, r, diag);
    }

    SparseMatrix m(rows, rows);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return DiscreteOperator(std::move(grid), std::move(m), coeffs);
}

Eigen::VectorXd apply(const DiscreteOperator& op, const Eigen::VectorXd& u) {
    if (u.size() != op.size()) throw ShapeError("apply: vector length does not match operator");
    return op.matrix() * u;
}

double commutator_norm(const DiscreteOperator& op1, const DiscreteOperator& op2, int iterations,
                       std::uint64_t seed) {
    if (op1.size() != op2.size() || op1.grid().size() != op2.grid().size()) {
        throw ShapeError("commutator needs operators on the same grid");
    }
    const SparseMatrix& a = op1.matrix();
    const SparseMatrix& b = op2.matrix();
    auto c = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return a * (b * v) - b * (a * v); };
    auto ct = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return b.transpose() * (a.transpose() * v) - a.transpose() * (b.transpose() * v);
    };
    Eigen::VectorXd v = random_unit(a.rows(), seed);
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Eigen::VectorXd w = ct(c(v));
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        estimate = std::sqrt(v.dot(w));
        v = w / norm;
    }
    return std::max(estimate, c(v).norm());
}

double monotonicity_shift(const DiscreteOperator& op) {
    const SparseMatrix sym = 0.5 * (SparseMatrix(op.matrix().transpose()) + op.matrix());
    double lowest = 0.0;
    if (sym.rows() <= 1500) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(sym),
                                                           Eigen::EigenvaluesOnly);
        lowest = eig.eigenvalues().minCoeff();
    } else {
        // Gershgorin bound g >= lambda_max, then power iteration on g I - S.
        double g = 0.0;
        for (Eigen::Index k = 0; k < sym.outerSize(); ++k) {
            double row = 0.0;
            double diag = 0.0;
            for (SparseMatrix::InnerIterator it(sym, k); it; ++it) {
                if (it.col() == k) {
                    diag = it.value();
                } else {
                    row += std::abs(it.value());
                }
            }
            g = std::max(g, diag + row);
        }
        Eigen::VectorXd v = random_unit(sym.rows(), 0x5eed);
        double top = 0.0;
        for (int it = 0; it < 500; ++it) {
            Eigen::VectorXd w = g * v - sym * v;
            top = v.dot(w);
            v = w.normalized();
        }
        lowest = g - top;
    }
    return std::max(0.0, -lowest);
}

void write_operator_csv(std::ostream& os, const DiscreteOperator& op) {
    const auto old_precision = os.precision(17);
    os << "row,col,value\n";
    const SparseMatrix& m = op.matrix();
    for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
            os << it.row() << "," << it.col() << "," << it.value() << "\n";
        }
    }
    os.precision(old_precision);
}

}  // namespace tdbs
