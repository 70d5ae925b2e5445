#include "tdbs/discrete_operator.hpp"
#include "tdbs/domain_grid.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <memory>

using namespace tdbs;

namespace {

std::shared_ptr<const Grid> box(std::size_t n1, std::size_t n2 = 0) {
    if (n2 == 0) {
        const std::array<std::size_t, 1> n{n1};
        return std::make_shared<const Grid>(build_grid(DomainSpec{{50.0}, {200.0}, std::nullopt}, n));
    }
    const std::array<std::size_t, 2> n{n1, n2};
    return std::make_shared<const Grid>(
        build_grid(DomainSpec{{50.0, 60.0}, {200.0, 220.0}, std::nullopt}, n));
}

OperatorCoefficients coeffs1(double a, double b, double q) {
    OperatorCoefficients c;
    c.a = Eigen::MatrixXd::Constant(1, 1, a);
    c.b = Eigen::VectorXd::Constant(1, b);
    c.q = q;
    return c;
}

// Interior values of f, evaluated at the log coordinates.
template <class F>
Eigen::VectorXd sample(const Grid& g, F f) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(g.interior_count()));
    for (std::size_t k = 0; k < g.interior_count(); ++k) {
        u(static_cast<Eigen::Index>(k)) = f(g.point(g.interior_nodes()[k]));
    }
    return u;
}

bool away_from_faces(const Grid& g, std::size_t flat) {
    const auto mi = g.multi_index(flat);
    for (std::size_t i = 0; i < g.dimension(); ++i) {
        if (mi[i] < 2 || mi[i] + 2 >= g.nodes(i)) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("discrete_operator") {

TEST_CASE("zero maps to zero") {
    const auto g = box(21);
    const auto op = assemble(coeffs1(0.02, 0.01, 0.03), g);
    CHECK(apply(op, Eigen::VectorXd::Zero(op.size())).norm() == 0.0);
}

TEST_CASE("stencil is exact on quadratics away from the faces") {
    const auto g = box(17, 13);
    OperatorCoefficients c;
    c.a.resize(2, 2);
    c.a << 0.03, 0.011, 0.011, 0.05;
    c.b = Eigen::Vector2d(0.0, 0.0);
    c.q = 0.0;
    const auto op = assemble(c, g);
    const Eigen::VectorXd u = sample(*g, [](const std::vector<double>& x) { return x[0] * x[1]; });
    const Eigen::VectorXd au = apply(op, u);
    int checked = 0;
    for (std::size_t k = 0; k < g->interior_count(); ++k) {
        if (!away_from_faces(*g, g->interior_nodes()[k])) continue;
        CHECK(au(static_cast<Eigen::Index>(k)) == doctest::Approx(-2.0 * 0.011).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked > 50);

    c.b = Eigen::Vector2d(0.2, -0.3);
    c.q = 0.07;
    const auto full = assemble(c, g);
    const Eigen::VectorXd v =
        sample(*g, [](const std::vector<double>& x) { return x[0] * x[0] - 3.0 * x[1] * x[1] + x[0]; });
    const Eigen::VectorXd av = apply(full, v);
    for (std::size_t k = 0; k < g->interior_count(); ++k) {
        if (!away_from_faces(*g, g->interior_nodes()[k])) continue;
        const auto x = g->point(g->interior_nodes()[k]);
        const double expected = -(0.03 * 2.0 + 0.05 * -6.0) + 0.2 * (2.0 * x[0] + 1.0) +
                                -0.3 * (-6.0 * x[1]) + 0.07 * v(static_cast<Eigen::Index>(k));
        CHECK(av(static_cast<Eigen::Index>(k)) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("commutators") {
    const auto g = box(41);
    const auto a = assemble(coeffs1(0.02, 0.01, 0.03), g);
    SUBCASE("scalar multiple") {
        const auto b = assemble(coeffs1(0.04, 0.02, 0.06), g);
        CHECK(commutator_norm(a, b) <= 1e-12);
    }
    SUBCASE("pure diffusion, different scale") {
        const auto p = assemble(coeffs1(0.02, 0.0, 0.0), g);
        const auto r = assemble(coeffs1(0.045, 0.0, 0.0), g);
        CHECK(commutator_norm(p, r) <= 1e-12);
    }
    SUBCASE("different drift to diffusion ratio: boundary supported") {
        const auto b = assemble(coeffs1(0.045, -0.02, 0.03), g);
        CHECK(commutator_norm(a, b) > 1e-6);
        const Eigen::MatrixXd ma(a.matrix());
        const Eigen::MatrixXd mb(b.matrix());
        const Eigen::MatrixXd comm = ma * mb - mb * ma;
        const Eigen::Index n = comm.rows();
        const double scale = comm.cwiseAbs().maxCoeff();
        CHECK(scale > 0.0);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                const bool near_edge = (i < 1 || i >= n - 1) && (j < 1 || j >= n - 1);
                if (!near_edge) CHECK(std::abs(comm(i, j)) <= 1e-12 * scale);
            }
        }
    }
}

TEST_CASE("symmetric part of the discrete operator is monotone") {
    const auto g = box(25, 21);
    OperatorCoefficients c;
    c.a.resize(2, 2);
    c.a << 0.02, 0.006, 0.006, 0.045;
    c.b = Eigen::Vector2d(0.01, -0.02);
    c.q = 0.03;
    const auto op = assemble(c, g);
    CHECK(monotonicity_shift(op) == 0.0);
    const Eigen::MatrixXd m(op.matrix());
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() >= 0.03 - 1e-12);
}

}  // TEST_SUITE
