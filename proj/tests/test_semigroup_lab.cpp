#include "tdbs/errors.hpp"
#include "tdbs/semigroup_lab.hpp"

#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

using namespace tdbs;

TEST_SUITE("semigroup_lab") {

TEST_CASE("monotone matrices") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 0.0, 0.0, -0.1;
    CHECK_THROWS_AS(MonotoneMatrix{bad}, InvalidOperatorError);
    const auto s = MonotoneMatrix::random_symmetric(20, 3);
    CHECK(s.is_symmetric());
    CHECK(s.certificate() > 0.0);
    const auto ns = MonotoneMatrix::random_nonsymmetric(20, 3);
    CHECK(!ns.is_symmetric());
    CHECK(ns.certificate() > 0.0);
}

TEST_CASE("matrix exponential") {
    CHECK((expm(Eigen::MatrixXd::Zero(3, 3), 1.0) - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
    Eigen::MatrixXd d = Eigen::Vector2d(1.0, 2.0).asDiagonal();
    Eigen::MatrixXd e = Eigen::Vector2d(std::exp(-1.0), std::exp(-2.0)).asDiagonal();
    CHECK((expm_symmetric(d, 1.0) - e).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((expm_pade(d, 1.0) - e).cwiseAbs().maxCoeff() <= 1e-15);

    // Nilpotent part: e^{-tN} = I - tN.
    Eigen::MatrixXd n(2, 2);
    n << 0.0, 3.0, 0.0, 0.0;
    Eigen::MatrixXd expected(2, 2);
    expected << 1.0, -6.0, 0.0, 1.0;
    CHECK((expm_pade(n, 2.0) - expected).cwiseAbs().maxCoeff() <= 1e-14);

    const auto a = MonotoneMatrix::random_nonsymmetric(15, 9);
    const Eigen::MatrixXd half = expm(a, 0.35);
    CHECK((half * half - expm(a, 0.7)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(spectral_norm(expm(a, 0.7)) <= 1.0 + 1e-12);
}

TEST_CASE("exponential identity") {
    Eigen::MatrixXd d = Eigen::Vector2d(1.0, 2.0).asDiagonal();
    CHECK(verify_exp_identity(d, d) <= 1e-13);
    CHECK(verify_exp_identity(CommutingPair::random(50, 11)) <= 1e-10);
    Eigen::MatrixXd a1(2, 2), a2(2, 2);
    a1 << 1.0, 0.0, 0.0, 0.0;
    a2 << 0.5, 0.5, 0.5, 0.5;
    CHECK(verify_exp_identity(a1, a2) > 1e-3);
}

TEST_CASE("yosida approximation") {
    const auto y = yosida(Eigen::MatrixXd::Constant(1, 1, 2.0), 0.5);
    CHECK(y.approx(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(y.resolvent(0, 0) == doctest::Approx(0.5).epsilon(1e-15));

    const Eigen::Vector3d diag(0.1, 3.0, 70.0);
    const auto yd = yosida(diag.asDiagonal(), 0.2);
    for (int i = 0; i < 3; ++i) {
        CHECK(yd.approx(i, i) == doctest::Approx(diag(i) / (1.0 + 0.2 * diag(i))).epsilon(1e-14));
    }

    const auto a = MonotoneMatrix::random_nonsymmetric(30, 4);
    for (double lambda : {1e-1, 1e-2, 1e-3}) {
        const auto p = yosida(a.matrix(), lambda);
        CHECK(spectral_norm(p.resolvent) <= 1.0 + 1e-12);
        const Eigen::VectorXd v = Eigen::VectorXd::Random(30);
        CHECK((p.approx * v).norm() <= (a.matrix() * v).norm() * (1.0 + 1e-12));
    }
}

TEST_CASE("flow convergence bound") {
    const auto pair = CommutingPair::random(50, 5);
    const Eigen::VectorXd u0 = Eigen::VectorXd::Random(50).normalized();
    const std::vector<double> same{1e-2, 1e-2};
    const auto zero = yosida_flow_convergence(pair, u0, same, 1.0);
    for (const auto& r : zero.rows) CHECK(r.ratio == 0.0);
    const std::vector<double> lambdas{1e-1, 1e-2, 1e-3};
    const auto table = yosida_flow_convergence(pair, u0, lambdas, 1.0);
    CHECK(table.rows.size() == 9);
    CHECK(table.max_ratio <= 1.0);
}

TEST_CASE("square-root rate for the critical initial vector") {
    const auto pair = CommutingPair::random(50, 1);
    const std::vector<double> lambdas{1.0, 1e-1, 1e-2};
    const auto fit = yosida_rate(pair, critical_vector(pair), lambdas, 1e-6, 1e-3);
    CHECK(std::abs(fit.slope - 0.5) <= 0.15);
    CHECK(critical_vector(pair).norm() == doctest::Approx(1.0));
}

TEST_CASE("piecewise composition") {
    Eigen::MatrixXd d = Eigen::Vector2d(1.0, 2.0).asDiagonal();
    const std::vector<std::pair<Eigen::MatrixXd, double>> one{{d, 0.3}};
    const auto c1 = compose_piecewise(one);
    CHECK((c1.product - expm(d, 0.3)).norm() <= 1e-15);
    CHECK(c1.difference <= 1e-15);

    const auto a = MonotoneMatrix::random_nonsymmetric(8, 2).matrix();
    const std::vector<std::pair<Eigen::MatrixXd, double>> same{{a, 0.2}, {a, 0.5}};
    const auto c2 = compose_piecewise(same);
    CHECK((c2.product - expm(a, 0.7)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(c2.difference <= 1e-12);

    const auto family = commuting_family(50, 5, 8);
    std::vector<std::pair<Eigen::MatrixXd, double>> segs;
    for (std::size_t k = 0; k < family.size(); ++k) segs.emplace_back(family[k], 0.1 * (k + 1));
    CHECK(compose_piecewise(segs).difference <= 1e-10);
}

TEST_CASE("contraction of the semigroup") {
    const auto a = MonotoneMatrix::random_nonsymmetric(25, 6);
    for (double t : {0.01, 0.1, 1.0}) {
        CHECK(contraction_ratio(a.matrix(), t, Eigen::VectorXd::Random(25)) <= 1.0 + 1e-12);
    }
}

}  // TEST_SUITE
