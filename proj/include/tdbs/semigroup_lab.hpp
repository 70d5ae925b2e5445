#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace tdbs {

/// Dense square matrix whose symmetric part is positive semidefinite.
class MonotoneMatrix {
public:
    /// Throws InvalidOperatorError when <Av, v> < 0 for some v (up to a
    /// relative tolerance of 1e-12).
    explicit MonotoneMatrix(Eigen::MatrixXd a);

    const Eigen::MatrixXd& matrix() const noexcept { return a_; }
    Eigen::Index size() const noexcept { return a_.rows(); }
    /// Smallest eigenvalue of (A + A^T) / 2.
    double certificate() const noexcept { return certificate_; }
    bool is_symmetric() const noexcept { return symmetric_; }

    /// Q diag(lambda) Q^T with Q random orthogonal and lambda log-uniform in [lo, hi].
    static MonotoneMatrix random_symmetric(std::size_t k, std::uint64_t seed, double lo = 1e-2,
                                           double hi = 1e2);
    /// Symmetric PSD part plus a random skew part.
    static MonotoneMatrix random_nonsymmetric(std::size_t k, std::uint64_t seed);

private:
    Eigen::MatrixXd a_;
    double certificate_ = 0.0;
    bool symmetric_ = false;
};

/// Random orthogonal matrix (QR of a Gaussian matrix with sign fix).
Eigen::MatrixXd random_orthogonal(std::size_t k, std::uint64_t seed);

/// A_i = Q diag(lambda_i) Q^T with one shared orthogonal basis.
struct CommutingPair {
    Eigen::MatrixXd q;
    Eigen::VectorXd lambda1;
    Eigen::VectorXd lambda2;

    Eigen::MatrixXd a1() const;
    Eigen::MatrixXd a2() const;
    /// Spectral norm of A1 A2 - A2 A1.
    double commutator() const;

    static CommutingPair random(std::size_t k, std::uint64_t seed, double lo = 1e-2,
                                double hi = 1e2);
};

/// `count` matrices sharing one random eigenbasis (log-uniform spectra).
std::vector<Eigen::MatrixXd> commuting_family(std::size_t k, std::size_t count,
                                              std::uint64_t seed, double lo = 1e-2,
                                              double hi = 1e2);

/// e^{-tA} through the eigendecomposition of a symmetric A.
Eigen::MatrixXd expm_symmetric(const Eigen::MatrixXd& a, double t);
/// e^{-tA} by scaling and squaring with the degree-13 Pade approximant.
Eigen::MatrixXd expm_pade(const Eigen::MatrixXd& a, double t);
/// Eigen route for symmetric input, Pade route otherwise.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a, double t);
Eigen::MatrixXd expm(const MonotoneMatrix& a, double t);

/// Power-iteration estimate of the largest singular value.
double spectral_norm(const Eigen::MatrixXd& m, int iterations = 100, std::uint64_t seed = 0x5eed);

/// |e^{-A1-A2} - e^{-A1} e^{-A2}| in the spectral norm.
double verify_exp_identity(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2);
double verify_exp_identity(const CommutingPair& pair);

struct YosidaPair {
    Eigen::MatrixXd resolvent;  ///< J = (I + lambda A)^{-1}
    Eigen::MatrixXd approx;     ///< A_lambda = (I - J) / lambda
};

/// Throws InvalidOperatorError when I + lambda A is singular.
YosidaPair yosida(const Eigen::MatrixXd& a, double lambda);

struct YosidaRow {
    double lambda = 0.0;
    double mu = 0.0;
    double observed = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
};

struct YosidaTable {
    std::vector<YosidaRow> rows;
    double max_ratio = 0.0;
};

/// u_lambda(t) = e^{-t(A1_lambda + A2_lambda)} u0.
Eigen::VectorXd yosida_flow(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2,
                            const Eigen::VectorXd& u0, double lambda, double t);

/// Compares |u_lambda(t) - u_mu(t)| with 2 sqrt(2 (lambda + mu) t) (|A1 u0|^2 + |A2 u0|^2)^{1/2}
/// for every ordered pair (lambda, mu), the diagonal included.
YosidaTable yosida_flow_convergence(const CommutingPair& pair, const Eigen::VectorXd& u0,
                                    std::span<const double> lambdas, double t);

/// Unit vector Q c with c_k proportional to (lambda1_k + lambda2_k)^{-3/2}: in
/// D(A1 + A2) but with spectral density ~ a^{-4}, the borderline regularity
/// at which the sqrt(lambda) rate is attained.
Eigen::VectorXd critical_vector(const CommutingPair& pair);

struct RateFit {
    std::vector<double> lambdas;
    std::vector<double> distances;
    double slope = 0.0;
};

/// Least-squares log-log slope of |u_lambda(t) - u_mu(t)| against lambda.
RateFit yosida_rate(const CommutingPair& pair, const Eigen::VectorXd& u0,
                    std::span<const double> lambdas, double mu, double t);

struct Composition {
    Eigen::MatrixXd product;       ///< e^{-d_N A_N} ... e^{-d_1 A_1}
    Eigen::MatrixXd weighted_sum;  ///< e^{-sum d_i A_i}
    double difference = 0.0;       ///< spectral norm of the gap
};

Composition compose_piecewise(std::span<const std::pair<Eigen::MatrixXd, double>> segments);

/// |e^{-tA} u| / |u|.
double contraction_ratio(const Eigen::MatrixXd& a, double t, const Eigen::VectorXd& u);

void write_yosida_csv(std::ostream& os, const YosidaTable& table);

}  // namespace tdbs
