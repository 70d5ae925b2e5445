#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace tdbs {

enum class Profile { constant, linear };

/// One piece of a schedule. Constant pieces carry v_end == v_start.
struct Segment {
    double t_start = 0.0;
    double t_end = 0.0;
    Profile profile = Profile::constant;
    double v_start = 0.0;
    double v_end = 0.0;

    double value_at(double t) const noexcept;
    bool is_constant() const noexcept {
        return profile == Profile::constant || v_start == v_end;
    }
};

/// Piecewise constant / piecewise linear function of market time (years).
///
/// Pieces are contiguous. Evaluation at an interior breakpoint is
/// right-continuous; left_limit() gives the value approached from below.
class CoefficientSchedule {
public:
    CoefficientSchedule() = default;
    explicit CoefficientSchedule(std::vector<Segment> segments);

    static CoefficientSchedule constant(double value, double t0, double t1);
    static CoefficientSchedule linear(double v0, double v1, double t0, double t1);
    /// breaks = {t0, t1, ..., tk}, values.size() == breaks.size() - 1
    static CoefficientSchedule piecewise_constant(std::span<const double> breaks,
                                                  std::span<const double> values);

    double operator()(double t) const;
    double left_limit(double t) const;

    double start() const noexcept { return segments_.front().t_start; }
    double end() const noexcept { return segments_.back().t_end; }
    std::span<const Segment> segments() const noexcept { return segments_; }
    std::vector<double> breakpoints() const;  // interior only

    /// s -> start + end - s
    CoefficientSchedule reversed() const;
    CoefficientSchedule shifted(double offset) const;
    CoefficientSchedule restricted(double t0, double t1) const;

    /// Segment index used by right-continuous evaluation at t.
    std::size_t segment_index(double t) const;
    /// Segment index for the left limit at t.
    std::size_t segment_index_left(double t) const;

private:
    std::vector<Segment> segments_;
};

double eval_schedule(const CoefficientSchedule& schedule, double t);

/// Exact integral over [t0, t1] of the pointwise product of up to three
/// schedules (each piece is at most linear, so the integrand is at most cubic).
double integrate_product(std::span<const CoefficientSchedule* const> factors, double t0,
                         double t1);

/// Time average of a product of schedules. An integrand that is constant over
/// the window averages to exactly that constant.
double average_product(std::span<const CoefficientSchedule* const> factors, double t0,
                       double t1);

double average_scalar(const CoefficientSchedule& schedule, double t0, double t1);
double average_vol(const CoefficientSchedule& sigma, double t0, double t1);
double average_correlation(const CoefficientSchedule& sigma_i, const CoefficientSchedule& sigma_j,
                           const CoefficientSchedule& rho_ij, double t0, double t1);

/// Constant-in-space coefficients of the log-space operator
///   A u = -sum_ij a_ij d_i d_j u + sum_i b_i d_i u + q u.
struct OperatorCoefficients {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    double q = 0.0;

    std::size_t dimension() const noexcept { return static_cast<std::size_t>(b.size()); }
    bool operator==(const OperatorCoefficients& other) const {
        return q == other.q && a == other.a && b == other.b;
    }
};

/// Builds (a, b, q) from market-level constants: a = rho sigma sigma / 2,
/// b = sigma^2 / 2 - (r - m), q = r + d.
OperatorCoefficients market_to_operator(double r, double m, double d,
                                        const Eigen::VectorXd& sigma,
                                        const Eigen::MatrixXd& rho);

class MarketModel {
public:
    /// rho is row-major n x n; it may be empty when there is a single asset.
    MarketModel(CoefficientSchedule r, CoefficientSchedule m, CoefficientSchedule d,
                std::vector<CoefficientSchedule> sigma, std::vector<CoefficientSchedule> rho = {},
                std::size_t ellipticity_samples = 64);

    std::size_t dimension() const noexcept { return sigma_.size(); }
    const CoefficientSchedule& r() const noexcept { return r_; }
    const CoefficientSchedule& m() const noexcept { return m_; }
    const CoefficientSchedule& d() const noexcept { return d_; }
    const CoefficientSchedule& sigma(std::size_t i) const { return sigma_.at(i); }
    const CoefficientSchedule& rho(std::size_t i, std::size_t j) const {
        return rho_.at(i * dimension() + j);
    }
    std::span<const CoefficientSchedule> sigmas() const noexcept { return sigma_; }
    std::span<const CoefficientSchedule> rhos() const noexcept { return rho_; }

    double start() const noexcept { return r_.start(); }
    double end() const noexcept { return r_.end(); }
    /// Interior breakpoints of every schedule, sorted and deduplicated.
    std::vector<double> breakpoints() const;
    double ellipticity_constant() const noexcept { return ellipticity_; }

    MarketModel reversed() const;
    MarketModel shifted(double offset) const;
    MarketModel restricted(double t0, double t1) const;

    /// Covariance rate matrix rho_ij sigma_i sigma_j at market time t.
    Eigen::MatrixXd covariance_rate(double t, bool left_limit = false) const;

private:
    CoefficientSchedule r_, m_, d_;
    std::vector<CoefficientSchedule> sigma_;
    std::vector<CoefficientSchedule> rho_;
    std::size_t samples_;
    double ellipticity_ = 0.0;
};

/// Row-major correlation schedules from a constant correlation matrix.
std::vector<CoefficientSchedule> constant_correlation(const Eigen::MatrixXd& corr, double t0,
                                                      double t1);

struct AveragedCoefficients {
    double r_bar = 0.0;
    double m_bar = 0.0;
    double d_bar = 0.0;
    Eigen::VectorXd sigma_bar;
    Eigen::MatrixXd rho_bar;
    Eigen::MatrixXd a_bar;
    Eigen::VectorXd b_bar;
    double q_bar = 0.0;

    OperatorCoefficients operator_coefficients() const { return {a_bar, b_bar, q_bar}; }
};

/// Averages of the market coefficients and of the log-space operator
/// coefficients over the market-time window [t0, t1].
AveragedCoefficients averaged_operator_coeffs(const MarketModel& model, double t0, double t1);

/// Instantaneous operator coefficients at market time t.
OperatorCoefficients operator_coefficients_at(const MarketModel& model, double t,
                                              bool left_limit = false);

/// Coefficients at market time t using, for every schedule, the segment that
/// contains `hint` (a point strictly inside the step being integrated).
OperatorCoefficients operator_coefficients_in_piece(const MarketModel& model, double t,
                                                    double hint);

/// Minimum over sampled times of the smallest eigenvalue of rho_ij sigma_i sigma_j.
/// Throws EllipticityError if it is not bounded away from zero.
double check_uniform_ellipticity(const MarketModel& model, double t0, double t1,
                                 std::size_t samples = 64);

}  // namespace tdbs
