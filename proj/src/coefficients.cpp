#include "tdbs/coefficients.hpp"

#include "tdbs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace tdbs {

namespace {

constexpr double kTimeTol = 1e-12;

std::string fmt_time(double t) {
    std::ostringstream os;
    os.precision(17);
    os << t;
    return os.str();
}

void require_window(const CoefficientSchedule& s, double t0, double t1) {
    if (!(t1 > t0)) {
        throw InvalidIntervalError("averaging window [" + fmt_time(t0) + ", " + fmt_time(t1) +
                                   "] is empty");
    }
    if (t0 < s.start() - kTimeTol || t1 > s.end() + kTimeTol) {
        throw OutOfRangeError("averaging window [" + fmt_time(t0) + ", " + fmt_time(t1) +
                              "] leaves schedule span [" + fmt_time(s.start()) + ", " +
                              fmt_time(s.end()) + "]");
    }
}

/// Sorted cut points of [t0, t1] at every breakpoint of the given schedules.
std::vector<double> merged_cuts(std::span<const CoefficientSchedule* const> schedules, double t0,
                                double t1) {
    std::vector<double> cuts{t0, t1};
    for (const auto* s : schedules) {
        for (double b : s->breakpoints()) {
            if (b > t0 + kTimeTol && b < t1 - kTimeTol) cuts.push_back(b);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> out;
    for (double c : cuts) {
        if (out.empty() || c - out.back() > kTimeTol) out.push_back(c);
    }
    out.back() = t1;
    return out;
}

double min_on_window(const CoefficientSchedule& s, double t0, double t1) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& seg : s.segments()) {
        const double a = std::max(seg.t_start, t0);
        const double b = std::min(seg.t_end, t1);
        if (b < a) continue;
        lo = std::min({lo, seg.value_at(a), seg.value_at(b)});
    }
    return lo;
}

// sigma >= 0 on the window and not identically zero on any piece of it; a
// linear piece may touch zero at an end point.
bool positive_almost_everywhere(const CoefficientSchedule& s, double t0, double t1) {
    for (const auto& seg : s.segments()) {
        const double a = std::max(seg.t_start, t0);
        const double b = std::min(seg.t_end, t1);
        if (!(b > a)) continue;
        const double va = seg.value_at(a);
        const double vb = seg.value_at(b);
        if (!(std::min(va, vb) >= 0.0) || !(std::max(va, vb) > 0.0)) return false;
    }
    return true;
}

}  // namespace

double Segment::value_at(double t) const noexcept {
    if (profile == Profile::constant) return v_start;
    const double w = (t - t_start) / (t_end - t_start);
    return v_start + w * (v_end - v_start);
}

CoefficientSchedule::CoefficientSchedule(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
    if (segments_.empty()) throw InvalidScheduleError("schedule has no segments");
    for (std::size_t k = 0; k < segments_.size(); ++k) {
        auto& seg = segments_[k];
        if (!std::isfinite(seg.t_start) || !std::isfinite(seg.t_end) ||
            !std::isfinite(seg.v_start) || !std::isfinite(seg.v_end)) {
            throw InvalidScheduleError("schedule segment " + std::to_string(k) +
                                       " has non-finite entries");
        }
        if (!(seg.t_end > seg.t_start)) {
            throw InvalidScheduleError("schedule segment " + std::to_string(k) +
                                       " has t_end <= t_start");
        }
        if (seg.profile == Profile::constant) seg.v_end = seg.v_start;
        if (k > 0) {
            const double gap = seg.t_start - segments_[k - 1].t_end;
            if (std::abs(gap) > kTimeTol) {
                throw InvalidScheduleError("schedule segments " + std::to_string(k - 1) + " and " +
                                           std::to_string(k) + " are not contiguous");
            }
            seg.t_start = segments_[k - 1].t_end;
        }
    }
}

CoefficientSchedule CoefficientSchedule::constant(double value, double t0, double t1) {
    return CoefficientSchedule({Segment{t0, t1, Profile::constant, value, value}});
}

CoefficientSchedule CoefficientSchedule::linear(double v0, double v1, double t0, double t1) {
    return CoefficientSchedule({Segment{t0, t1, Profile::linear, v0, v1}});
}

CoefficientSchedule CoefficientSchedule::piecewise_constant(std::span<const double> breaks,
                                                            std::span<const double> values) {
    if (breaks.size() != values.size() + 1) {
        throw InvalidScheduleError("piecewise_constant needs one more break than values");
    }
    std::vector<Segment> segs;
    for (std::size_t k = 0; k < values.size(); ++k) {
        segs.push_back({breaks[k], breaks[k + 1], Profile::constant, values[k], values[k]});
    }
    return CoefficientSchedule(std::move(segs));
}

std::size_t CoefficientSchedule::segment_index(double t) const {
    if (t < start() - kTimeTol || t > end() + kTimeTol) {
        throw OutOfRangeError("time " + fmt_time(t) + " outside schedule span [" +
                              fmt_time(start()) + ", " + fmt_time(end()) + "]");
    }
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double v, const Segment& s) { return v < s.t_start; });
    if (it == segments_.begin()) return 0;
    return static_cast<std::size_t>(std::distance(segments_.begin(), it) - 1);
}

std::size_t CoefficientSchedule::segment_index_left(double t) const {
    if (t < start() - kTimeTol || t > end() + kTimeTol) {
        throw OutOfRangeError("time " + fmt_time(t) + " outside schedule span [" +
                              fmt_time(start()) + ", " + fmt_time(end()) + "]");
    }
    auto it = std::lower_bound(segments_.begin(), segments_.end(), t,
                               [](const Segment& s, double v) { return s.t_end < v; });
    if (it == segments_.end()) return segments_.size() - 1;
    return static_cast<std::size_t>(std::distance(segments_.begin(), it));
}

double CoefficientSchedule::operator()(double t) const {
    return segments_[segment_index(t)].value_at(t);
}

double CoefficientSchedule::left_limit(double t) const {
    return segments_[segment_index_left(t)].value_at(t);
}

std::vector<double> CoefficientSchedule::breakpoints() const {
    std::vector<double> out;
    for (std::size_t k = 1; k < segments_.size(); ++k) out.push_back(segments_[k].t_start);
    return out;
}

CoefficientSchedule CoefficientSchedule::reversed() const {
    const double s = start() + end();
    std::vector<Segment> segs;
    for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) {
        segs.push_back({s - it->t_end, s - it->t_start, it->profile, it->v_end, it->v_start});
    }
    segs.front().t_start = start();
    segs.back().t_end = end();
    return CoefficientSchedule(std::move(segs));
}

CoefficientSchedule CoefficientSchedule::shifted(double offset) const {
    std::vector<Segment> segs(segments_.begin(), segments_.end());
    for (auto& seg : segs) {
        seg.t_start += offset;
        seg.t_end += offset;
    }
    return CoefficientSchedule(std::move(segs));
}

CoefficientSchedule CoefficientSchedule::restricted(double t0, double t1) const {
    if (!(t1 > t0)) throw InvalidIntervalError("restriction window is empty");
    if (t0 < start() - kTimeTol || t1 > end() + kTimeTol) {
        throw OutOfRangeError("restriction window [" + fmt_time(t0) + ", " + fmt_time(t1) +
                              "] leaves schedule span");
    }
    std::vector<Segment> segs;
    for (const auto& seg : segments_) {
        const double a = std::max(seg.t_start, t0);
        const double b = std::min(seg.t_end, t1);
        if (b - a <= kTimeTol) continue;
        segs.push_back({a, b, seg.profile, seg.value_at(a), seg.value_at(b)});
    }
    segs.front().t_start = t0;
    segs.back().t_end = t1;
    return CoefficientSchedule(std::move(segs));
}

double eval_schedule(const CoefficientSchedule& schedule, double t) { return schedule(t); }

double integrate_product(std::span<const CoefficientSchedule* const> factors, double t0,
                         double t1) {
    if (factors.empty() || factors.size() > 3) {
        throw InvalidScheduleError("integrate_product supports one to three factors");
    }
    for (const auto* f : factors) require_window(*f, t0, t1);

    // Two-point Gauss-Legendre is exact for the (at most cubic) integrand.
    const double g = 1.0 / std::sqrt(3.0);
    const auto cuts = merged_cuts(factors, t0, t1);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k];
        const double b = cuts[k + 1];
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        bool all_constant = true;
        double prod_c = 1.0;
        double prod_l = 1.0;
        double prod_r = 1.0;
        for (const auto* f : factors) {
            const Segment& seg = f->segments()[f->segment_index(mid)];
            all_constant = all_constant && seg.is_constant();
            prod_c *= seg.v_start;
            prod_l *= seg.value_at(mid - half * g);
            prod_r *= seg.value_at(mid + half * g);
        }
        total += all_constant ? prod_c * (b - a) : half * (prod_l + prod_r);
    }
    return total;
}

double average_product(std::span<const CoefficientSchedule* const> factors, double t0,
                       double t1) {
    if (factors.empty() || factors.size() > 3) {
        throw InvalidScheduleError("average_product supports one to three factors");
    }
    for (const auto* f : factors) require_window(*f, t0, t1);

    const auto cuts = merged_cuts(factors, t0, t1);
    bool constant = true;
    double value = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size() && constant; ++k) {
        const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
        double prod = 1.0;
        for (const auto* f : factors) {
            const Segment& seg = f->segments()[f->segment_index(mid)];
            if (!seg.is_constant()) {
                constant = false;
                break;
            }
            prod *= seg.v_start;
        }
        if (!constant) break;
        if (k == 0) {
            value = prod;
        } else if (prod != value) {
            constant = false;
        }
    }
    if (constant) return value;
    return integrate_product(factors, t0, t1) / (t1 - t0);
}

double average_scalar(const CoefficientSchedule& schedule, double t0, double t1) {
    const CoefficientSchedule* f[] = {&schedule};
    return average_product(f, t0, t1);
}

double average_vol(const CoefficientSchedule& sigma, double t0, double t1) {
    require_window(sigma, t0, t1);
    if (!positive_almost_everywhere(sigma, t0, t1)) {
        throw InvalidScheduleError("volatility schedule is not positive on [" +
                                   fmt_time(t0) + ", " + fmt_time(t1) + "]");
    }
    const CoefficientSchedule* f[] = {&sigma, &sigma};
    return std::sqrt(average_product(f, t0, t1));
}

double average_correlation(const CoefficientSchedule& sigma_i, const CoefficientSchedule& sigma_j,
                           const CoefficientSchedule& rho_ij, double t0, double t1) {
    const double si = average_vol(sigma_i, t0, t1);
    const double sj = average_vol(sigma_j, t0, t1);
    if (!(si * sj > 0.0)) throw DegenerateVolatilityError("averaged volatility product is zero");
    const CoefficientSchedule* f[] = {&rho_ij, &sigma_i, &sigma_j};
    const double value = average_product(f, t0, t1) / (si * sj);
    return std::clamp(value, -1.0, 1.0);
}

OperatorCoefficients market_to_operator(double r, double m, double d,
                                        const Eigen::VectorXd& sigma,
                                        const Eigen::MatrixXd& rho) {
    const auto n = sigma.size();
    if (rho.rows() != n || rho.cols() != n) throw ShapeError("correlation matrix shape mismatch");
    OperatorCoefficients c;
    c.a.resize(n, n);
    c.b.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) c.a(i, j) = 0.5 * (rho(i, j) * sigma(i) * sigma(j));
        c.b(i) = 0.5 * (sigma(i) * sigma(i)) - (r - m);
    }
    c.q = r + d;
    return c;
}

// ---------------------------------------------------------------------------

MarketModel::MarketModel(CoefficientSchedule r, CoefficientSchedule m, CoefficientSchedule d,
                         std::vector<CoefficientSchedule> sigma,
                         std::vector<CoefficientSchedule> rho, std::size_t ellipticity_samples)
    : r_(std::move(r)),
      m_(std::move(m)),
      d_(std::move(d)),
      sigma_(std::move(sigma)),
      rho_(std::move(rho)),
      samples_(ellipticity_samples) {
    const std::size_t n = sigma_.size();
    if (n == 0) throw ShapeError("market model needs at least one asset");
    if (rho_.empty() && n == 1) rho_.push_back(CoefficientSchedule::constant(1.0, start(), end()));
    if (rho_.size() != n * n) {
        throw ShapeError("correlation schedule matrix must be " + std::to_string(n) + "x" +
                         std::to_string(n));
    }

    auto check_span = [&](const CoefficientSchedule& s, const std::string& name) {
        if (std::abs(s.start() - start()) > kTimeTol || std::abs(s.end() - end()) > kTimeTol) {
            throw InvalidScheduleError("schedule '" + name + "' does not share the model span [" +
                                       fmt_time(start()) + ", " + fmt_time(end()) + "]");
        }
    };
    check_span(m_, "m");
    check_span(d_, "d");
    for (std::size_t i = 0; i < n; ++i) {
        check_span(sigma_[i], "sigma[" + std::to_string(i) + "]");
        if (!(min_on_window(sigma_[i], start(), end()) > 0.0)) {
            throw InvalidScheduleError("sigma[" + std::to_string(i) + "] must be positive");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto& s = this->rho(i, j);
            const std::string name = "rho[" + std::to_string(i) + "][" + std::to_string(j) + "]";
            check_span(s, name);
            for (const auto& seg : s.segments()) {
                if (i == j && (seg.v_start != 1.0 || seg.v_end != 1.0)) {
                    throw InvalidScheduleError(name + " must be identically 1");
                }
                if (std::abs(seg.v_start) > 1.0 || std::abs(seg.v_end) > 1.0) {
                    throw InvalidScheduleError(name + " leaves [-1, 1]");
                }
            }
            if (j > i) {
                const auto a = s.segments();
                const auto b = this->rho(j, i).segments();
                bool same = a.size() == b.size();
                for (std::size_t k = 0; same && k < a.size(); ++k) {
                    same = std::abs(a[k].t_start - b[k].t_start) <= kTimeTol &&
                           std::abs(a[k].t_end - b[k].t_end) <= kTimeTol &&
                           a[k].value_at(a[k].t_start) == b[k].value_at(b[k].t_start) &&
                           a[k].value_at(a[k].t_end) == b[k].value_at(b[k].t_end);
                }
                if (!same) throw InvalidScheduleError(name + " is not symmetric");
            }
        }
    }
    ellipticity_ = check_uniform_ellipticity(*this, start(), end(), samples_);
}

std::vector<double> MarketModel::breakpoints() const {
    std::vector<const CoefficientSchedule*> all{&r_, &m_, &d_};
    for (const auto& s : sigma_) all.push_back(&s);
    for (const auto& s : rho_) all.push_back(&s);
    auto cuts = merged_cuts(all, start(), end());
    return {cuts.begin() + 1, cuts.end() - 1};
}

namespace {

template <typename F>
MarketModel transform_model(const MarketModel& model, std::size_t samples, F&& f) {
    std::vector<CoefficientSchedule> sigma;
    std::vector<CoefficientSchedule> rho;
    for (const auto& s : model.sigmas()) sigma.push_back(f(s));
    for (const auto& s : model.rhos()) rho.push_back(f(s));
    return MarketModel(f(model.r()), f(model.m()), f(model.d()), std::move(sigma),
                       std::move(rho), samples);
}

}  // namespace

MarketModel MarketModel::reversed() const {
    return transform_model(*this, samples_, [](const CoefficientSchedule& s) { return s.reversed(); });
}

MarketModel MarketModel::shifted(double offset) const {
    return transform_model(*this, samples_,
                           [offset](const CoefficientSchedule& s) { return s.shifted(offset); });
}

MarketModel MarketModel::restricted(double t0, double t1) const {
    return transform_model(
        *this, samples_, [t0, t1](const CoefficientSchedule& s) { return s.restricted(t0, t1); });
}

Eigen::MatrixXd MarketModel::covariance_rate(double t, bool left_limit) const {
    const auto n = static_cast<Eigen::Index>(dimension());
    auto at = [&](const CoefficientSchedule& s) { return left_limit ? s.left_limit(t) : s(t); };
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            cov(i, j) = at(rho(i, j)) * at(sigma_[i]) * at(sigma_[j]);
        }
    }
    return cov;
}

std::vector<CoefficientSchedule> constant_correlation(const Eigen::MatrixXd& corr, double t0,
                                                      double t1) {
    std::vector<CoefficientSchedule> out;
    for (Eigen::Index i = 0; i < corr.rows(); ++i) {
        for (Eigen::Index j = 0; j < corr.cols(); ++j) {
            out.push_back(CoefficientSchedule::constant(corr(i, j), t0, t1));
        }
    }
    return out;
}

AveragedCoefficients averaged_operator_coeffs(const MarketModel& model, double t0, double t1) {
    const auto n = static_cast<Eigen::Index>(model.dimension());
    AveragedCoefficients avg;
    avg.r_bar = average_scalar(model.r(), t0, t1);
    avg.m_bar = average_scalar(model.m(), t0, t1);
    avg.d_bar = average_scalar(model.d(), t0, t1);
    avg.sigma_bar.resize(n);
    avg.rho_bar.resize(n, n);
    avg.a_bar.resize(n, n);
    avg.b_bar.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) avg.sigma_bar(i) = average_vol(model.sigma(i), t0, t1);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& si = model.sigma(i);
            const auto& sj = model.sigma(j);
            const auto& rho = model.rho(i, j);
            avg.rho_bar(i, j) = i == j ? 1.0 : average_correlation(si, sj, rho, t0, t1);
            const CoefficientSchedule* f[] = {&rho, &si, &sj};
            avg.a_bar(i, j) = 0.5 * average_product(f, t0, t1);
        }
        const CoefficientSchedule* sq[] = {&model.sigma(i), &model.sigma(i)};
        avg.b_bar(i) = 0.5 * average_product(sq, t0, t1) - (avg.r_bar - avg.m_bar);
    }
    avg.q_bar = avg.r_bar + avg.d_bar;
    return avg;
}

namespace {

template <typename At>
OperatorCoefficients coefficients_with(const MarketModel& model, At&& at) {
    const auto n = static_cast<Eigen::Index>(model.dimension());
    OperatorCoefficients c;
    c.a.resize(n, n);
    c.b.resize(n);
    const double r = at(model.r());
    const double m = at(model.m());
    const double d = at(model.d());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double si = at(model.sigma(i));
        for (Eigen::Index j = 0; j < n; ++j) {
            c.a(i, j) = 0.5 * (at(model.rho(i, j)) * si * at(model.sigma(j)));
        }
        c.b(i) = 0.5 * (si * si) - (r - m);
    }
    c.q = r + d;
    return c;
}

}  // namespace

OperatorCoefficients operator_coefficients_at(const MarketModel& model, double t,
                                              bool left_limit) {
    return coefficients_with(model, [&](const CoefficientSchedule& s) {
        return left_limit ? s.left_limit(t) : s(t);
    });
}

OperatorCoefficients operator_coefficients_in_piece(const MarketModel& model, double t,
                                                    double hint) {
    return coefficients_with(model, [&](const CoefficientSchedule& s) {
        return s.segments()[s.segment_index(hint)].value_at(t);
    });
}

double check_uniform_ellipticity(const MarketModel& model, double t0, double t1,
                                 std::size_t samples) {
    if (samples < 2) throw InvalidIntervalError("ellipticity check needs >= 2 samples per piece");
    if (!(t1 > t0)) throw InvalidIntervalError("ellipticity window is empty");
    std::vector<const CoefficientSchedule*> all{&model.r()};
    for (const auto& s : model.sigmas()) all.push_back(&s);
    for (const auto& s : model.rhos()) all.push_back(&s);
    const auto cuts = merged_cuts(all, t0, t1);

    double c = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k];
        const double b = cuts[k + 1];
        for (std::size_t s = 0; s < samples; ++s) {
            const bool right_end = s + 1 == samples;
            const double t =
                right_end ? b : a + (b - a) * static_cast<double>(s) / static_cast<double>(samples - 1);
            const Eigen::MatrixXd cov = model.covariance_rate(t, right_end);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
            const double lo = eig.eigenvalues().minCoeff();
            if (!(lo > 1e-12)) {
                throw EllipticityError("diffusion matrix is not uniformly positive definite at t = " +
                                           fmt_time(t) + " (smallest eigenvalue " +
                                           fmt_time(lo) + ")",
                                       t);
            }
            c = std::min(c, lo);
        }
    }
    return c;
}

}  // namespace tdbs
