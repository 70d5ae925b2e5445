#include "tdbs/mc_oracle.hpp"

#include "tdbs/errors.hpp"
#include "tdbs/random.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <random>
#include <thread>

namespace tdbs {

namespace {

constexpr double kTimeTol = 1e-12;

/// Running mean / second moment of one batch; merged with Chan's formula.
struct Moments {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;
    double knocked = 0.0;
    double paths = 0.0;

    void add(double v) {
        count += 1.0;
        const double delta = v - mean;
        mean += delta / count;
        m2 += delta * (v - mean);
    }
};

Moments merge(const Moments& a, const Moments& b) {
    if (a.count == 0.0) return {b.count, b.mean, b.m2, a.knocked + b.knocked, a.paths + b.paths};
    if (b.count == 0.0) return {a.count, a.mean, a.m2, a.knocked + b.knocked, a.paths + b.paths};
    Moments out;
    out.count = a.count + b.count;
    const double delta = b.mean - a.mean;
    out.mean = a.mean + delta * (b.count / out.count);
    out.m2 = a.m2 + b.m2 + delta * delta * (a.count * b.count / out.count);
    out.knocked = a.knocked + b.knocked;
    out.paths = a.paths + b.paths;
    return out;
}

Moments tree_reduce(std::span<const Moments> parts) {
    if (parts.empty()) return {};
    if (parts.size() == 1) return parts.front();
    const std::size_t half = parts.size() / 2;
    return merge(tree_reduce(parts.first(half)), tree_reduce(parts.subspan(half)));
}

/// Runs fn(batch_index) for every batch on `workers` threads. Each batch
/// writes only its own slot, so the outcome does not depend on scheduling.
template <class Fn>
void for_each_batch(std::size_t batches, std::size_t workers, Fn&& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(batches, 1));
    if (workers <= 1) {
        for (std::size_t b = 0; b < batches; ++b) fn(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t b = next.fetch_add(1);
                if (b >= batches || failed.load()) return;
                try {
                    fn(b);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

/// Antithetic sampling pairs a path with its mirror: both share one stream.
struct PathWalker {
    const StepPlan& plan;
    const std::optional<DomainSpec>& domain;
    Eigen::VectorXd x0;

    /// Advances the path (and, with a mirror, its antithetic partner).
    void walk(std::uint64_t seed, std::uint64_t stream, Eigen::VectorXd& x, bool& ko,
              Eigen::VectorXd* mirror, bool* mirror_ko) const {
        PhiloxStream rng(seed, stream);
        std::normal_distribution<double> normal;
        const Eigen::Index n = x0.size();
        Eigen::VectorXd z(n);
        std::vector<double> y(static_cast<std::size_t>(n));
        x = x0;
        ko = false;
        if (mirror) {
            *mirror = x0;
            *mirror_ko = false;
        }
        auto outside = [&](const Eigen::VectorXd& v) {
            for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = std::exp(v(i));
            return !domain->contains(y);
        };
        for (std::size_t k = 0; k < plan.mean.size(); ++k) {
            for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
            const Eigen::VectorXd shock = plan.chol[k] * z;
            x += plan.mean[k] + shock;
            if (mirror) *mirror += plan.mean[k] - shock;
            if (domain) {
                if (!ko && outside(x)) ko = true;
                if (mirror && !*mirror_ko && outside(*mirror)) *mirror_ko = true;
            }
        }
    }
};

Eigen::VectorXd start_point(std::span<const double> y0, const MarketModel& model,
                            const std::optional<DomainSpec>& domain) {
    if (y0.size() != model.dimension()) throw ShapeError("spot has the wrong dimension");
    if (domain) {
        domain->validate();
        if (domain->dimension() != model.dimension()) {
            throw ShapeError("domain dimension does not match the model");
        }
        if (!domain->contains(y0)) throw DomainError("spot lies outside the knock-out region");
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(y0.size()));
    for (std::size_t i = 0; i < y0.size(); ++i) {
        if (!(y0[i] > 0.0)) throw DomainError("spot prices must be positive");
        x(static_cast<Eigen::Index>(i)) = std::log(y0[i]);
    }
    return x;
}

void check_window(const MarketModel& model, double tau0, double maturity) {
    if (!(maturity > tau0)) throw InvalidIntervalError("maturity must exceed tau0");
    if (tau0 < model.start() - kTimeTol || maturity > model.end() + kTimeTol) {
        throw OutOfRangeError("simulation window leaves the model span");
    }
}

}  // namespace

void MCConfig::validate() const {
    if (paths < 2) throw ConfigError("mc.paths must be at least 2");
    if (antithetic && paths % 2 != 0) throw ConfigError("mc.paths must be even with antithetic");
    if (steps_per_year == 0) throw ConfigError("mc.steps_per_year must be positive");
    if (batch_size == 0) throw ConfigError("mc.batch_size must be positive");
}

StepPlan plan_steps(const MarketModel& model, double tau0, double maturity, bool monitored,
                    std::size_t steps_per_year) {
    check_window(model, tau0, maturity);
    std::vector<double> knots{tau0};
    for (double b : model.breakpoints()) {
        if (b > tau0 + kTimeTol && b < maturity - kTimeTol) knots.push_back(b);
    }
    knots.push_back(maturity);

    StepPlan plan;
    plan.times.push_back(tau0);
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double a = knots[k];
        const double b = knots[k + 1];
        std::size_t m = 1;
        if (monitored) {
            m = static_cast<std::size_t>(std::max(
                1.0, std::ceil((b - a) * static_cast<double>(steps_per_year) - 1e-9)));
        }
        for (std::size_t j = 1; j <= m; ++j) {
            plan.times.push_back(j == m ? b
                                        : a + (b - a) * static_cast<double>(j) /
                                                  static_cast<double>(m));
        }
    }

    const std::size_t n = model.dimension();
    const auto ni = static_cast<Eigen::Index>(n);
    for (std::size_t k = 0; k + 1 < plan.times.size(); ++k) {
        const double s0 = plan.times[k];
        const double s1 = plan.times[k + 1];
        const double carry = integrate_product(std::array{&model.r()}, s0, s1) -
                             integrate_product(std::array{&model.m()}, s0, s1);
        Eigen::VectorXd mean(ni);
        Eigen::MatrixXd cov(ni, ni);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            for (std::size_t j = 0; j <= i; ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                const double c = integrate_product(
                    std::array{&model.rho(i, j), &model.sigma(i), &model.sigma(j)}, s0, s1);
                cov(ii, jj) = c;
                cov(jj, ii) = c;
            }
            mean(ii) = carry - 0.5 * cov(ii, ii);
        }
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            throw EllipticityError("step covariance is not positive definite", s0);
        }
        plan.mean.push_back(std::move(mean));
        plan.chol.push_back(llt.matrixL());
    }
    return plan;
}

TerminalSample simulate_terminal(const MarketModel& model, std::span<const double> y0,
                                 double tau0, double maturity,
                                 const std::optional<DomainSpec>& domain, const MCConfig& cfg) {
    cfg.validate();
    const Eigen::VectorXd x0 = start_point(y0, model, domain);
    const StepPlan plan =
        plan_steps(model, tau0, maturity, domain.has_value(), cfg.steps_per_year);
    const PathWalker walker{plan, domain, x0};

    TerminalSample out;
    out.log_terminal.resize(x0.size(), static_cast<Eigen::Index>(cfg.paths));
    out.knocked_out.assign(cfg.paths, 0);
    const std::size_t per_unit = cfg.antithetic ? 2 : 1;
    const std::size_t units = cfg.paths / per_unit;
    const std::size_t batches = (units + cfg.batch_size - 1) / cfg.batch_size;

    for_each_batch(batches, cfg.workers, [&](std::size_t b) {
        Eigen::VectorXd x, mirror;
        bool ko = false, mirror_ko = false;
        const std::size_t end = std::min(units, (b + 1) * cfg.batch_size);
        for (std::size_t u = b * cfg.batch_size; u < end; ++u) {
            walker.walk(cfg.seed, u, x, ko, cfg.antithetic ? &mirror : nullptr, &mirror_ko);
            const auto col = static_cast<Eigen::Index>(u * per_unit);
            out.log_terminal.col(col) = x;
            out.knocked_out[u * per_unit] = ko ? 1 : 0;
            if (cfg.antithetic) {
                out.log_terminal.col(col + 1) = mirror;
                out.knocked_out[u * per_unit + 1] = mirror_ko ? 1 : 0;
            }
        }
    });
    return out;
}

MCResult price_mc(const MarketModel& model, std::span<const double> y0, double tau0,
                  double maturity, const std::optional<DomainSpec>& domain,
                  const PayoffFunction& payoff, const MCConfig& cfg) {
    cfg.validate();
    const Eigen::VectorXd x0 = start_point(y0, model, domain);
    const StepPlan plan =
        plan_steps(model, tau0, maturity, domain.has_value(), cfg.steps_per_year);
    const PathWalker walker{plan, domain, x0};
    const double discount =
        std::exp(-(integrate_product(std::array{&model.r()}, tau0, maturity) +
                   integrate_product(std::array{&model.d()}, tau0, maturity)));

    const std::size_t per_unit = cfg.antithetic ? 2 : 1;
    const std::size_t units = cfg.paths / per_unit;
    const std::size_t batches = (units + cfg.batch_size - 1) / cfg.batch_size;
    std::vector<Moments> parts(batches);

    for_each_batch(batches, cfg.workers, [&](std::size_t b) {
        Eigen::VectorXd x, mirror;
        bool ko = false, mirror_ko = false;
        std::vector<double> y(static_cast<std::size_t>(x0.size()));
        auto value = [&](const Eigen::VectorXd& v, bool knocked) {
            if (knocked) return 0.0;
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                y[static_cast<std::size_t>(i)] = std::exp(v(i));
            }
            return payoff(y);
        };
        Moments acc;
        const std::size_t end = std::min(units, (b + 1) * cfg.batch_size);
        for (std::size_t u = b * cfg.batch_size; u < end; ++u) {
            walker.walk(cfg.seed, u, x, ko, cfg.antithetic ? &mirror : nullptr, &mirror_ko);
            double v = value(x, ko);
            acc.knocked += ko ? 1.0 : 0.0;
            acc.paths += 1.0;
            if (cfg.antithetic) {
                v = 0.5 * (v + value(mirror, mirror_ko));
                acc.knocked += mirror_ko ? 1.0 : 0.0;
                acc.paths += 1.0;
            }
            acc.add(v);
        }
        parts[b] = acc;
    });

    const Moments total = tree_reduce(parts);
    MCResult r;
    r.paths = static_cast<std::size_t>(total.paths);
    r.price = discount * total.mean;
    const double variance = total.count > 1.0 ? total.m2 / (total.count - 1.0) : 0.0;
    r.std_error = discount * std::sqrt(variance / total.count);
    r.knockout_fraction = total.paths > 0.0 ? total.knocked / total.paths : 0.0;
    return r;
}

MCResult price_mc(const MarketModel& model, std::span<const double> y0, double tau0,
                  double maturity, const std::optional<DomainSpec>& domain,
                  const PayoffSpec& payoff, const MCConfig& cfg) {
    if (payoff.kind == PayoffSpec::Kind::custom) {
        throw ConfigError("custom nodal payoffs cannot be simulated");
    }
    return price_mc(
        model, y0, tau0, maturity, domain,
        [&payoff](std::span<const double> y) { return payoff(y); }, cfg);
}

void write_terminal_csv(std::ostream& os, const TerminalSample& sample) {
    const auto old_precision = os.precision(17);
    const Eigen::Index n = sample.log_terminal.rows();
    os << "path";
    for (Eigen::Index i = 0; i < n; ++i) os << ",log_s" << i;
    os << ",knocked_out\n";
    const Eigen::Index rows = std::min<Eigen::Index>(sample.log_terminal.cols(), 10000);
    for (Eigen::Index p = 0; p < rows; ++p) {
        os << p;
        for (Eigen::Index i = 0; i < n; ++i) os << "," << sample.log_terminal(i, p);
        os << "," << static_cast<int>(sample.knocked_out[static_cast<std::size_t>(p)]) << "\n";
    }
    os.precision(old_precision);
}

}  // namespace tdbs
