#include "tdbs/timestepper.hpp"

#include "tdbs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace tdbs {

namespace {

constexpr double kCutTol = 1e-12;

std::string describe(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

void SolveConfig::validate() const {
    if (!(theta >= 0.5 && theta <= 1.0)) throw ConfigError("theta must lie in [1/2, 1]");
    if (!(dt_target > 0.0)) throw ConfigError("dt_target must be positive");
    if (!(tolerance > 0.0)) throw ConfigError("linear-solver tolerance must be positive");
}

std::vector<TimeStep> make_partition(std::span<const double> cuts, double horizon,
                                     const SolveConfig& config) {
    config.validate();
    if (!(horizon > 0.0)) throw InvalidIntervalError("time horizon must be positive");

    std::vector<double> points{0.0, horizon};
    for (double c : cuts) {
        if (c > kCutTol && c < horizon - kCutTol) points.push_back(c);
    }
    std::sort(points.begin(), points.end());
    std::vector<double> knots;
    for (double p : points) {
        if (knots.empty() || p - knots.back() > kCutTol) knots.push_back(p);
    }
    knots.back() = horizon;

    std::vector<TimeStep> steps;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double a = knots[k];
        const double b = knots[k + 1];
        const auto m = static_cast<std::size_t>(
            std::max(1.0, std::ceil((b - a) / config.dt_target - 1e-9)));
        for (std::size_t j = 0; j < m; ++j) {
            const double t0 = a + (b - a) * static_cast<double>(j) / static_cast<double>(m);
            const double t1 =
                j + 1 == m ? b : a + (b - a) * static_cast<double>(j + 1) / static_cast<double>(m);
            steps.push_back({t0, t1, config.theta});
        }
    }

    if (config.theta < 1.0 && config.rannacher_steps > 0) {
        std::vector<TimeStep> out;
        std::size_t remaining = config.rannacher_steps;
        for (const auto& s : steps) {
            if (remaining > 0) {
                const double mid = 0.5 * (s.t_begin + s.t_end);
                out.push_back({s.t_begin, mid, 1.0});
                out.push_back({mid, s.t_end, 1.0});
                remaining = remaining > 2 ? remaining - 2 : 0;
            } else {
                out.push_back(s);
            }
        }
        steps = std::move(out);
    }
    return steps;
}

// ---------------------------------------------------------------------------

ThetaStepper::ThetaStepper(double tolerance, std::size_t max_iterations)
    : tolerance_(tolerance), max_iterations_(max_iterations) {}

Eigen::VectorXd ThetaStepper::step(const Eigen::VectorXd& u, const DiscreteOperator& op,
                                   std::uint64_t operator_id, double dt, double theta) {
    if (u.size() != op.size()) throw ShapeError("step: state length does not match operator");
    if (!(dt > 0.0)) throw InvalidIntervalError("step: dt must be positive");
    const Eigen::Index n = op.size();
    const bool tridiagonal = op.grid().dimension() == 1;

    const Key key{operator_id, dt, theta};
    if (!key_ || !(*key_ == key)) {
        SparseMatrix identity(n, n);
        identity.setIdentity();
        system_ = identity + (theta * dt) * op.matrix();
        system_.makeCompressed();
        if (tridiagonal) {
            // Thomas factorisation: upper_ holds the modified super-diagonal,
            // diag_ the pivots.
            lower_ = Eigen::VectorXd::Zero(n);
            diag_ = Eigen::VectorXd::Zero(n);
            upper_ = Eigen::VectorXd::Zero(n);
            for (Eigen::Index k = 0; k < n; ++k) {
                for (SparseMatrix::InnerIterator it(system_, k); it; ++it) {
                    if (it.col() == k - 1) lower_(k) = it.value();
                    else if (it.col() == k) diag_(k) = it.value();
                    else if (it.col() == k + 1) upper_(k) = it.value();
                    else throw ShapeError("one-dimensional system is not tridiagonal");
                }
            }
            for (Eigen::Index k = 0; k < n; ++k) {
                if (k > 0) diag_(k) -= lower_(k) * upper_(k - 1);
                if (diag_(k) == 0.0) throw SolverError("zero pivot in tridiagonal solve", INFINITY);
                upper_(k) /= diag_(k);
            }
            iterative_.reset();
        } else {
            iterative_ = std::make_unique<Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>>>();
            iterative_->setTolerance(tolerance_);
            iterative_->setMaxIterations(static_cast<Eigen::Index>(max_iterations_));
            iterative_->compute(system_);
            if (iterative_->info() != Eigen::Success) {
                throw SolverError("preconditioner setup failed", INFINITY);
            }
        }
        key_ = key;
    }

    Eigen::VectorXd rhs = u;
    if (theta < 1.0) rhs -= ((1.0 - theta) * dt) * (op.matrix() * u);

    Eigen::VectorXd next(n);
    if (tridiagonal) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const double prev = k > 0 ? next(k - 1) : 0.0;
            next(k) = (rhs(k) - lower_(k) * prev) / diag_(k);
        }
        for (Eigen::Index k = n - 2; k >= 0; --k) next(k) -= upper_(k) * next(k + 1);
        last_iterations_ = 1;
    } else {
        next = iterative_->solveWithGuess(rhs, u);
        last_iterations_ = static_cast<std::size_t>(iterative_->iterations());
    }

    const double rhs_norm = rhs.norm();
    last_residual_ = rhs_norm > 0.0 ? (system_ * next - rhs).norm() / rhs_norm : (system_ * next).norm();
    if (!(last_residual_ <= std::max(tolerance_, 1e-13))) {
        throw SolverError("linear solve stalled at relative residual " + describe(last_residual_) +
                              " (tolerance " + describe(tolerance_) + ")",
                          last_residual_);
    }
    return next;
}

Eigen::VectorXd step_theta(const Eigen::VectorXd& u, const DiscreteOperator& op, double dt,
                           double theta, double tolerance) {
    if (!(theta >= 0.5 && theta <= 1.0)) throw ConfigError("theta must lie in [1/2, 1]");
    ThetaStepper stepper(tolerance);
    return stepper.step(u, op, 0, dt, theta);
}

// ---------------------------------------------------------------------------

SolutionField solve_with_rule(const CoefficientRule& rule, std::span<const double> cuts,
                              const ProblemSpec& problem, const SolveConfig& config) {
    config.validate();
    auto grid = std::make_shared<const Grid>(build_grid(problem.domain, problem.nodes_per_axis));
    const Eigen::VectorXd g = evaluate_payoff(problem.payoff, *grid);

    std::vector<double> all_cuts(cuts.begin(), cuts.end());
    all_cuts.insert(all_cuts.end(), problem.store_times.begin(), problem.store_times.end());
    const auto steps = make_partition(all_cuts, problem.maturity, config);

    SolutionField field;
    field.grid = grid;
    field.maturity = problem.maturity;
    field.times.push_back(0.0);
    field.values.push_back(g);

    auto wanted = [&](double t) {
        return std::any_of(problem.store_times.begin(), problem.store_times.end(),
                           [t](double s) { return std::abs(s - t) <= kCutTol; });
    };

    ThetaStepper stepper(config.tolerance, config.max_iterations);
    std::optional<OperatorCoefficients> current;
    std::optional<DiscreteOperator> op;
    std::uint64_t op_id = 0;
    Eigen::VectorXd u = grid->gather(g);

    for (std::size_t k = 0; k < steps.size(); ++k) {
        const auto& s = steps[k];
        OperatorCoefficients c = rule(s);
        if (!current || !(c == *current)) {
            op.emplace(assemble(c, grid));
            current = std::move(c);
            ++op_id;
            ++field.summary.operators_assembled;
        }
        u = stepper.step(u, *op, op_id, s.dt(), s.theta);
        field.summary.max_residual = std::max(field.summary.max_residual, stepper.last_residual());
        field.summary.max_iterations =
            std::max(field.summary.max_iterations, stepper.last_iterations());
        const bool last = k + 1 == steps.size();
        if (config.store_every_step || last || wanted(s.t_end)) {
            field.times.push_back(s.t_end);
            field.values.push_back(grid->scatter(u));
        }
    }
    field.summary.steps = steps.size();
    return field;
}

std::vector<double> breakpoints_in_t(const MarketModel& model, double maturity) {
    std::vector<double> out;
    for (double tau : model.breakpoints()) {
        const double t = maturity - tau;
        if (t > kCutTol && t < maturity - kCutTol) out.push_back(t);
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

void require_span(const MarketModel& model, double maturity) {
    if (!(maturity > 0.0)) throw InvalidIntervalError("maturity must be positive");
    if (model.start() > 1e-12 || model.end() < maturity - 1e-12) {
        throw OutOfRangeError("market model does not cover [0, " + describe(maturity) + "]");
    }
}

}  // namespace

CoefficientRule time_dependent_rule(const MarketModel& model, double maturity) {
    return [&model, maturity](const TimeStep& s) {
        const double hint = maturity - 0.5 * (s.t_begin + s.t_end);
        const double tau = s.theta >= 1.0 ? maturity - s.t_end : hint;
        return operator_coefficients_in_piece(model, tau, hint);
    };
}

SolutionField solve_time_dependent(const MarketModel& model, const ProblemSpec& problem,
                                   const SolveConfig& config) {
    require_span(model, problem.maturity);
    const auto cuts = breakpoints_in_t(model, problem.maturity);
    return solve_with_rule(time_dependent_rule(model, problem.maturity), cuts, problem, config);
}

SolutionField solve_constant(const OperatorCoefficients& coeffs, const MarketModel& model,
                             const ProblemSpec& problem, const SolveConfig& config) {
    require_span(model, problem.maturity);
    const auto cuts = breakpoints_in_t(model, problem.maturity);
    auto rule = [&coeffs](const TimeStep&) { return coeffs; };
    return solve_with_rule(rule, cuts, problem, config);
}

SolutionField solve_averaged(const MarketModel& model, const ProblemSpec& problem,
                             const SolveConfig& config) {
    require_span(model, problem.maturity);
    const auto avg = averaged_operator_coeffs(model, 0.0, problem.maturity);
    return solve_constant(avg.operator_coefficients(), model, problem, config);
}

void write_solution_csv(std::ostream& os, const SolutionField& field) {
    const Grid& grid = *field.grid;
    const auto old_precision = os.precision(17);
    os << "t,tau";
    for (std::size_t i = 0; i < grid.dimension(); ++i) os << ",x" << i;
    for (std::size_t i = 0; i < grid.dimension(); ++i) os << ",y" << i;
    os << ",value\n";
    for (std::size_t k = 0; k < field.times.size(); ++k) {
        const double t = field.times[k];
        for (std::size_t flat = 0; flat < grid.size(); ++flat) {
            const auto x = grid.point(flat);
            os << t << "," << field.maturity - t;
            for (double v : x) os << "," << v;
            for (double v : x) os << "," << std::exp(v);
            os << "," << field.values[k](static_cast<Eigen::Index>(flat)) << "\n";
        }
    }
    os.precision(old_precision);
}

}  // namespace tdbs
