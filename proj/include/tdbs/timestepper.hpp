#pragma once

#include "tdbs/coefficients.hpp"
#include "tdbs/discrete_operator.hpp"
#include "tdbs/domain_grid.hpp"

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace tdbs {

struct SolveConfig {
    double theta = 0.5;  ///< 1/2 trapezoidal, 1 implicit Euler
    double dt_target = 1.0 / 128.0;
    std::size_t rannacher_steps = 4;  ///< implicit-Euler half-steps replacing the first steps
    double tolerance = 1e-10;         ///< relative residual of each linear solve
    std::size_t max_iterations = 5000;
    bool store_every_step = false;

    void validate() const;
};

/// Pricing problem in market time with tau0 = 0: payoff at maturity T,
/// solution wanted at tau = 0, i.e. after a march of length T in t = T - tau.
struct ProblemSpec {
    DomainSpec domain;
    PayoffSpec payoff;
    double maturity = 1.0;
    std::vector<std::size_t> nodes_per_axis;
    std::vector<double> store_times;  ///< extra output times, in t
};

struct TimeStep {
    double t_begin = 0.0;
    double t_end = 0.0;
    double theta = 0.5;

    double dt() const noexcept { return t_end - t_begin; }
};

/// Steps of length <= dt_target covering [0, horizon], with every cut point
/// (coefficient breakpoints, store times) landing on a step boundary.
std::vector<TimeStep> make_partition(std::span<const double> cuts, double horizon,
                                     const SolveConfig& config);

struct SolveSummary {
    std::size_t steps = 0;
    std::size_t operators_assembled = 0;
    double max_residual = 0.0;
    std::size_t max_iterations = 0;
};

struct SolutionField {
    std::shared_ptr<const Grid> grid;
    double maturity = 0.0;
    std::vector<double> times;            ///< in t = T - tau
    std::vector<Eigen::VectorXd> values;  ///< full-grid nodal values
    SolveSummary summary;

    const Eigen::VectorXd& final_values() const { return values.back(); }
};

/// Theta-scheme linear solves with a cached system: tridiagonal elimination in
/// one dimension, ILUT-preconditioned BiCGSTAB otherwise.
class ThetaStepper {
public:
    explicit ThetaStepper(double tolerance = 1e-10, std::size_t max_iterations = 5000);

    /// u_next solves (I + theta dt A) u_next = (I - (1 - theta) dt A) u.
    /// `operator_id` identifies the operator for system caching.
    Eigen::VectorXd step(const Eigen::VectorXd& u, const DiscreteOperator& op,
                         std::uint64_t operator_id, double dt, double theta);

    double last_residual() const noexcept { return last_residual_; }
    std::size_t last_iterations() const noexcept { return last_iterations_; }

private:
    struct Key {
        std::uint64_t id;
        double dt;
        double theta;
        bool operator==(const Key&) const = default;
    };

    double tolerance_;
    std::size_t max_iterations_;
    std::optional<Key> key_;
    SparseMatrix system_;
    Eigen::VectorXd lower_, diag_, upper_;  // tridiagonal factors (one dimension)
    std::unique_ptr<Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>>> iterative_;
    double last_residual_ = 0.0;
    std::size_t last_iterations_ = 0;
};

Eigen::VectorXd step_theta(const Eigen::VectorXd& u, const DiscreteOperator& op, double dt,
                           double theta, double tolerance = 1e-10);

/// Operator coefficients to use on one step.
using CoefficientRule = std::function<OperatorCoefficients(const TimeStep&)>;

/// Generic march of the homogeneous problem from g at t = 0 to t = T.
SolutionField solve_with_rule(const CoefficientRule& rule, std::span<const double> cuts,
                              const ProblemSpec& problem, const SolveConfig& config);

/// Coefficients at the step midpoint (theta < 1) or right end (theta = 1),
/// mapped to market time tau = T - t.
CoefficientRule time_dependent_rule(const MarketModel& model, double maturity);

SolutionField solve_time_dependent(const MarketModel& model, const ProblemSpec& problem,
                                   const SolveConfig& config);

/// One operator from the averaged coefficients, on the same partition as the
/// time-dependent solve.
SolutionField solve_averaged(const MarketModel& model, const ProblemSpec& problem,
                             const SolveConfig& config);

/// Constant operator on the partition of `model` (used for averaging controls).
SolutionField solve_constant(const OperatorCoefficients& coeffs, const MarketModel& model,
                             const ProblemSpec& problem, const SolveConfig& config);

/// Market-time breakpoints of the model mapped to t = T - tau, inside (0, T).
std::vector<double> breakpoints_in_t(const MarketModel& model, double maturity);

/// CSV snapshot: time columns, node coordinates and value, one row per node and time.
void write_solution_csv(std::ostream& os, const SolutionField& field);

}  // namespace tdbs
