#pragma once

#include "tdbs/analytic_oracles.hpp"
#include "tdbs/coefficients.hpp"
#include "tdbs/domain_grid.hpp"
#include "tdbs/mc_oracle.hpp"
#include "tdbs/semigroup_lab.hpp"
#include "tdbs/timestepper.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tdbs {

/// One row of a report: a refinement level, a stored time or a comparison.
struct LevelRecord {
    std::string label;
    std::vector<std::size_t> nodes;
    double dt = 0.0;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

struct VerificationReport {
    std::string id;
    std::vector<LevelRecord> levels;
    bool verdict = false;
    double wall_seconds = 0.0;
    std::vector<std::string> notes;

    /// verdict = every level passes (and there is at least one level).
    void finalize();
};

void write_report_text(std::ostream& os, const VerificationReport& report);
void write_report_csv(std::ostream& os, const VerificationReport& report);

/// |u - v| / |u| over the interior nodes of `region` (uniform weights).
double relative_l2(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Grid& grid,
                   Region region);

struct RefinementLevel {
    std::vector<std::size_t> nodes_per_axis;
    double dt = 1.0 / 128.0;
};

enum class Averaging { rms, arithmetic };

struct Theorem2Options {
    double tolerance = 1e-3;
    Region region = Region::interior;
    /// `arithmetic` swaps the volatility average for the plain mean of sigma
    /// (and of rho); it is the falsification control.
    Averaging averaging = Averaging::rms;
};

/// Constant coefficients built from arithmetic means of sigma and rho.
OperatorCoefficients arithmetic_mean_coefficients(const MarketModel& model, double t0, double t1);

/// Time-dependent and averaged solves on identical partitions per level; a level
/// passes when its residual does not exceed the previous level's, and the
/// finest level must also meet the tolerance.
VerificationReport theorem2_check(const MarketModel& model, const ProblemSpec& problem,
                                  const std::vector<RefinementLevel>& levels,
                                  const SolveConfig& config, const Theorem2Options& options = {});

/// Piecewise-constant model with every schedule frozen, on [T - t_{k+1}, T - t_k]
/// in market time, at its value just after t_k in solver time.
MarketModel sample_left(const MarketModel& model, double maturity, std::size_t pieces);

/// sup over stored times of |v - v_N| / |v| for each N; passes when the errors
/// do not increase with N.
VerificationReport lemma5_check(const MarketModel& model, const ProblemSpec& problem,
                                const std::vector<std::size_t>& pieces, const SolveConfig& config);

/// Energy bound |u(t_k)| <= e^{1.1 c1 t_k} |g| at every step, plus
/// non-increase when every drift vanishes and q >= 0.
VerificationReport energy_check(const MarketModel& model, const ProblemSpec& problem,
                                const SolveConfig& config);

/// Log box centred on `centre` reaching `margin_sd` averaged standard
/// deviations (plus `support` in log units) beyond it along each axis.
DomainSpec wide_box(const MarketModel& model, std::span<const double> centre, double maturity,
                    double margin_sd = 8.0, double support = 0.0);

/// Tent max(0, wing - |y - strike|) per axis, multiplied across axes, on the grid nodes.
std::vector<double> butterfly_values(const Grid& grid, double strike, double wing);

struct OracleSetup {
    double maturity = 1.0;
    double strike = 100.0;
    std::size_t closed_form_nodes = 641;
    double butterfly_wing = 20.0;
    std::vector<std::size_t> fourier_nodes{641, 321};  ///< per axis, n = 1 and n = 2
    double pde_tolerance = 1e-3;
    double multiplier_tolerance = 1e-12;
    double barrier_relative = 0.02;
    double stderr_multiple = 3.0;
    SolveConfig solve;
    MCConfig mc;
};

/// PDE vs closed form on the core of a wide box (vanilla put, n = 1).
LevelRecord pde_vs_closed_form(const MarketModel& model, const OracleSetup& setup);
/// PDE vs Fourier on the core of a wide box (butterfly payoff, n = 1 or 2).
/// The Fourier grid and field are handed back when requested.
LevelRecord pde_vs_fourier(const MarketModel& model, const OracleSetup& setup,
                           FourierGrid* grid_out = nullptr, Eigen::VectorXd* field_out = nullptr);
/// Pointwise gap between the time-dependent and averaged Fourier multipliers.
LevelRecord fourier_multiplier_check(const MarketModel& model, const OracleSetup& setup);
/// PDE value at `spot` against the Monte Carlo price of the same problem.
/// With `barrier` the tolerance is max(k stderr, relative share of the price).
LevelRecord pde_vs_mc(const MarketModel& model, const ProblemSpec& problem,
                      std::span<const double> spot, const OracleSetup& setup, bool barrier);

/// Sample mean and covariance of the barrier-free terminal log-prices against
/// the averaged Gaussian law: mean ln y0 - T b_bar, covariance 2 T a_bar.
/// One record per mean and per covariance entry, each within `stderr_multiple`
/// empirical standard errors.
VerificationReport mc_moment_check(const MarketModel& model, std::span<const double> y0,
                                   double maturity, const MCConfig& cfg,
                                   double stderr_multiple = 3.0);

struct SemigroupOptions {
    std::size_t dimension = 50;
    std::size_t seeds = 100;
    std::uint64_t seed = 1;
    double identity_tolerance = 1e-10;
    double witness_floor = 1e-3;
    std::vector<double> bound_lambdas{1e-1, 1e-2, 1e-3};
    double bound_time = 1.0;
    std::vector<double> rate_lambdas{1.0, 1e-1, 1e-2};
    bool rate_critical_u0 = true;  ///< false: random unit u0
    double rate_mu = 1e-6;
    double rate_time = 1e-3;
    double slope_target = 0.5;
    double slope_tolerance = 0.15;
    std::size_t segments = 5;
    double composition_tolerance = 1e-10;
    std::size_t probes = 20;
};

/// Matrix-scale suite: exponential identity, Yosida contraction and bounds,
/// convergence rate, piecewise composition and contraction of e^{-tA}.
VerificationReport semigroup_suite(const SemigroupOptions& options,
                                   YosidaTable* table_out = nullptr);

}  // namespace tdbs
