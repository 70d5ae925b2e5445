#pragma once

#include "tdbs/coefficients.hpp"
#include "tdbs/domain_grid.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace tdbs {

struct MCConfig {
    std::size_t paths = 100000;
    std::size_t steps_per_year = 252;  ///< monitoring density when a domain is given
    std::uint64_t seed = 20240601;
    bool antithetic = false;
    std::size_t workers = 1;
    std::size_t batch_size = 4096;

    void validate() const;
};

struct MCResult {
    double price = 0.0;
    double std_error = 0.0;
    double knockout_fraction = 0.0;
    std::size_t paths = 0;
};

/// Simulated log-prices at maturity (one column per path) and knock-out flags.
struct TerminalSample {
    Eigen::MatrixXd log_terminal;
    std::vector<std::uint8_t> knocked_out;
};

/// Exact Gaussian step moments of ln S over [tau0, T] on a breakpoint-aligned
/// partition. Without a domain only the breakpoints are used as step times.
struct StepPlan {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> mean;
    std::vector<Eigen::MatrixXd> chol;  ///< lower Cholesky factor of the step covariance
};

StepPlan plan_steps(const MarketModel& model, double tau0, double maturity, bool monitored,
                    std::size_t steps_per_year);

/// Paths of d ln S_i = (r - m - sigma_i^2 / 2) dtau + sigma_i dW_i from y0 at tau0 to T,
/// knocked out when a step time falls outside `domain`.
TerminalSample simulate_terminal(const MarketModel& model, std::span<const double> y0,
                                 double tau0, double maturity,
                                 const std::optional<DomainSpec>& domain, const MCConfig& cfg);

using PayoffFunction = std::function<double(std::span<const double>)>;

/// Discounted expectation e^{-int (r + d)} E[g(S_T) 1{no knock-out}].
MCResult price_mc(const MarketModel& model, std::span<const double> y0, double tau0,
                  double maturity, const std::optional<DomainSpec>& domain,
                  const PayoffFunction& payoff, const MCConfig& cfg);

MCResult price_mc(const MarketModel& model, std::span<const double> y0, double tau0,
                  double maturity, const std::optional<DomainSpec>& domain,
                  const PayoffSpec& payoff, const MCConfig& cfg);

/// Terminal dump capped at 10^4 rows.
void write_terminal_csv(std::ostream& os, const TerminalSample& sample);

}  // namespace tdbs
