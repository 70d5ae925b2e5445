#pragma once

#include "tdbs/coefficients.hpp"
#include "tdbs/mc_oracle.hpp"
#include "tdbs/timestepper.hpp"
#include "tdbs/verify.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tdbs {

/// Parsed experiment description. Market times in the document are tau;
/// the model stored here is shifted so that tau0 maps to 0 and the problem
/// maturity is T - tau0.
struct ExperimentConfig {
    std::string kind;
    std::optional<MarketModel> model;
    double tau0 = 0.0;
    double maturity = 1.0;  ///< T as written in the document
    ProblemSpec problem;
    std::vector<double> spot;
    SolveConfig solve;
    std::vector<RefinementLevel> levels;
    Theorem2Options theorem2;
    std::vector<std::size_t> lemma5_pieces;
    MCConfig mc;
    bool mc_compare_pde = false;
    bool mc_moments = false;  ///< barrier-free terminal log-moments vs the averaged law
    SemigroupOptions semigroup;
    OracleSetup oracle;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::string effective_json;  ///< document after overrides, pretty-printed
};

/// Parses a JSON document and applies `key=value` overrides (dotted keys,
/// values parsed as JSON when possible). Throws ConfigError naming the
/// offending field.
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides);

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace tdbs
