#include "tdbs/config.hpp"
#include "tdbs/errors.hpp"

#include <doctest.h>

#include <string>

using namespace tdbs;

namespace {

const std::string kBase = R"({
  "model": {
    "n": 2,
    "maturity": 1.0,
    "r": {"breaks": [0.0, 0.5, 1.0], "values": [0.02, 0.04]},
    "sigma": [
      {"breaks": [0.0, 0.5, 1.0], "values": [0.2, 0.3]},
      [{"t_start": 0.0, "t_end": 1.0, "kind": "linear", "v_start": 0.1, "v_end": 0.3}]
    ],
    "rho": [{"i": 0, "j": 1, "schedule": 0.4}]
  },
  "domain": {"lower": [50, 50], "upper": [200, 200], "sum_barrier": 300, "spot": [100, 100]},
  "payoff": {"kind": "basket_put", "strike": 200},
  "solver": {"nodes": [21, 21], "store_times": [0.25]},
  "experiment": {"kind": "solve", "seed": 5},
  "output": {"dir": "out/x"}
})";

std::string error_of(const std::string& text, std::vector<std::string> overrides = {}) {
    try {
        parse_config(text, overrides);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("a full config parses") {
    const auto cfg = parse_config(kBase, {});
    CHECK(cfg.kind == "solve");
    REQUIRE(cfg.model);
    CHECK(cfg.model->dimension() == 2);
    CHECK(cfg.model->rho(0, 1)(0.3) == 0.4);
    CHECK(cfg.model->sigma(1)(0.5) == doctest::Approx(0.2));
    CHECK(cfg.problem.domain.sum_barrier == 300.0);
    CHECK(cfg.problem.nodes_per_axis == std::vector<std::size_t>{21, 21});
    // store times are given in market time and held in t = T - tau
    CHECK(cfg.problem.store_times == std::vector<double>{0.75});
    CHECK(cfg.seed == 5);
    CHECK(cfg.mc.seed == 5);
    CHECK(cfg.output_dir == "out/x");
}

TEST_CASE("unknown fields name their path") {
    CHECK(error_of(R"({"experiment": {"kind": "semigroup", "sede": 1}})") ==
          "unknown field 'experiment.sede'");
    CHECK(error_of(R"({"extra": 1, "experiment": {"kind": "semigroup"}})") == "unknown field 'extra'");
    CHECK(error_of(kBase, {"solver.thetaa=1"}) == "unknown field 'solver.thetaa'");
}

TEST_CASE("invalid values are reported") {
    CHECK(error_of(R"({"experiment": {"kind": "nope"}})").find("experiment.kind") != std::string::npos);
    CHECK(error_of("{ not json").find("JSON") != std::string::npos);
    CHECK(error_of(kBase, {"solver.theta=0.2"}).find("solver") != std::string::npos);
    CHECK(error_of(kBase, {"model.sigma=[0.2]"}).find("model.sigma") != std::string::npos);
    CHECK(error_of(kBase, {"model.maturity=2.0"}).find("model.r") != std::string::npos);
    CHECK(error_of(kBase, {"domain.lower=[50]"}).find("domain.lower") != std::string::npos);
    CHECK(error_of(R"({"experiment": {"kind": "semigroup", "semigroup": {"rate_u0": "x"}}})")
              .find("rate_u0") != std::string::npos);
}

TEST_CASE("ellipticity violations carry their time") {
    try {
        parse_config(kBase, {R"(model.rho=[{"i": 0, "j": 1, "schedule": {"breaks": [0, 0.5, 1], "values": [0.4, 1.0]}}])"});
        FAIL("expected an ellipticity error");
    } catch (const EllipticityError& e) {
        CHECK(e.time() >= 0.5);
    }
}

TEST_CASE("overrides") {
    const auto cfg = parse_config(kBase, {"solver.theta=1", "experiment.kind=average",
                                          "output.dir=elsewhere", "experiment.seed=9"});
    CHECK(cfg.solve.theta == 1.0);
    CHECK(cfg.kind == "average");
    CHECK(cfg.output_dir == "elsewhere");
    CHECK(cfg.seed == 9);
}

TEST_CASE("the echoed config reproduces the effective config") {
    const auto a = parse_config(kBase, {"solver.dt=0.01", "experiment.seed=3"});
    const auto b = parse_config(a.effective_json, {});
    CHECK(a.effective_json == b.effective_json);
    CHECK(b.solve.dt_target == 0.01);
    CHECK(b.seed == 3);
}

TEST_CASE("market time windows are shifted to start at zero") {
    const auto cfg = parse_config(kBase, {"model.tau0=0.5", "solver.store_times=[0.75]"});
    REQUIRE(cfg.model);
    CHECK(cfg.problem.maturity == 0.5);
    CHECK(cfg.model->start() == 0.0);
    CHECK(cfg.model->r()(0.1) == 0.04);
}

}  // TEST_SUITE
