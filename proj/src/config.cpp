#include "tdbs/config.hpp"

#include "tdbs/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace tdbs {

namespace {

using nlohmann::json;

/// Typed access to one JSON object; rejects keys outside `allowed`.
class Block {
public:
    Block(const json& j, std::string path, std::initializer_list<const char*> allowed)
        : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [key, value] : j_.items()) {
            if (!ok.count(key)) throw ConfigError("unknown field '" + field(key) + "'");
        }
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    const json& at(const char* key) const {
        if (!has(key)) throw ConfigError("missing field '" + field(key) + "'");
        return j_.at(key);
    }
    std::string field(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    double number(const char* key, std::optional<double> fallback = std::nullopt) const {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError("missing field '" + field(key) + "'");
        }
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError("field '" + field(key) + "' must be a number");
        return v.get<double>();
    }
    std::uint64_t count(const char* key, std::optional<std::uint64_t> fallback = std::nullopt) const {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError("missing field '" + field(key) + "'");
        }
        const json& v = j_.at(key);
        if (!v.is_number_unsigned()) {
            throw ConfigError("field '" + field(key) + "' must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }
    bool flag(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError("field '" + field(key) + "' must be true or false");
        return v.get<bool>();
    }
    std::string text(const char* key, std::optional<std::string> fallback = std::nullopt) const {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError("missing field '" + field(key) + "'");
        }
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError("field '" + field(key) + "' must be a string");
        return v.get<std::string>();
    }
    std::vector<double> numbers(const char* key) const {
        const json& v = at(key);
        if (!v.is_array()) throw ConfigError("field '" + field(key) + "' must be an array");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError("field '" + field(key) + "' must hold numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    std::vector<std::size_t> counts(const char* key) const {
        const json& v = at(key);
        if (!v.is_array()) throw ConfigError("field '" + field(key) + "' must be an array");
        std::vector<std::size_t> out;
        for (const auto& e : v) {
            if (!e.is_number_unsigned()) {
                throw ConfigError("field '" + field(key) + "' must hold non-negative integers");
            }
            out.push_back(e.get<std::size_t>());
        }
        return out;
    }

private:
    std::string where() const { return path_.empty() ? "document" : "'" + path_ + "'"; }

    const json& j_;
    std::string path_;
};

const json& empty_object() {
    static const json e = json::object();
    return e;
}

const json& sub(const json& root, const char* key) {
    return root.contains(key) && !root.at(key).is_null() ? root.at(key) : empty_object();
}

CoefficientSchedule parse_schedule(const json& j, const std::string& path, double t0, double t1) {
    if (j.is_number()) return CoefficientSchedule::constant(j.get<double>(), t0, t1);
    if (j.is_object()) {
        Block b(j, path, {"breaks", "values"});
        const auto breaks = b.numbers("breaks");
        const auto values = b.numbers("values");
        return CoefficientSchedule::piecewise_constant(breaks, values);
    }
    if (!j.is_array() || j.empty()) {
        throw ConfigError("field '" + path + "' must be a number, a segment list or {breaks, values}");
    }
    std::vector<Segment> segs;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const std::string p = path + "." + std::to_string(k);
        Block b(j.at(k), p, {"t_start", "t_end", "kind", "value", "v_start", "v_end"});
        Segment s;
        s.t_start = b.number("t_start");
        s.t_end = b.number("t_end");
        const std::string kind = b.text("kind", "const");
        if (kind == "const") {
            s.profile = Profile::constant;
            s.v_start = s.v_end = b.number("value");
        } else if (kind == "linear") {
            s.profile = Profile::linear;
            s.v_start = b.number("v_start");
            s.v_end = b.number("v_end");
        } else {
            throw ConfigError("field '" + p + ".kind' must be \"const\" or \"linear\"");
        }
        segs.push_back(s);
    }
    try {
        return CoefficientSchedule(std::move(segs));
    } catch (const Error& e) {
        throw ConfigError("field '" + path + "': " + e.what());
    }
}

void apply_override(json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    json* node = &root;
    std::size_t pos = 0;
    for (;;) {
        const auto dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        const bool index = std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; });
        json* next = nullptr;
        if (node->is_array() && index) {
            const auto i = std::stoul(part);
            if (i >= node->size()) throw ConfigError("override key '" + key + "' indexes past the array");
            next = &(*node)[i];
        } else {
            if (node->is_null()) *node = json::object();
            if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a value");
            next = &(*node)[part];
        }
        if (dot == std::string::npos) {
            *next = value;
            return;
        }
        node = next;
        pos = dot + 1;
    }
}

Region parse_region(const std::string& s, const std::string& field) {
    if (s == "interior") return Region::interior;
    if (s == "core") return Region::core;
    throw ConfigError("field '" + field + "' must be \"interior\" or \"core\"");
}

PayoffSpec parse_payoff(const json& j) {
    Block b(j, "payoff", {"kind", "strike", "asset"});
    const std::string kind = b.text("kind", "basket_put");
    const double strike = b.number("strike");
    if (kind == "basket_put") return PayoffSpec::basket_put(strike);
    if (kind == "basket_call") return PayoffSpec::basket_call(strike);
    if (kind == "gmmb") return PayoffSpec::gmmb(strike);
    if (kind == "vanilla_put") return PayoffSpec::vanilla_put(strike, b.count("asset", 0));
    throw ConfigError("field 'payoff.kind' must be basket_put, basket_call, vanilla_put or gmmb");
}

const std::set<std::string> kKinds = {"average", "solve",   "verify-theorem2", "verify-lemma5",
                                      "mc",      "fourier", "semigroup",       "energy"};

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded()) throw ConfigError("config is not valid JSON");
    for (const auto& o : overrides) apply_override(root, o);
    Block top(root, "", {"model", "domain", "payoff", "solver", "experiment", "output"});

    ExperimentConfig cfg;
    cfg.effective_json = root.dump(2) + "\n";

    const json& ej = sub(root, "experiment");
    Block exp(ej, "experiment",
              {"kind", "seed", "tolerance", "region", "averaging", "levels", "lemma5_n", "mc",
               "semigroup", "oracle"});
    cfg.kind = exp.text("kind");
    if (!kKinds.count(cfg.kind)) throw ConfigError("field 'experiment.kind' has unknown value '" + cfg.kind + "'");
    cfg.seed = exp.count("seed", 20240601);

    Block out(sub(root, "output"), "output", {"dir"});
    cfg.output_dir = out.text("dir", "out");

    // Solver.
    Block sv(sub(root, "solver"), "solver",
             {"theta", "dt", "nodes", "rannacher_steps", "tolerance", "max_iterations", "store_times"});
    cfg.solve.theta = sv.number("theta", 0.5);
    cfg.solve.dt_target = sv.number("dt", 1.0 / 128.0);
    cfg.solve.rannacher_steps = sv.count("rannacher_steps", 4);
    cfg.solve.tolerance = sv.number("tolerance", 1e-10);
    cfg.solve.max_iterations = sv.count("max_iterations", 5000);
    try {
        cfg.solve.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("solver: ") + e.what());
    }

    // Semigroup suite needs no market model.
    {
        Block sg(sub(ej, "semigroup"), "experiment.semigroup",
                 {"dimension", "seeds", "identity_tolerance", "witness_floor", "bound_lambdas",
                  "bound_time", "rate_lambdas", "rate_u0", "rate_mu", "rate_time", "slope_tolerance", "segments",
                  "composition_tolerance", "probes"});
        auto& s = cfg.semigroup;
        s.seed = cfg.seed;
        s.dimension = sg.count("dimension", s.dimension);
        s.seeds = sg.count("seeds", s.seeds);
        s.identity_tolerance = sg.number("identity_tolerance", s.identity_tolerance);
        s.witness_floor = sg.number("witness_floor", s.witness_floor);
        if (sg.has("bound_lambdas")) s.bound_lambdas = sg.numbers("bound_lambdas");
        s.bound_time = sg.number("bound_time", s.bound_time);
        if (sg.has("rate_lambdas")) s.rate_lambdas = sg.numbers("rate_lambdas");
        const std::string u0 = sg.text("rate_u0", "critical");
        if (u0 != "critical" && u0 != "random") {
            throw ConfigError("field 'experiment.semigroup.rate_u0' must be \"critical\" or \"random\"");
        }
        s.rate_critical_u0 = u0 == "critical";
        s.rate_mu = sg.number("rate_mu", s.rate_mu);
        s.rate_time = sg.number("rate_time", s.rate_time);
        s.slope_tolerance = sg.number("slope_tolerance", s.slope_tolerance);
        s.segments = sg.count("segments", s.segments);
        s.composition_tolerance = sg.number("composition_tolerance", s.composition_tolerance);
        s.probes = sg.count("probes", s.probes);
    }

    // Monte Carlo.
    {
        Block mc(sub(ej, "mc"), "experiment.mc",
                 {"paths", "steps_per_year", "antithetic", "batch_size", "compare_pde", "moments"});
        cfg.mc.paths = mc.count("paths", cfg.mc.paths);
        cfg.mc.steps_per_year = mc.count("steps_per_year", cfg.mc.steps_per_year);
        cfg.mc.antithetic = mc.flag("antithetic", false);
        cfg.mc.batch_size = mc.count("batch_size", cfg.mc.batch_size);
        cfg.mc.seed = cfg.seed;
        cfg.mc_compare_pde = mc.flag("compare_pde", false);
        cfg.mc_moments = mc.flag("moments", false);
        try {
            cfg.mc.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("experiment.") + e.what());
        }
    }

    if (cfg.kind == "semigroup") return cfg;

    // Market model.
    const json& mj = sub(root, "model");
    Block mb(mj, "model", {"n", "tau0", "maturity", "r", "m", "d", "sigma", "rho"});
    const std::size_t n = mb.count("n", 1);
    if (n == 0) throw ConfigError("field 'model.n' must be positive");
    cfg.tau0 = mb.number("tau0", 0.0);
    cfg.maturity = mb.number("maturity");
    if (!(cfg.maturity > cfg.tau0)) throw ConfigError("field 'model.maturity' must exceed model.tau0");
    const double t0 = cfg.tau0;
    const double t1 = cfg.maturity;

    auto schedule = [&](const char* key, std::optional<double> fallback) {
        if (!mb.has(key)) {
            if (!fallback) throw ConfigError("missing field '" + mb.field(key) + "'");
            return CoefficientSchedule::constant(*fallback, t0, t1);
        }
        return parse_schedule(mb.at(key), mb.field(key), t0, t1);
    };
    // Schedules are written in market time; keep the window [tau0, T] and move tau0 to 0.
    auto window = [&](const CoefficientSchedule& s, const std::string& field) {
        try {
            return s.restricted(t0, t1).shifted(-t0);
        } catch (const Error& e) {
            throw ConfigError("field '" + field + "' does not cover [tau0, T]: " + e.what());
        }
    };
    const auto r = window(schedule("r", std::nullopt), "model.r");
    const auto m = window(schedule("m", 0.0), "model.m");
    const auto d = window(schedule("d", 0.0), "model.d");

    const json& sj = mb.at("sigma");
    std::vector<CoefficientSchedule> sigma;
    if (!sj.is_array() || sj.size() != n) {
        throw ConfigError("field 'model.sigma' must be an array of " + std::to_string(n) + " schedules");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::string f = "model.sigma." + std::to_string(i);
        sigma.push_back(window(parse_schedule(sj.at(i), f, t0, t1), f));
    }

    std::vector<CoefficientSchedule> rho;
    if (n > 1) {
        std::vector<std::optional<CoefficientSchedule>> slots(n * n);
        if (mb.has("rho")) {
            const json& rj = mb.at("rho");
            if (!rj.is_array()) throw ConfigError("field 'model.rho' must be an array of {i, j, schedule}");
            for (std::size_t k = 0; k < rj.size(); ++k) {
                const std::string p = "model.rho." + std::to_string(k);
                Block e(rj.at(k), p, {"i", "j", "schedule"});
                const auto i = e.count("i");
                const auto j = e.count("j");
                if (i >= n || j >= n || i == j) {
                    throw ConfigError("field '" + p + "' must name two distinct assets below n");
                }
                const auto s = window(parse_schedule(e.at("schedule"), p + ".schedule", t0, t1), p);
                slots[i * n + j] = s;
                slots[j * n + i] = s;
            }
        }
        const double span = t1 - t0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const auto& s = slots[i * n + j];
                rho.push_back(s ? *s : CoefficientSchedule::constant(i == j ? 1.0 : 0.0, 0.0, span));
            }
        }
    }
    try {
        cfg.model.emplace(r, m, d, std::move(sigma), std::move(rho));
    } catch (const EllipticityError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }

    // Problem.
    const double horizon = t1 - t0;
    cfg.problem.maturity = horizon;
    Block db(sub(root, "domain"), "domain", {"lower", "upper", "sum_barrier", "spot"});
    if (db.has("lower")) cfg.problem.domain.lower = db.numbers("lower");
    if (db.has("upper")) cfg.problem.domain.upper = db.numbers("upper");
    if (db.has("sum_barrier")) cfg.problem.domain.sum_barrier = db.number("sum_barrier");
    if (db.has("spot")) cfg.spot = db.numbers("spot");
    const bool needs_domain = cfg.kind == "solve" || cfg.kind == "verify-theorem2" ||
                              cfg.kind == "verify-lemma5" || cfg.kind == "energy" ||
                              (cfg.kind == "mc");
    if (needs_domain) {
        if (cfg.problem.domain.lower.size() != n || cfg.problem.domain.upper.size() != n) {
            throw ConfigError("fields 'domain.lower' and 'domain.upper' need " + std::to_string(n) + " entries");
        }
        try {
            cfg.problem.domain.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("domain: ") + e.what());
        }
        cfg.problem.payoff = parse_payoff(sub(root, "payoff"));
    }
    if (!cfg.spot.empty() && cfg.spot.size() != n) {
        throw ConfigError("field 'domain.spot' needs " + std::to_string(n) + " entries");
    }
    if (cfg.kind == "mc" && cfg.spot.empty()) throw ConfigError("missing field 'domain.spot'");

    if (sv.has("nodes")) {
        cfg.problem.nodes_per_axis = sv.counts("nodes");
    } else {
        cfg.problem.nodes_per_axis.assign(n, n == 1 ? 161 : 81);
    }
    if (cfg.problem.nodes_per_axis.size() != n) {
        throw ConfigError("field 'solver.nodes' needs " + std::to_string(n) + " entries");
    }
    if (sv.has("store_times")) {
        for (double tau : sv.numbers("store_times")) {
            if (tau < t0 || tau > t1) throw ConfigError("field 'solver.store_times' leaves [tau0, T]");
            cfg.problem.store_times.push_back(t1 - tau);
        }
    }

    // Experiment specifics.
    cfg.theorem2.tolerance = exp.number("tolerance", 1e-3);
    cfg.theorem2.region = parse_region(exp.text("region", "interior"), "experiment.region");
    const std::string averaging = exp.text("averaging", "rms");
    if (averaging == "rms") {
        cfg.theorem2.averaging = Averaging::rms;
    } else if (averaging == "arithmetic") {
        cfg.theorem2.averaging = Averaging::arithmetic;
    } else {
        throw ConfigError("field 'experiment.averaging' must be \"rms\" or \"arithmetic\"");
    }
    if (exp.has("levels")) {
        const json& lj = exp.at("levels");
        if (!lj.is_array()) throw ConfigError("field 'experiment.levels' must be an array");
        for (std::size_t k = 0; k < lj.size(); ++k) {
            Block lb(lj.at(k), "experiment.levels." + std::to_string(k), {"nodes", "dt"});
            RefinementLevel level;
            level.nodes_per_axis = lb.counts("nodes");
            level.dt = lb.number("dt");
            if (level.nodes_per_axis.size() != n) {
                throw ConfigError("field 'experiment.levels." + std::to_string(k) +
                                  ".nodes' needs " + std::to_string(n) + " entries");
            }
            cfg.levels.push_back(std::move(level));
        }
    } else if (cfg.kind == "verify-theorem2") {
        for (std::size_t k = 0; k < 3; ++k) {
            RefinementLevel level;
            for (std::size_t nodes : cfg.problem.nodes_per_axis) {
                level.nodes_per_axis.push_back(((nodes - 1) << k) + 1);
            }
            level.dt = cfg.solve.dt_target / static_cast<double>(1u << k);
            cfg.levels.push_back(std::move(level));
        }
    }
    if (cfg.kind == "verify-theorem2" && cfg.levels.size() < 3) {
        throw ConfigError("field 'experiment.levels' needs at least three levels");
    }
    cfg.lemma5_pieces = exp.has("lemma5_n") ? exp.counts("lemma5_n")
                                            : std::vector<std::size_t>{2, 4, 8, 16};

    Block ob(sub(ej, "oracle"), "experiment.oracle",
             {"strike", "closed_form_nodes", "fourier_nodes", "butterfly_wing", "tolerance",
              "multiplier_tolerance", "barrier_relative", "stderr_multiple"});
    auto& o = cfg.oracle;
    o.maturity = horizon;
    o.strike = ob.number("strike", o.strike);
    o.closed_form_nodes = ob.count("closed_form_nodes", o.closed_form_nodes);
    if (ob.has("fourier_nodes")) o.fourier_nodes = ob.counts("fourier_nodes");
    o.butterfly_wing = ob.number("butterfly_wing", o.butterfly_wing);
    o.pde_tolerance = ob.number("tolerance", o.pde_tolerance);
    o.multiplier_tolerance = ob.number("multiplier_tolerance", o.multiplier_tolerance);
    o.barrier_relative = ob.number("barrier_relative", o.barrier_relative);
    o.stderr_multiple = ob.number("stderr_multiple", o.stderr_multiple);
    o.solve = cfg.solve;
    o.mc = cfg.mc;
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), overrides);
}

}  // namespace tdbs
