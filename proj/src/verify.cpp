#include "tdbs/verify.hpp"

#include "tdbs/discrete_operator.hpp"
#include "tdbs/errors.hpp"
#include "tdbs/semigroup_lab.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace tdbs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSlack = 1e-12;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

std::string join_nodes(const std::vector<std::size_t>& nodes) {
    std::string s;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(nodes[i]);
    }
    return s;
}

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(n);
    for (auto& x : v) x = normal(rng);
    return v;
}

}  // namespace

void VerificationReport::finalize() {
    verdict = !levels.empty() &&
              std::all_of(levels.begin(), levels.end(), [](const LevelRecord& l) { return l.pass; });
}

void write_report_text(std::ostream& os, const VerificationReport& report) {
    os << "experiment: " << report.id << "\n";
    os << "verdict: " << (report.verdict ? "pass" : "fail") << "\n";
    for (const auto& l : report.levels) {
        os << "  [" << (l.pass ? "pass" : "FAIL") << "] " << l.label;
        if (!l.nodes.empty()) os << "  nodes=" << join_nodes(l.nodes);
        if (l.dt > 0.0) os << "  dt=" << fmt(l.dt);
        os << "  measured=" << fmt(l.measured, 10) << "  tolerance=" << fmt(l.tolerance, 10);
        if (!l.note.empty()) os << "  (" << l.note << ")";
        os << "\n";
    }
    for (const auto& n : report.notes) os << "note: " << n << "\n";
}

void write_report_csv(std::ostream& os, const VerificationReport& report) {
    const auto old_precision = os.precision(17);
    os << "experiment,label,nodes,dt,measured,tolerance,pass,note\n";
    for (const auto& l : report.levels) {
        os << report.id << "," << l.label << "," << join_nodes(l.nodes) << "," << l.dt << ","
           << l.measured << "," << l.tolerance << "," << (l.pass ? 1 : 0) << ",\"" << l.note
           << "\"\n";
    }
    os.precision(old_precision);
}

double relative_l2(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Grid& grid,
                   Region region) {
    if (static_cast<std::size_t>(u.size()) != grid.size() ||
        static_cast<std::size_t>(v.size()) != grid.size()) {
        throw ShapeError("relative_l2 expects full-grid fields");
    }
    const auto mask = grid.region_mask(region);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!mask[k]) continue;
        const auto i = static_cast<Eigen::Index>(k);
        const double d = u(i) - v(i);
        num += d * d;
        den += u(i) * u(i);
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : kInf;
    return std::sqrt(num / den);
}

// ---------------------------------------------------------------------------

OperatorCoefficients arithmetic_mean_coefficients(const MarketModel& model, double t0,
                                                  double t1) {
    const std::size_t n = model.dimension();
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::VectorXd sigma(ni);
    Eigen::MatrixXd rho(ni, ni);
    for (std::size_t i = 0; i < n; ++i) {
        sigma(static_cast<Eigen::Index>(i)) = average_scalar(model.sigma(i), t0, t1);
        for (std::size_t j = 0; j < n; ++j) {
            rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                i == j ? 1.0 : average_scalar(model.rho(i, j), t0, t1);
        }
    }
    return market_to_operator(average_scalar(model.r(), t0, t1),
                              average_scalar(model.m(), t0, t1),
                              average_scalar(model.d(), t0, t1), sigma, rho);
}

VerificationReport theorem2_check(const MarketModel& model, const ProblemSpec& problem,
                                  const std::vector<RefinementLevel>& levels,
                                  const SolveConfig& config, const Theorem2Options& options) {
    const auto start = Clock::now();
    if (levels.size() < 3) throw ConfigError("theorem2 check needs at least three levels");
    VerificationReport report;
    report.id = options.averaging == Averaging::rms ? "theorem2" : "theorem2-arithmetic-control";

    const double T = problem.maturity;
    double previous = kInf;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        ProblemSpec p = problem;
        p.nodes_per_axis = levels[k].nodes_per_axis;
        SolveConfig c = config;
        c.dt_target = levels[k].dt;

        SolutionField u;
        SolutionField ubar;
        try {
            u = solve_time_dependent(model, p, c);
            if (options.averaging == Averaging::rms) {
                ubar = solve_averaged(model, p, c);
            } else {
                ubar = solve_constant(arithmetic_mean_coefficients(model, 0.0, T), model, p, c);
            }
        } catch (const SolverError& e) {
            throw SolverError("level " + std::to_string(k) + ": " + e.what(), e.residual());
        }
        const double residual =
            relative_l2(u.final_values(), ubar.final_values(), *u.grid, options.region);

        LevelRecord rec;
        rec.label = "level " + std::to_string(k);
        rec.nodes = levels[k].nodes_per_axis;
        rec.dt = levels[k].dt;
        rec.measured = residual;
        const bool finest = k + 1 == levels.size();
        rec.tolerance = finest ? std::min(previous, options.tolerance) : previous;
        rec.pass = residual <= rec.tolerance;
        rec.note = "steps=" + std::to_string(u.summary.steps);
        if (std::isfinite(previous) && residual > 0.0 && previous > 0.0) {
            rec.note += " observed_order=" + fmt(std::log2(previous / residual), 4);
        }
        report.levels.push_back(rec);
        previous = residual;
    }
    report.notes.push_back("residual = |u(T) - ubar(T)| / |u(T)| on the " +
                           std::string(options.region == Region::core ? "core" : "full interior") +
                           "; tau0 = 0, t = T - tau");
    report.finalize();
    report.wall_seconds = seconds_since(start);
    return report;
}

MarketModel sample_left(const MarketModel& model, double maturity, std::size_t pieces) {
    if (pieces == 0) throw InvalidIntervalError("sample_left needs at least one piece");
    if (model.start() > 1e-12 || model.end() < maturity - 1e-12) {
        throw OutOfRangeError("model does not cover [0, T]");
    }
    const auto nd = static_cast<double>(pieces);
    std::vector<double> breaks(pieces + 1);
    for (std::size_t k = 0; k <= pieces; ++k) {
        breaks[k] = maturity * static_cast<double>(k) / nd;
    }
    breaks.back() = maturity;

    // tau-piece [breaks[j], breaks[j+1]] is solver-time piece k = pieces - 1 - j,
    // whose left end t_k = T - breaks[j+1] maps to tau = breaks[j+1].
    auto freeze = [&](const CoefficientSchedule& s) {
        std::vector<double> values(pieces);
        for (std::size_t j = 0; j < pieces; ++j) values[j] = s.left_limit(breaks[j + 1]);
        return CoefficientSchedule::piecewise_constant(breaks, values);
    };
    std::vector<CoefficientSchedule> sigma;
    for (const auto& s : model.sigmas()) sigma.push_back(freeze(s));
    std::vector<CoefficientSchedule> rho;
    for (const auto& s : model.rhos()) rho.push_back(freeze(s));
    return MarketModel(freeze(model.r()), freeze(model.m()), freeze(model.d()), std::move(sigma),
                       std::move(rho));
}

VerificationReport lemma5_check(const MarketModel& model, const ProblemSpec& problem,
                                const std::vector<std::size_t>& pieces,
                                const SolveConfig& config) {
    const auto start = Clock::now();
    if (pieces.empty()) throw ConfigError("lemma5 check needs a list of N");
    for (std::size_t k = 1; k < pieces.size(); ++k) {
        if (pieces[k] <= pieces[k - 1]) throw ConfigError("lemma5 N list must increase");
    }
    VerificationReport report;
    report.id = "lemma5";
    const double T = problem.maturity;

    // Every N shares one partition: all sampling cuts are store times.
    ProblemSpec p = problem;
    const std::size_t finest = pieces.back();
    for (std::size_t k = 1; k < finest; ++k) {
        p.store_times.push_back(T * static_cast<double>(k) / static_cast<double>(finest));
    }
    for (std::size_t n : pieces) {
        if (finest % n != 0) throw ConfigError("lemma5 N values must divide the largest N");
    }

    const SolutionField v = solve_time_dependent(model, p, config);
    double previous = kInf;
    for (std::size_t n : pieces) {
        const MarketModel sampled = sample_left(model, T, n);
        const SolutionField vn = solve_time_dependent(sampled, p, config);
        if (vn.times.size() != v.times.size()) {
            throw ShapeError("lemma5: stored times differ between solves");
        }
        double worst = 0.0;
        for (std::size_t k = 0; k < v.times.size(); ++k) {
            worst = std::max(worst, relative_l2(v.values[k], vn.values[k], *v.grid,
                                                Region::interior));
        }
        LevelRecord rec;
        rec.label = "N=" + std::to_string(n);
        rec.nodes = p.nodes_per_axis;
        rec.dt = config.dt_target;
        rec.measured = worst;
        rec.tolerance = previous;
        rec.pass = worst <= previous || worst <= kSlack;
        if (std::isfinite(previous) && previous > 0.0) {
            rec.note = "ratio=" + fmt(worst / previous, 4);
        }
        report.levels.push_back(rec);
        previous = worst;
    }
    report.notes.push_back("measured = max over stored times of |v - v_N| / |v|");
    report.finalize();
    report.wall_seconds = seconds_since(start);
    return report;
}

VerificationReport energy_check(const MarketModel& model, const ProblemSpec& problem,
                                const SolveConfig& config) {
    const auto start = Clock::now();
    VerificationReport report;
    report.id = "energy";
    SolveConfig c = config;
    c.store_every_step = true;
    const SolutionField u = solve_time_dependent(model, problem, c);

    std::vector<double> cuts = breakpoints_in_t(model, problem.maturity);
    cuts.insert(cuts.end(), problem.store_times.begin(), problem.store_times.end());
    const auto steps = make_partition(cuts, problem.maturity, c);
    const auto rule = time_dependent_rule(model, problem.maturity);

    std::vector<OperatorCoefficients> seen;
    double c1 = 0.0;
    bool symmetric = true;
    for (const auto& s : steps) {
        OperatorCoefficients coeffs = rule(s);
        if (std::find(seen.begin(), seen.end(), coeffs) != seen.end()) continue;
        symmetric = symmetric && coeffs.b.isZero(1e-14) && coeffs.q >= 0.0;
        c1 = std::max(c1, monotonicity_shift(assemble(coeffs, u.grid)));
        seen.push_back(std::move(coeffs));
    }

    const double g_norm = u.values.front().norm();
    double previous = g_norm;
    for (std::size_t k = 1; k < u.times.size(); ++k) {
        const double t = u.times[k];
        const double norm = u.values[k].norm();
        LevelRecord rec;
        rec.label = "t=" + fmt(t, 8);
        rec.measured = norm;
        const double growth = std::exp(1.1 * c1 * t) * g_norm;
        rec.tolerance = symmetric ? std::min(growth, previous) : growth;
        rec.pass = norm <= rec.tolerance * (1.0 + kSlack);
        report.levels.push_back(rec);
        previous = norm;
    }
    report.notes.push_back("c1 = " + fmt(c1, 10) + " over " + std::to_string(seen.size()) +
                           " distinct operators");
    report.notes.push_back(symmetric ? "symmetric case: non-increase enforced at every step"
                                     : "general case: bounded growth e^{1.1 c1 t} |g|");
    report.finalize();
    report.wall_seconds = seconds_since(start);
    return report;
}

// ---------------------------------------------------------------------------

DomainSpec wide_box(const MarketModel& model, std::span<const double> centre, double maturity,
                    double margin_sd, double support) {
    const std::size_t n = model.dimension();
    if (centre.size() != n) throw ShapeError("box centre has the wrong dimension");
    DomainSpec d;
    for (std::size_t i = 0; i < n; ++i) {
        const double sd = average_vol(model.sigma(i), 0.0, maturity) * std::sqrt(maturity);
        const double w = margin_sd * sd + support;
        d.lower.push_back(centre[i] * std::exp(-w));
        d.upper.push_back(centre[i] * std::exp(w));
    }
    return d;
}

namespace {

double tent(double y, double strike, double wing) {
    return std::max(0.0, wing - std::abs(y - strike));
}

}  // namespace

std::vector<double> butterfly_values(const Grid& grid, double strike, double wing) {
    std::vector<double> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double v = 1.0;
        for (double x : grid.point(k)) v *= tent(std::exp(x), strike, wing);
        out[k] = v;
    }
    return out;
}

LevelRecord pde_vs_closed_form(const MarketModel& model, const OracleSetup& setup) {
    if (model.dimension() != 1) throw ShapeError("closed-form comparison is one-dimensional");
    const double T = setup.maturity;
    const std::array<double, 1> centre{setup.strike};
    ProblemSpec p;
    p.domain = wide_box(model, centre, T);
    p.payoff = PayoffSpec::vanilla_put(setup.strike, 0);
    p.maturity = T;
    p.nodes_per_axis = {setup.closed_form_nodes};
    const SolutionField u = solve_time_dependent(model, p, setup.solve);

    const auto avg = averaged_operator_coeffs(model, 0.0, T);
    const Grid& grid = *u.grid;
    Eigen::VectorXd oracle = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double y = std::exp(grid.point(k)[0]);
        oracle(static_cast<Eigen::Index>(k)) =
            bs_closed_form(y, setup.strike, avg.r_bar, avg.m_bar, avg.d_bar, avg.sigma_bar(0), T,
                           OptionKind::put);
    }
    LevelRecord rec;
    rec.label = "pde vs closed form";
    rec.nodes = p.nodes_per_axis;
    rec.dt = setup.solve.dt_target;
    rec.measured = relative_l2(oracle, u.final_values(), grid, Region::core);
    rec.tolerance = setup.pde_tolerance;
    rec.pass = rec.measured <= rec.tolerance;
    const std::array<double, 1> atm{std::log(setup.strike)};
    rec.note = "atm pde=" + fmt(grid.interpolate(u.final_values(), atm), 10) +
               " closed=" +
               fmt(bs_closed_form(setup.strike, setup.strike, avg.r_bar, avg.m_bar, avg.d_bar,
                                  avg.sigma_bar(0), T, OptionKind::put),
                   10) +
               " sigma_bar=" + fmt(avg.sigma_bar(0), 10);
    return rec;
}

namespace {

struct FourierCase {
    ProblemSpec problem;
    Grid grid;
    FourierGrid fgrid;
};

FourierCase fourier_case(const MarketModel& model, const OracleSetup& setup) {
    const std::size_t n = model.dimension();
    if (n == 0 || n > 2) throw ShapeError("Fourier comparison supports one or two assets");
    if (setup.fourier_nodes.size() < n) throw ConfigError("fourier_nodes missing for dimension");
    const double T = setup.maturity;
    const std::vector<double> centre(n, setup.strike);
    const double support = std::log(setup.strike / (setup.strike - setup.butterfly_wing));

    ProblemSpec p;
    p.domain = wide_box(model, centre, T, 8.0, support);
    p.maturity = T;
    p.nodes_per_axis.assign(n, setup.fourier_nodes[n - 1]);
    Grid grid = build_grid(p.domain, p.nodes_per_axis);
    p.payoff = PayoffSpec::custom(butterfly_values(grid, setup.strike, setup.butterfly_wing));

    FourierGrid f;
    for (std::size_t i = 0; i < n; ++i) {
        f.lower.push_back(grid.lower(i));
        f.spacing.push_back(grid.spacing(i));
        f.nodes.push_back(grid.nodes(i) - 1);
    }
    return {std::move(p), std::move(grid), std::move(f)};
}

}  // namespace

LevelRecord pde_vs_fourier(const MarketModel& model, const OracleSetup& setup,
                           FourierGrid* grid_out, Eigen::VectorXd* field_out) {
    const FourierCase fc = fourier_case(model, setup);
    const std::size_t n = model.dimension();
    const SolutionField u = solve_time_dependent(model, fc.problem, setup.solve);

    Eigen::VectorXd g(static_cast<Eigen::Index>(fc.fgrid.size()));
    for (std::size_t k = 0; k < fc.fgrid.size(); ++k) {
        double v = 1.0;
        for (double x : fc.fgrid.point(k)) v *= tent(std::exp(x), setup.strike, setup.butterfly_wing);
        g(static_cast<Eigen::Index>(k)) = v;
    }
    const FourierResult fr = fourier_solve(model, fc.fgrid, g, 0.0, setup.maturity);
    if (grid_out) *grid_out = fc.fgrid;
    if (field_out) *field_out = fr.values;

    const Grid& grid = *u.grid;
    Eigen::VectorXd oracle(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto multi = grid.multi_index(k);
        std::size_t flat = 0;
        std::size_t stride = 1;
        for (std::size_t i = 0; i < n; ++i) {
            flat += (multi[i] % fc.fgrid.nodes[i]) * stride;
            stride *= fc.fgrid.nodes[i];
        }
        oracle(static_cast<Eigen::Index>(k)) = fr.values(static_cast<Eigen::Index>(flat));
    }

    LevelRecord rec;
    rec.label = "pde vs fourier n=" + std::to_string(n);
    rec.nodes = fc.problem.nodes_per_axis;
    rec.dt = setup.solve.dt_target;
    rec.measured = relative_l2(oracle, u.final_values(), grid, Region::core);
    rec.tolerance = setup.pde_tolerance;
    rec.pass = rec.measured <= rec.tolerance;
    rec.note = "imaginary residue=" + fmt(fr.imaginary_residue, 3) +
               " edge mass=" + fmt(fr.edge_mass, 3);
    return rec;
}

LevelRecord fourier_multiplier_check(const MarketModel& model, const OracleSetup& setup) {
    const FourierCase fc = fourier_case(model, setup);
    LevelRecord rec;
    rec.label = "fourier multiplier identity n=" + std::to_string(model.dimension());
    rec.nodes = fc.fgrid.nodes;
    rec.measured = multiplier_identity_gap(model, fc.fgrid, 0.0, setup.maturity);
    rec.tolerance = setup.multiplier_tolerance;
    rec.pass = rec.measured <= rec.tolerance;
    return rec;
}

LevelRecord pde_vs_mc(const MarketModel& model, const ProblemSpec& problem,
                      std::span<const double> spot, const OracleSetup& setup, bool barrier) {
    const SolutionField u = solve_time_dependent(model, problem, setup.solve);
    const auto x = log_transform(spot);
    const double pde = u.grid->interpolate(u.final_values(), x);
    const std::optional<DomainSpec> domain =
        barrier ? std::optional<DomainSpec>(problem.domain) : std::nullopt;
    const MCResult mc = price_mc(model, spot, 0.0, problem.maturity, domain, problem.payoff, setup.mc);

    LevelRecord rec;
    rec.label = barrier ? "pde vs mc (knock-out)" : "pde vs mc (barrier-free)";
    rec.nodes = problem.nodes_per_axis;
    rec.dt = setup.solve.dt_target;
    rec.measured = std::abs(pde - mc.price);
    rec.tolerance = setup.stderr_multiple * mc.std_error;
    if (barrier) rec.tolerance = std::max(rec.tolerance, setup.barrier_relative * std::abs(mc.price));
    rec.pass = rec.measured <= rec.tolerance;
    rec.note = "pde=" + fmt(pde, 10) + " mc=" + fmt(mc.price, 10) + " stderr=" +
               fmt(mc.std_error, 4) + " paths=" + std::to_string(mc.paths) +
               " knocked_out=" + fmt(mc.knockout_fraction, 4);
    return rec;
}

VerificationReport mc_moment_check(const MarketModel& model, std::span<const double> y0,
                                   double maturity, const MCConfig& cfg, double stderr_multiple) {
    const auto start = Clock::now();
    const auto avg = averaged_operator_coeffs(model, 0.0, maturity);
    const auto x0 = log_transform(y0);
    const auto n = static_cast<Eigen::Index>(y0.size());
    Eigen::VectorXd mean_exact(n);
    for (Eigen::Index i = 0; i < n; ++i) mean_exact(i) = x0[i] - maturity * avg.b_bar(i);
    const Eigen::MatrixXd cov_exact = 2.0 * maturity * avg.a_bar;

    const TerminalSample sample = simulate_terminal(model, y0, 0.0, maturity, std::nullopt, cfg);
    const Eigen::MatrixXd& xs = sample.log_terminal;
    const double paths = static_cast<double>(xs.cols());
    const Eigen::VectorXd mean = xs.rowwise().mean();
    const Eigen::MatrixXd centred = xs.colwise() - mean;

    VerificationReport report;
    report.id = "mc-moments";
    auto add = [&](std::string label, double measured, double exact, double se) {
        LevelRecord rec;
        rec.label = std::move(label);
        rec.measured = std::abs(measured - exact);
        rec.tolerance = stderr_multiple * se;
        rec.pass = rec.measured <= rec.tolerance;
        rec.note = "sample=" + fmt(measured, 10) + " averaged=" + fmt(exact, 10) +
                   " stderr=" + fmt(se, 4);
        report.levels.push_back(std::move(rec));
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        const double var = centred.row(i).squaredNorm() / (paths - 1.0);
        add("log-mean[" + std::to_string(i) + "]", mean(i), mean_exact(i), std::sqrt(var / paths));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const Eigen::ArrayXd prod = centred.row(i).array() * centred.row(j).array();
            const double c = prod.sum() / (paths - 1.0);
            const double spread = std::sqrt((prod - prod.mean()).square().sum() / (paths - 1.0));
            add("log-cov[" + std::to_string(i) + "][" + std::to_string(j) + "]", c,
                cov_exact(i, j), spread / std::sqrt(paths));
        }
    }
    report.notes.push_back("paths=" + std::to_string(xs.cols()) + " seed=" + std::to_string(cfg.seed));
    report.wall_seconds = seconds_since(start);
    report.finalize();
    return report;
}

// ---------------------------------------------------------------------------

VerificationReport semigroup_suite(const SemigroupOptions& o, YosidaTable* table_out) {
    const auto start = Clock::now();
    VerificationReport report;
    report.id = "semigroup";
    const std::size_t k = o.dimension;
    std::mt19937_64 rng(o.seed ^ 0x9e3779b97f4a7c15ull);

    auto add = [&](std::string label, double measured, double tolerance, bool pass,
                   std::string note = {}) {
        LevelRecord rec;
        rec.label = std::move(label);
        rec.nodes = {k};
        rec.measured = measured;
        rec.tolerance = tolerance;
        rec.pass = pass;
        rec.note = std::move(note);
        report.levels.push_back(std::move(rec));
    };

    {
        double worst = 0.0;
        double worst_commutator = 0.0;
        for (std::size_t s = 0; s < o.seeds; ++s) {
            const auto pair = CommutingPair::random(k, o.seed + s);
            worst = std::max(worst, verify_exp_identity(pair));
            worst_commutator = std::max(worst_commutator, pair.commutator());
        }
        add("exp identity, commuting pairs", worst, o.identity_tolerance,
            worst <= o.identity_tolerance,
            std::to_string(o.seeds) + " seeds, max commutator " + fmt(worst_commutator, 3));
    }
    {
        Eigen::MatrixXd a1(2, 2), a2(2, 2);
        a1 << 1.0, 0.0, 0.0, 0.0;
        a2 << 0.5, 0.5, 0.5, 0.5;
        const double r = verify_exp_identity(a1, a2);
        add("exp identity, non-commuting witness", r, o.witness_floor, r > o.witness_floor,
            "passes when the residual exceeds the floor");
    }
    {
        const auto a = MonotoneMatrix::random_symmetric(k, o.seed + 7);
        const double gap = (expm_symmetric(a.matrix(), 1.0) - expm_pade(a.matrix(), 1.0))
                               .cwiseAbs()
                               .maxCoeff();
        add("expm eigen vs pade", gap, 1e-12, gap <= 1e-12);
    }

    const auto pair = CommutingPair::random(k, o.seed + 11);
    const Eigen::MatrixXd a = pair.a1();
    {
        std::vector<double> lambdas = o.rate_lambdas;
        lambdas.insert(lambdas.end(), o.bound_lambdas.begin(), o.bound_lambdas.end());
        double worst_j = 0.0;
        double worst_probe = 0.0;
        for (double l : lambdas) {
            const auto y = yosida(a, l);
            worst_j = std::max(worst_j, spectral_norm(y.resolvent));
            for (std::size_t p = 0; p < o.probes; ++p) {
                const Eigen::VectorXd v = random_vector(static_cast<Eigen::Index>(k), rng);
                worst_probe = std::max(worst_probe, (y.approx * v).norm() / (a * v).norm());
            }
        }
        add("yosida resolvent norm", worst_j, 1.0, worst_j <= 1.0 + kSlack);
        add("yosida |A_l v| / |A v|", worst_probe, 1.0, worst_probe <= 1.0 + kSlack);
    }
    {
        std::vector<Eigen::VectorXd> probes;
        for (std::size_t p = 0; p < o.probes; ++p) {
            probes.push_back(random_vector(static_cast<Eigen::Index>(k), rng));
        }
        double previous = kInf;
        bool monotone = true;
        for (double l : o.rate_lambdas) {
            const auto y = yosida(a, l);
            double worst = 0.0;
            for (const auto& v : probes) worst = std::max(worst, ((y.approx - a) * v).norm());
            monotone = monotone && worst < previous;
            previous = worst;
        }
        add("yosida |A_l v - A v| decreasing in lambda", previous, 0.0, monotone,
            "value at the smallest lambda");
    }
    const Eigen::VectorXd u0 = random_vector(static_cast<Eigen::Index>(k), rng).normalized();
    {
        const YosidaTable table = yosida_flow_convergence(pair, u0, o.bound_lambdas, o.bound_time);
        add("flow bound max ratio", table.max_ratio, 1.0, table.max_ratio <= 1.0,
            "t=" + fmt(o.bound_time));
        if (table_out) *table_out = table;
    }
    {
        const Eigen::VectorXd v0 = o.rate_critical_u0 ? critical_vector(pair) : u0;
        const RateFit fit = yosida_rate(pair, v0, o.rate_lambdas, o.rate_mu, o.rate_time);
        add("flow rate slope", fit.slope, o.slope_tolerance,
            std::abs(fit.slope - o.slope_target) <= o.slope_tolerance,
            "target " + fmt(o.slope_target) + ", mu=" + fmt(o.rate_mu) + ", t=" + fmt(o.rate_time) +
                (o.rate_critical_u0 ? ", critical u0" : ", random u0"));
    }
    {
        const auto family = commuting_family(k, o.segments, o.seed + 13);
        std::uniform_real_distribution<double> dur(0.1, 1.0);
        std::vector<std::pair<Eigen::MatrixXd, double>> segs;
        for (const auto& m : family) segs.emplace_back(m, dur(rng));
        const Composition c = compose_piecewise(segs);
        add("piecewise composition", c.difference, o.composition_tolerance,
            c.difference <= o.composition_tolerance,
            std::to_string(o.segments) + " commuting segments");
    }
    {
        double worst = 0.0;
        double worst_derivative = 0.0;
        const auto sym = MonotoneMatrix::random_symmetric(k, o.seed + 17);
        const auto gen = MonotoneMatrix::random_nonsymmetric(k, o.seed + 19);
        for (double t : {0.1, 1.0, 10.0}) {
            const Eigen::MatrixXd es = expm(sym, t);
            const Eigen::MatrixXd eg = expm(gen, t);
            for (std::size_t p = 0; p < o.probes; ++p) {
                const Eigen::VectorXd v = random_vector(static_cast<Eigen::Index>(k), rng);
                worst = std::max({worst, (es * v).norm() / v.norm(), (eg * v).norm() / v.norm()});
                worst_derivative = std::max(
                    worst_derivative, (sym.matrix() * (es * v)).norm() / (sym.matrix() * v).norm());
            }
        }
        add("contraction |e^{-tA} v| / |v|", worst, 1.0, worst <= 1.0 + kSlack);
        add("derivative |A e^{-tA} v| / |A v|", worst_derivative, 1.0,
            worst_derivative <= 1.0 + kSlack);
    }
    report.finalize();
    report.wall_seconds = seconds_since(start);
    return report;
}

}  // namespace tdbs
