#include "tdbs/experiments.hpp"

#include "tdbs/analytic_oracles.hpp"
#include "tdbs/errors.hpp"
#include "tdbs/mc_oracle.hpp"
#include "tdbs/semigroup_lab.hpp"
#include "tdbs/verify.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace tdbs {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v, int precision = 10) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

LevelRecord value_record(std::string label, double value, std::string note = {}) {
    LevelRecord r;
    r.label = std::move(label);
    r.measured = value;
    r.tolerance = value;
    r.pass = std::isfinite(value);
    r.note = std::move(note);
    return r;
}

using Artifact = std::function<void(const fs::path&)>;

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    body(out);
}

VerificationReport run_average(const ExperimentConfig& cfg, std::vector<Artifact>& artifacts) {
    const MarketModel& model = *cfg.model;
    const auto avg = averaged_operator_coeffs(model, 0.0, cfg.problem.maturity);
    VerificationReport rep;
    rep.id = "average";
    rep.levels.push_back(value_record("r_bar", avg.r_bar));
    rep.levels.push_back(value_record("m_bar", avg.m_bar));
    rep.levels.push_back(value_record("d_bar", avg.d_bar));
    const auto n = avg.sigma_bar.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        rep.levels.push_back(value_record("sigma_bar[" + std::to_string(i) + "]", avg.sigma_bar(i),
                                          "sigma_bar = " + fmt(avg.sigma_bar(i), 6)));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            rep.levels.push_back(value_record(
                "rho_bar[" + std::to_string(i) + "][" + std::to_string(j) + "]", avg.rho_bar(i, j)));
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            rep.levels.push_back(value_record(
                "a_bar[" + std::to_string(i) + "][" + std::to_string(j) + "]", avg.a_bar(i, j)));
        }
        rep.levels.push_back(value_record("b_bar[" + std::to_string(i) + "]", avg.b_bar(i)));
    }
    rep.levels.push_back(value_record("q_bar", avg.q_bar));

    std::ostringstream table;
    table << "rho_bar table:";
    for (Eigen::Index i = 0; i < n; ++i) {
        table << (i ? " |" : "");
        for (Eigen::Index j = 0; j < n; ++j) table << " " << fmt(avg.rho_bar(i, j), 6);
    }
    rep.notes.push_back(table.str());
    rep.finalize();

    artifacts.push_back([avg](const fs::path& dir) {
        write_file(dir / "averages.csv", [&](std::ostream& os) {
            os.precision(17);
            os << "quantity,i,j,value\n";
            os << "r_bar,,," << avg.r_bar << "\nm_bar,,," << avg.m_bar << "\nd_bar,,," << avg.d_bar
               << "\nq_bar,,," << avg.q_bar << "\n";
            for (Eigen::Index i = 0; i < avg.sigma_bar.size(); ++i) {
                os << "sigma_bar," << i << ",," << avg.sigma_bar(i) << "\n";
                os << "b_bar," << i << ",," << avg.b_bar(i) << "\n";
                for (Eigen::Index j = 0; j < avg.sigma_bar.size(); ++j) {
                    os << "rho_bar," << i << "," << j << "," << avg.rho_bar(i, j) << "\n";
                    os << "a_bar," << i << "," << j << "," << avg.a_bar(i, j) << "\n";
                }
            }
        });
    });
    return rep;
}

VerificationReport run_solve(const ExperimentConfig& cfg, std::vector<Artifact>& artifacts) {
    const auto field = std::make_shared<SolutionField>(
        solve_time_dependent(*cfg.model, cfg.problem, cfg.solve));
    VerificationReport rep;
    rep.id = "solve";
    LevelRecord r;
    r.label = "linear solve residual";
    r.nodes = cfg.problem.nodes_per_axis;
    r.dt = cfg.solve.dt_target;
    r.measured = field->summary.max_residual;
    r.tolerance = cfg.solve.tolerance;
    r.pass = r.measured <= r.tolerance;
    r.note = "steps=" + std::to_string(field->summary.steps) +
             " operators=" + std::to_string(field->summary.operators_assembled) +
             " max_iterations=" + std::to_string(field->summary.max_iterations);
    rep.levels.push_back(r);
    if (!cfg.spot.empty()) {
        const double v = field->grid->interpolate(field->final_values(), log_transform(cfg.spot));
        rep.levels.push_back(value_record("value at spot (tau = tau0)", v));
    }
    rep.finalize();
    artifacts.push_back([field](const fs::path& dir) {
        write_file(dir / "solution.csv", [&](std::ostream& os) { write_solution_csv(os, *field); });
    });
    return rep;
}

VerificationReport run_mc(const ExperimentConfig& cfg, std::size_t workers,
                          std::vector<Artifact>& artifacts) {
    MCConfig mc = cfg.mc;
    mc.workers = workers;
    const std::optional<DomainSpec> domain = cfg.problem.domain;
    const MCResult res =
        price_mc(*cfg.model, cfg.spot, 0.0, cfg.problem.maturity, domain, cfg.problem.payoff, mc);
    VerificationReport rep;
    rep.id = "mc";
    LevelRecord r = value_record("mc price", res.price,
                                 "stderr=" + fmt(res.std_error, 6) + " paths=" +
                                     std::to_string(res.paths) +
                                     " knocked_out=" + fmt(res.knockout_fraction, 6));
    r.pass = r.pass && res.std_error > 0.0 && res.knockout_fraction >= 0.0 &&
             res.knockout_fraction <= 1.0;
    rep.levels.push_back(r);
    if (cfg.mc_compare_pde) {
        OracleSetup setup = cfg.oracle;
        setup.mc = mc;
        rep.levels.push_back(pde_vs_mc(*cfg.model, cfg.problem, cfg.spot, setup, true));
    }
    if (cfg.mc_moments) {
        const auto moments = mc_moment_check(*cfg.model, cfg.spot, cfg.problem.maturity, mc,
                                             cfg.oracle.stderr_multiple);
        for (const auto& r : moments.levels) rep.levels.push_back(r);
    }
    rep.finalize();

    MCConfig dump = mc;
    dump.paths = std::min<std::size_t>(mc.paths, 10000);
    if (dump.antithetic && dump.paths % 2) --dump.paths;
    const auto sample = std::make_shared<TerminalSample>(
        simulate_terminal(*cfg.model, cfg.spot, 0.0, cfg.problem.maturity, domain, dump));
    artifacts.push_back([sample](const fs::path& dir) {
        write_file(dir / "terminal.csv", [&](std::ostream& os) { write_terminal_csv(os, *sample); });
    });
    return rep;
}

VerificationReport run_fourier(const ExperimentConfig& cfg, std::vector<Artifact>& artifacts) {
    const MarketModel& model = *cfg.model;
    VerificationReport rep;
    rep.id = "fourier";
    auto grid = std::make_shared<FourierGrid>();
    auto field = std::make_shared<Eigen::VectorXd>();
    rep.levels.push_back(pde_vs_fourier(model, cfg.oracle, grid.get(), field.get()));
    rep.levels.push_back(fourier_multiplier_check(model, cfg.oracle));
    if (model.dimension() == 1) rep.levels.push_back(pde_vs_closed_form(model, cfg.oracle));
    rep.finalize();
    artifacts.push_back([grid, field](const fs::path& dir) {
        write_file(dir / "fourier.csv", [&](std::ostream& os) { write_fourier_csv(os, *grid, *field); });
    });
    return rep;
}

VerificationReport run_semigroup(const ExperimentConfig& cfg, std::vector<Artifact>& artifacts) {
    auto table = std::make_shared<YosidaTable>();
    VerificationReport rep = semigroup_suite(cfg.semigroup, table.get());
    artifacts.push_back([table](const fs::path& dir) {
        write_file(dir / "yosida.csv", [&](std::ostream& os) { write_yosida_csv(os, *table); });
    });
    return rep;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::size_t workers, std::ostream& console) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        console << "error: cannot create output directory '" << dir.string() << "'\n";
        return exit_config;
    }
    write_file(dir / "config.json", [&](std::ostream& os) { os << cfg.effective_json; });

    std::vector<Artifact> artifacts;
    VerificationReport rep;
    if (cfg.kind == "average") {
        rep = run_average(cfg, artifacts);
    } else if (cfg.kind == "solve") {
        rep = run_solve(cfg, artifacts);
    } else if (cfg.kind == "verify-theorem2") {
        rep = theorem2_check(*cfg.model, cfg.problem, cfg.levels, cfg.solve, cfg.theorem2);
    } else if (cfg.kind == "verify-lemma5") {
        rep = lemma5_check(*cfg.model, cfg.problem, cfg.lemma5_pieces, cfg.solve);
    } else if (cfg.kind == "mc") {
        rep = run_mc(cfg, workers, artifacts);
    } else if (cfg.kind == "fourier") {
        rep = run_fourier(cfg, artifacts);
    } else if (cfg.kind == "semigroup") {
        rep = run_semigroup(cfg, artifacts);
    } else if (cfg.kind == "energy") {
        rep = energy_check(*cfg.model, cfg.problem, cfg.solve);
    } else {
        throw ConfigError("unknown experiment kind '" + cfg.kind + "'");
    }

    std::ostringstream text;
    if (cfg.model) {
        text << "market time tau in [" << fmt(cfg.tau0) << ", " << fmt(cfg.maturity)
             << "]; solver time t = T - tau in [0, " << fmt(cfg.maturity - cfg.tau0) << "]\n";
    }
    write_report_text(text, rep);
    write_file(dir / "report.txt", [&](std::ostream& os) { os << text.str(); });
    write_file(dir / "report.csv", [&](std::ostream& os) { write_report_csv(os, rep); });
    for (const auto& a : artifacts) a(dir);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(dir / "timing.txt", [&](std::ostream& os) {
        os << "wall_seconds " << fmt(elapsed, 6) << "\nexperiment_seconds " << fmt(rep.wall_seconds, 6)
           << "\n";
    });
    console << text.str();
    return rep.verdict ? exit_pass : exit_fail;
}

}  // namespace tdbs
