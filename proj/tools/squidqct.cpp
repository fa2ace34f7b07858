// Command-line front end. Every subcommand takes --config (INI; all keys
// optional) and --out (output directory). Exit codes: 0 success, 1 error,
// 2 validation failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "squidqct/squidqct.hpp"
#include "squidqct/validation.hpp"

namespace fs = std::filesystem;
using namespace squidqct;

namespace {

constexpr int kExitError = 1;
constexpr int kExitValidation = 2;

struct Common {
    std::string config;
    std::string out = "out";
};

RunConfig load(const Common& c) {
    if (c.config.empty()) return RunConfig{};
    std::ifstream is(c.config);
    if (!is) throw ConfigError("cannot open configuration file " + c.config);
    return parse_config(is);
}

fs::path out_dir(const Common& c) {
    fs::path p(c.out);
    fs::create_directories(p);
    return p;
}

/// Paths given relative to --out resolve inside it.
fs::path in_out(const Common& c, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : fs::path(c.out) / path;
}

void write_file(const fs::path& p, const std::string& text) { write_text_atomic(p, text); }

std::string kv(const std::string& key, const std::string& value) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16s = %s\n", key.c_str(), value.c_str());
    return buf;
}

int cmd_reduce(const Common& c) {
    const RunConfig cfg = load(c);
    const ParameterSet ps = resolve_parameter_set(cfg, cfg.physical.parameter_set);
    const DimensionlessModel m = reduce(ps.squid);
    std::ostringstream os;
    os << kv("parameter_set", ps.label) << kv("beta_c", format_g17(m.beta_c)) << kv("kappa", format_g17(m.kappa))
       << kv("Phi_ex0", format_g17(m.Phi_ex0)) << kv("omega_d_ratio", format_g17(m.omega_d_ratio))
       << kv("omega0", format_g17(m.omega0)) << kv("beta_L", format_g17(beta_L(ps.squid)))
       << kv("drive_period", format_g17(m.drive_period()));
    std::cout << os.str();
    const fs::path out = out_dir(c);
    write_file(out / "model.txt", os.str());
    write_provenance(out, cfg, "reduce");
    return 0;
}

TrajectoryRecord fresh_trajectory(const RunConfig& cfg, DimensionlessModel& m) {
    const ParameterSet ps = resolve_parameter_set(cfg, cfg.physical.parameter_set);
    m = reduce(ps.squid);
    const IntegratorConfig ic = integrator_config(cfg, m);
    NoiseStream noise(cfg.integrator.seed, cfg.integrator.stream);
    const double t_end = (cfg.integrator.transient_periods + cfg.integrator.record_periods) * m.drive_period();
    std::cerr << "simulating " << ps.label << " at D=" << cfg.physical.D << " for "
              << cfg.integrator.transient_periods + cfg.integrator.record_periods << " drive periods\n";
    return evolve(ps.alpha0, m, cfg.physical.D, t_end, ic, noise);
}

/// Trajectory from --trajectory if given, otherwise a fresh run.
TrajectoryRecord obtain_trajectory(const Common& c, const RunConfig& cfg, const std::string& path,
                                   DimensionlessModel& m) {
    if (path.empty()) return fresh_trajectory(cfg, m);
    m = reduce(resolve_parameter_set(cfg, cfg.physical.parameter_set).squid);
    std::ifstream is(in_out(c, path));
    if (!is) throw Error("cannot open trajectory " + in_out(c, path).string());
    return read_trajectory_csv(is);
}

int cmd_simulate(const Common& c) {
    const RunConfig cfg = load(c);
    DimensionlessModel m;
    const TrajectoryRecord tr = fresh_trajectory(cfg, m);
    const fs::path out = out_dir(c);
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    write_file(out / "trajectory.csv", os.str());
    write_provenance(out, cfg, "simulate");
    double leak = 0.0, dmin = 1e300;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        leak = std::max(leak, tr.leakage[i]);
        dmin = std::min(dmin, tr.uncertainty(i));
    }
    std::cout << kv("samples", std::to_string(tr.size())) << kv("leakage_max", format_g17(leak))
              << kv("delta_min", format_g17(dmin)) << kv("trajectory", (out / "trajectory.csv").string());
    return 0;
}

int cmd_poincare(const Common& c, const std::string& trajectory) {
    const RunConfig cfg = load(c);
    DimensionlessModel m;
    const TrajectoryRecord tr = obtain_trajectory(c, cfg, trajectory, m);
    const auto sec = poincare(tr, m, cfg.sweep.section_phase, cfg.sweep.section_points, cfg.integrator.transient_periods);
    const fs::path out = out_dir(c);
    std::ostringstream os;
    write_section_csv(os, sec);
    write_file(out / "section.csv", os.str());
    const auto u = uncertainty_series(tr, m, cfg.integrator.transient_periods, cfg.sweep.delta_window_periods);
    std::ostringstream us;
    write_uncertainty_csv(us, u);
    write_file(out / "uncertainty.csv", us.str());
    write_provenance(out, cfg, "poincare");
    const double radius = cfg.sweep.linkage_fraction * bounding_diagonal(sec);
    std::cout << kv("points", std::to_string(sec.points.size())) << kv("cluster_count", std::to_string(cluster_count(sec, radius)))
              << kv("linkage_radius", format_g17(radius)) << kv("delta_a", format_g17(u.delta_a));
    return 0;
}

int cmd_lyapunov(const Common& c, const std::string& trajectory) {
    const RunConfig cfg = load(c);
    DimensionlessModel m;
    const TrajectoryRecord tr = obtain_trajectory(c, cfg, trajectory, m);
    const std::size_t first = static_cast<std::size_t>(cfg.integrator.transient_periods) * samples_per_period(tr, m);
    StretchingCurve curve;
    const auto est = lambda_of_trajectory(tr, cfg.embedding.embedding, cfg.embedding.fit_range, first,
                                          static_cast<std::size_t>(cfg.embedding.series_length), &curve, cfg.embedding.fit);
    const fs::path out = out_dir(c);
    std::ostringstream os;
    write_stretching_csv(os, curve);
    write_file(out / "stretching.csv", os.str());
    std::ostringstream es;
    es << kv("lambda_per_sample", format_g17(est.lambda_per_sample))
       << kv("lambda_per_time", format_g17(est.lambda_per_unit_time))
       << kv("fit_range", std::to_string(est.fit_range.first) + "," + std::to_string(est.fit_range.second))
       << kv("fit_residual", format_g17(est.fit_residual)) << kv("valid_refs", std::to_string(curve.valid_refs))
       << kv("flat", est.flat ? "true" : "false");
    write_file(out / "lyapunov.txt", es.str());
    write_provenance(out, cfg, "lyapunov");
    std::cout << es.str();
    return 0;
}

int cmd_sweep(const Common& c) {
    const RunConfig cfg = load(c);
    const fs::path out = out_dir(c);
    const auto table = run_sweep(cfg, out, [](const SweepProgress& p) {
        std::cerr << "[" << p.done << "/" << p.total << "] " << (p.reused ? "cached " : "") << p.cell->label
                  << " D=" << p.cell->D << " " << p.cell->status << "\n";
    });
    std::size_t failed = 0;
    for (const auto& cell : table.cells) failed += cell.ok() ? 0 : 1;
    std::cout << kv("cells", std::to_string(table.cells.size())) << kv("failed_cells", std::to_string(failed))
              << kv("sweep", (out / "sweep.csv").string()) << kv("config_hash", table.config_hash);
    return 0;
}

std::string format_report(const SweepTable& t) {
    std::ostringstream os;
    for (const auto& label : table_labels(t)) {
        os << "[label " << label << "]\n";
        try {
            const auto r = monotonicity_report(t, label);
            os << kv("cells", std::to_string(r.cells)) << kv("spearman", format_g17(r.spearman))
               << kv("inversions", std::to_string(r.inversions)) << kv("breakpoint", format_g17(r.hinge.breakpoint))
               << kv("slope_low", format_g17(r.hinge.slope_low)) << kv("slope_high", format_g17(r.hinge.slope_high));
        } catch (const InsufficientData& e) {
            os << kv("monotonicity", std::string("unavailable: ") + e.what());
        }
        const auto d = dip_report(t, label);
        os << kv("lambda_dip", d.has_dip ? "yes" : "no");
        if (d.has_dip)
            os << kv("lambda_dip_D", format_g17(d.lambda_dip.D)) << kv("lambda_dip_depth", format_g17(d.lambda_dip.depth));
        std::string minima;
        for (const auto& m : d.lambda_minima)
            minima += (minima.empty() ? "" : " ") + format_g17(m.D) + ":" + format_g17(m.depth);
        if (!minima.empty()) os << kv("lambda_minima", minima);
        os << kv("delta_dip", d.delta_has_dip ? "yes" : "no");
        if (d.delta_has_dip) os << kv("delta_dip_D", format_g17(d.delta_dip.D));
        os << kv("same_region", d.same_region ? "yes" : "no");
    }
    return os.str();
}

int cmd_report(const Common& c, const std::string& sweep_path) {
    const RunConfig cfg = load(c);
    const fs::path path = in_out(c, sweep_path);
    std::ifstream is(path);
    if (!is) throw Error("cannot open sweep table " + path.string());
    const SweepTable t = read_sweep_csv(is);
    const std::string text = format_report(t);
    const fs::path out = out_dir(c);
    write_file(out / "report.txt", text);
    write_provenance(out, cfg, "report");
    std::cout << text;
    return 0;
}

int cmd_validate(const Common& c, bool quick) {
    const RunConfig cfg = load(c);
    validation::DampedOscillatorOptions dopt;
    validation::MasterEquationOptions mopt;
    if (quick) {
        dopt.trajectories = 100;
        mopt.trajectories = 300;
    }
    std::vector<validation::CheckResult> results;
    results.push_back(validation::reduction_identities());
    results.push_back(validation::lyapunov_oracles());
    results.push_back(validation::damped_oscillator(dopt));
    results.push_back(validation::master_equation(mopt));
    std::ostringstream os;
    bool ok = true;
    for (const auto& r : results) {
        os << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        ok = ok && r.passed;
    }
    const fs::path out = out_dir(c);
    write_file(out / "validation.txt", os.str());
    write_provenance(out, cfg, "validate");
    std::cout << os.str();
    return ok ? 0 : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rf-SQUID quantum state diffusion and Lyapunov analysis"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "INI configuration file");
        sub->add_option("--out", common.out, "output directory")->capture_default_str();
    };
    std::string trajectory, sweep_path = "sweep.csv";
    bool quick = false;

    auto* reduce_cmd = app.add_subcommand("reduce", "print the dimensionless model of a parameter set");
    auto* simulate_cmd = app.add_subcommand("simulate", "one trajectory to trajectory.csv");
    auto* poincare_cmd = app.add_subcommand("poincare", "Poincare section (section.csv) and Delta series");
    auto* lyapunov_cmd = app.add_subcommand("lyapunov", "stretching curve (stretching.csv) and lambda estimate");
    auto* sweep_cmd = app.add_subcommand("sweep", "parameter-set x D sweep to sweep.csv (resumable)");
    auto* report_cmd = app.add_subcommand("report", "monotonicity and dip statistics of a sweep table");
    auto* validate_cmd = app.add_subcommand("validate", "run the oracle suites");
    for (auto* sub : {reduce_cmd, simulate_cmd, poincare_cmd, lyapunov_cmd, sweep_cmd, report_cmd, validate_cmd})
        add_common(sub);
    for (auto* sub : {poincare_cmd, lyapunov_cmd})
        sub->add_option("--trajectory", trajectory, "trajectory CSV (relative to --out); omitted: fresh run");
    report_cmd->add_option("--sweep", sweep_path, "sweep CSV (relative to --out)")->capture_default_str();
    validate_cmd->add_flag("--quick", quick, "smaller ensembles");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitError;
    }

    try {
        if (reduce_cmd->parsed()) return cmd_reduce(common);
        if (simulate_cmd->parsed()) return cmd_simulate(common);
        if (poincare_cmd->parsed()) return cmd_poincare(common, trajectory);
        if (lyapunov_cmd->parsed()) return cmd_lyapunov(common, trajectory);
        if (sweep_cmd->parsed()) return cmd_sweep(common);
        if (report_cmd->parsed()) return cmd_report(common, sweep_path);
        if (validate_cmd->parsed()) return cmd_validate(common, quick);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
