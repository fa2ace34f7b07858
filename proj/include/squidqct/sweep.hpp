#pragma once

// Experiment harness: parameter sets x coupling grid, one trajectory per
// cell under a fixed noise realization, lambda_m / Delta_a / section
// extraction, resumable CSV output, and the monotonicity and dip statistics.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "squidqct/circuit.hpp"
#include "squidqct/config.hpp"
#include "squidqct/error.hpp"
#include "squidqct/lyapunov.hpp"
#include "squidqct/observables.hpp"
#include "squidqct/qsd.hpp"
#include "squidqct/version.hpp"

namespace squidqct {

struct ParameterSet {
    std::string label;  // hbar_eff tag
    SquidParameters squid;
    cplx alpha0{0.877, -0.566};
};

/// The base set (hbar_eff = 2.6) and the four rows of the hbar_eff table.
inline const std::vector<ParameterSet>& builtin_parameter_sets() {
    static const std::vector<ParameterSet> sets{
        {"1", {3.95e-12, 100e-12, 4.6e-6, 0.65, 0.081}},
        {"1.2", {2.16e-12, 150e-12, 3.35e-6, 0.71, 0.1041}},
        {"1.4", {1.29e-12, 200e-12, 2.67e-6, 0.78, 0.1273}},
        {"1.9", {0.36e-12, 250e-12, 2.46e-6, 0.99, 0.1851}},
        {"2.6", {0.1e-12, 300e-12, 2.2e-6, 1.14, 0.2684}},
    };
    return sets;
}

inline const ParameterSet& find_parameter_set(const std::string& label) {
    for (const auto& s : builtin_parameter_sets())
        if (s.label == label) return s;
    std::string known;
    for (const auto& s : builtin_parameter_sets()) known += " " + s.label;
    throw ConfigError("unknown parameter set '" + label + "'; built-in labels:" + known);
}

/// Parameter set `label` with the [physical] overrides and initial state.
inline ParameterSet resolve_parameter_set(const RunConfig& cfg, const std::string& label) {
    ParameterSet ps = find_parameter_set(label);
    const auto& p = cfg.physical;
    if (p.C) ps.squid.C = *p.C;
    if (p.L) ps.squid.L = *p.L;
    if (p.Ic) ps.squid.Ic = *p.Ic;
    if (p.omega_d_ratio) ps.squid.omega_d_ratio = *p.omega_d_ratio;
    if (p.phi_ex0_ratio) ps.squid.phi_ex0_ratio = *p.phi_ex0_ratio;
    ps.alpha0 = cplx(p.alpha0_re, p.alpha0_im);
    // The state label reads sqrt(2)(<Phi> + i<Q>); with alpha = (<Phi> + i<Q>)/sqrt(2)
    // that is 2 alpha under the halved reading.
    if (p.alpha_convention == AlphaConvention::Halved) ps.alpha0 *= 0.5;
    return ps;
}

inline IntegratorConfig integrator_config(const RunConfig& cfg, const DimensionlessModel& m) {
    const auto& i = cfg.integrator;
    IntegratorConfig ic = IntegratorConfig::for_period(m.drive_period(), i.steps_per_period, i.samples_per_period);
    ic.scheme = i.scheme;
    ic.N = i.N;
    ic.moving_frame = i.moving_frame;
    ic.renormalize_every = i.renormalize_every;
    ic.leakage_limit = i.leakage_limit;
    ic.recenter_quanta = i.recenter_quanta;
    return ic;
}

/// Uniform grid D_min..D_max (inclusive), or the explicit list.
inline std::vector<double> d_grid(const SweepSection& s) {
    if (!s.D_values.empty()) return s.D_values;
    std::vector<double> out(s.D_count);
    if (s.D_count == 1) {
        out[0] = s.D_min;
        return out;
    }
    for (int k = 0; k < s.D_count; ++k)
        out[k] = k == s.D_count - 1 ? s.D_max : s.D_min + (s.D_max - s.D_min) * k / (s.D_count - 1);
    return out;
}

/// Noise stream of a cell. Shared: one realization for every (label, D),
/// as in the fixed-realization protocol. per_d: derived from the bits of D,
/// so it does not depend on the rest of the grid.
inline std::uint64_t cell_stream_id(const RunConfig& cfg, double D) {
    if (cfg.sweep.stream_policy == StreamPolicy::Shared) return cfg.integrator.stream;
    std::uint64_t bits = 0;
    std::memcpy(&bits, &D, sizeof bits);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int k = 0; k < 8; ++k) {
        h ^= (bits >> (8 * k)) & 0xffu;
        h *= 0x100000001b3ULL;
    }
    return cfg.integrator.stream ^ h;
}

inline std::uint64_t cell_seed(const RunConfig& cfg, int replicate) {
    return cfg.integrator.seed + static_cast<std::uint64_t>(replicate);
}

struct SweepCell {
    std::string label;
    double D = 0.0;
    std::uint64_t seed = 0;
    double lambda_m = std::numeric_limits<double>::quiet_NaN();
    double delta_a = std::numeric_limits<double>::quiet_NaN();
    double composite = std::numeric_limits<double>::quiet_NaN();
    double fit_residual = std::numeric_limits<double>::quiet_NaN();
    double leakage_max = std::numeric_limits<double>::quiet_NaN();
    int cluster_count = -1;
    std::string status = "ok";
    // Not serialized.
    double delta_min = std::numeric_limits<double>::quiet_NaN();
    std::pair<int, int> fit_range{0, 0};

    bool ok() const { return status == "ok"; }
};

inline constexpr const char* kSweepHeader =
    "label,D,seed,lambda_m,delta_a,composite,fit_residual,leakage_max,cluster_count,status";

inline std::string sweep_row(const SweepCell& c) {
    std::ostringstream os;
    os << c.label << ',' << format_g17(c.D) << ',' << c.seed << ',' << format_g17(c.lambda_m) << ','
       << format_g17(c.delta_a) << ',' << format_g17(c.composite) << ',' << format_g17(c.fit_residual) << ','
       << format_g17(c.leakage_max) << ',' << c.cluster_count << ',' << c.status;
    return os.str();
}

inline SweepCell parse_sweep_row(const std::string& line) {
    std::vector<std::string> f;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw Error("sweep CSV row has " + std::to_string(f.size()) + " fields, expected 10: " + line);
    auto num = [](const std::string& s) { return std::strtod(s.c_str(), nullptr); };
    SweepCell c;
    c.label = f[0];
    c.D = num(f[1]);
    c.seed = std::strtoull(f[2].c_str(), nullptr, 10);
    c.lambda_m = num(f[3]);
    c.delta_a = num(f[4]);
    c.composite = num(f[5]);
    c.fit_residual = num(f[6]);
    c.leakage_max = num(f[7]);
    c.cluster_count = std::atoi(f[8].c_str());
    c.status = f[9];
    return c;
}

struct SweepTable {
    std::vector<SweepCell> cells;
    std::vector<double> D_grid;
    std::string config_hash;
    std::string code_version = kVersion;
    std::uint64_t master_seed = 0;
};

inline void write_sweep_csv(std::ostream& os, const SweepTable& t) {
    os << kSweepHeader << '\n';
    for (const auto& c : t.cells) os << sweep_row(c) << '\n';
}

inline SweepTable read_sweep_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kSweepHeader)
        throw Error("sweep CSV header mismatch; expected '" + std::string(kSweepHeader) + "'");
    SweepTable t;
    while (std::getline(is, line))
        if (!line.empty()) t.cells.push_back(parse_sweep_row(line));
    for (const auto& c : t.cells)
        if (std::find(t.D_grid.begin(), t.D_grid.end(), c.D) == t.D_grid.end()) t.D_grid.push_back(c.D);
    std::sort(t.D_grid.begin(), t.D_grid.end());
    return t;
}

/// Trajectory of one (parameter set, D, replicate) cell.
inline TrajectoryRecord simulate_cell(const RunConfig& cfg, const ParameterSet& ps, double D, int replicate = 0) {
    const DimensionlessModel m = reduce(ps.squid);
    const IntegratorConfig ic = integrator_config(cfg, m);
    NoiseStream noise(cell_seed(cfg, replicate), cell_stream_id(cfg, D));
    const double t_end = (cfg.integrator.transient_periods + cfg.integrator.record_periods) * m.drive_period();
    return evolve(ps.alpha0, m, D, t_end, ic, noise);
}

/// Observables of a cell from its trajectory.
inline void analyze_cell(const RunConfig& cfg, const DimensionlessModel& m, const TrajectoryRecord& tr, SweepCell& c) {
    c.leakage_max = tr.leakage.empty() ? 0.0 : *std::max_element(tr.leakage.begin(), tr.leakage.end());
    const int skip = cfg.integrator.transient_periods;
    const auto u = uncertainty_series(tr, m, skip, cfg.sweep.delta_window_periods);
    c.delta_a = u.delta_a;
    c.delta_min = *std::min_element(u.delta.begin(), u.delta.end());
    const auto sec = poincare(tr, m, cfg.sweep.section_phase, cfg.sweep.section_points, skip);
    c.cluster_count = cluster_count(sec, cfg.sweep.linkage_fraction * bounding_diagonal(sec));
    const std::size_t first = static_cast<std::size_t>(skip) * samples_per_period(tr, m);
    const auto est = lambda_of_trajectory(tr, cfg.embedding.embedding, cfg.embedding.fit_range, first,
                                          static_cast<std::size_t>(cfg.embedding.series_length), nullptr,
                                          cfg.embedding.fit);
    c.lambda_m = cfg.embedding.unit == LambdaUnit::PerTime ? est.lambda_per_unit_time : est.lambda_per_sample;
    c.fit_residual = est.fit_residual;
    c.fit_range = est.fit_range;
    c.composite = c.lambda_m / c.D;
}

/// One cell end to end. Failures become the cell's status, never exceptions.
inline SweepCell compute_cell(const RunConfig& cfg, const std::string& label, double D, int replicate = 0,
                              TrajectoryRecord* trajectory_out = nullptr) {
    SweepCell c;
    c.label = label;
    c.D = D;
    c.seed = cell_seed(cfg, replicate);
    try {
        const ParameterSet ps = resolve_parameter_set(cfg, label);
        const DimensionlessModel m = reduce(ps.squid);
        TrajectoryRecord tr = simulate_cell(cfg, ps, D, replicate);
        analyze_cell(cfg, m, tr, c);
        if (trajectory_out) *trajectory_out = std::move(tr);
    } catch (const TruncationError&) {
        c.status = "truncation";
    } catch (const NumericalBlowup&) {
        c.status = "blowup";
    } catch (const EstimationFailure&) {
        c.status = "estimation-failure";
    } catch (const InsufficientData&) {
        c.status = "insufficient-data";
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        c.status = "error";
    }
    return c;
}

// -----------------------------------------------------------------------------
// Resumable sweep
// -----------------------------------------------------------------------------

struct CellKey {
    std::string label;
    int d_index = 0;
    double D = 0.0;
    int replicate = 0;
};

/// Canonical order: labels as configured, then D ascending, then replicate.
inline std::vector<CellKey> sweep_cells(const RunConfig& cfg) {
    const auto grid = d_grid(cfg.sweep);
    std::vector<CellKey> keys;
    for (const auto& label : cfg.sweep.labels)
        for (std::size_t k = 0; k < grid.size(); ++k)
            for (int r = 0; r < cfg.sweep.replicates; ++r) keys.push_back({label, static_cast<int>(k), grid[k], r});
    return keys;
}

inline std::string cell_file_name(const CellKey& k) {
    std::ostringstream os;
    os << "cell_" << k.label << "_d" << k.d_index << "_r" << k.replicate << ".csv";
    return os.str();
}

inline int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SQUIDQCT_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) n = v;
    }
    return std::max(1, n);
}

struct SweepProgress {
    std::size_t done = 0;
    std::size_t total = 0;
    bool reused = false;
    const SweepCell* cell = nullptr;
};

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot write " + tmp.string());
        os << text;
        if (!os) throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Cell cache file: comment lines (config hash, diagnostics outside the
/// sweep schema), the sweep header, one row.
inline std::string cell_file_text(const SweepCell& c, const std::string& config_hash) {
    std::ostringstream os;
    os << "# config_hash=" << config_hash << '\n'
       << "# delta_min=" << format_g17(c.delta_min) << '\n'
       << "# fit_range=" << c.fit_range.first << ',' << c.fit_range.second << '\n'
       << kSweepHeader << '\n'
       << sweep_row(c) << '\n';
    return os.str();
}

/// Cached cell if the file exists and was written under the same config.
inline std::optional<SweepCell> load_cell(const std::filesystem::path& path, const std::string& config_hash) {
    std::ifstream is(path);
    if (!is) return std::nullopt;
    std::string line;
    bool hash_ok = false, header_ok = false;
    double delta_min = std::numeric_limits<double>::quiet_NaN();
    std::pair<int, int> fit_range{0, 0};
    while (std::getline(is, line)) {
        if (line.rfind("# config_hash=", 0) == 0) {
            hash_ok = line.substr(14) == config_hash;
        } else if (line.rfind("# delta_min=", 0) == 0) {
            delta_min = std::strtod(line.c_str() + 12, nullptr);
        } else if (line.rfind("# fit_range=", 0) == 0) {
            std::sscanf(line.c_str() + 12, "%d,%d", &fit_range.first, &fit_range.second);
        } else if (line == kSweepHeader) {
            header_ok = true;
            break;
        } else {
            return std::nullopt;
        }
    }
    if (!hash_ok || !header_ok || !std::getline(is, line)) return std::nullopt;
    try {
        SweepCell c = parse_sweep_row(line);
        c.delta_min = delta_min;
        c.fit_range = fit_range;
        return c;
    } catch (const Error&) {
        return std::nullopt;
    }
}

inline void write_provenance(const std::filesystem::path& out, const RunConfig& cfg, const std::string& command) {
    std::ostringstream os;
    os << "command=" << command << '\n'
       << "code_version=" << kVersion << '\n'
       << "config_hash=" << cfg.hash_hex() << '\n'
       << "master_seed=" << cfg.integrator.seed << '\n';
    write_text_atomic(out / "provenance.txt", os.str());
    write_text_atomic(out / "config.effective.ini", cfg.canonical());
}

/// Runs every missing cell into out/cells/, then assembles out/sweep.csv in
/// canonical order. Finished cells are reused, so reruns resume.
inline SweepTable run_sweep(const RunConfig& cfg, const std::filesystem::path& out,
                            const std::function<void(const SweepProgress&)>& progress = {}) {
    cfg.validate();
    namespace fs = std::filesystem;
    const fs::path cell_dir = out / "cells";
    fs::create_directories(cell_dir);
    if (cfg.sweep.save_trajectories) fs::create_directories(out / "trajectories");
    const std::string hash = cfg.hash_hex();
    for (const auto& label : cfg.sweep.labels) find_parameter_set(label);
    write_provenance(out, cfg, "sweep");

    const auto keys = sweep_cells(cfg);
    std::vector<SweepCell> cells(keys.size());
    std::vector<char> have(keys.size(), 0);
    std::mutex io;
    std::size_t done = 0;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        if (auto c = load_cell(cell_dir / cell_file_name(keys[k]), hash)) {
            cells[k] = *c;
            have[k] = 1;
            ++done;
            if (progress) progress({done, keys.size(), true, &cells[k]});
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= keys.size()) return;
            if (have[k]) continue;
            TrajectoryRecord tr;
            SweepCell c = compute_cell(cfg, keys[k].label, keys[k].D, keys[k].replicate,
                                       cfg.sweep.save_trajectories ? &tr : nullptr);
            std::lock_guard<std::mutex> lock(io);
            if (cfg.sweep.save_trajectories && tr.size() > 0) {
                std::ostringstream ts;
                write_trajectory_csv(ts, tr);
                write_text_atomic(out / "trajectories" / cell_file_name(keys[k]), ts.str());
            }
            write_text_atomic(cell_dir / cell_file_name(keys[k]), cell_file_text(c, hash));
            cells[k] = std::move(c);
            ++done;
            if (progress) progress({done, keys.size(), false, &cells[k]});
        }
    };
    const int n = std::min<int>(worker_count(), static_cast<int>(keys.size()));
    std::vector<std::thread> pool;
    for (int w = 1; w < n; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    SweepTable table;
    table.cells = std::move(cells);
    table.D_grid = d_grid(cfg.sweep);
    table.config_hash = hash;
    table.master_seed = cfg.integrator.seed;
    std::ostringstream os;
    write_sweep_csv(os, table);
    write_text_atomic(out / "sweep.csv", os.str());
    return table;
}

// -----------------------------------------------------------------------------
// Statistics
// -----------------------------------------------------------------------------

/// Ranks 1..n with ties sharing their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidParameter("spearman", "needs two equal series of >= 2 values");
    return pearson(average_ranks(x), average_ranks(y));
}

/// Pairs ordered one way in x and strictly the other way in y.
inline int count_inversions(const std::vector<double>& x, const std::vector<double>& y) {
    int inv = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j)
            if ((x[i] < x[j] && y[i] > y[j]) || (x[i] > x[j] && y[i] < y[j])) ++inv;
    return inv;
}

struct HingeFit {
    double breakpoint = 0.0;
    double slope_low = 0.0;
    double slope_high = 0.0;
    double intercept = 0.0;
    double rss = 0.0;
};

/// Continuous two-segment fit y = a + b1 x + b2 (x - c)_+; c is searched over
/// the data x values leaving at least 3 points on each side.
inline HingeFit hinge_fit(std::vector<double> x, std::vector<double> y) {
    const std::size_t n = x.size();
    if (n < 6) throw InsufficientData("two-regime fit needs >= 6 points");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = x[idx[i]], ys[i] = y[idx[i]];

    HingeFit best;
    best.rss = std::numeric_limits<double>::infinity();
    for (std::size_t k = 2; k + 3 < n; ++k) {
        const double c = xs[k];
        // Normal equations for (a, b1, b2).
        double S[3][3] = {}, T[3] = {};
        for (std::size_t i = 0; i < n; ++i) {
            const double f[3] = {1.0, xs[i], std::max(0.0, xs[i] - c)};
            for (int r = 0; r < 3; ++r) {
                T[r] += f[r] * ys[i];
                for (int q = 0; q < 3; ++q) S[r][q] += f[r] * f[q];
            }
        }
        // Gaussian elimination with partial pivoting.
        double A[3][4];
        for (int r = 0; r < 3; ++r) {
            for (int q = 0; q < 3; ++q) A[r][q] = S[r][q];
            A[r][3] = T[r];
        }
        bool singular = false;
        for (int col = 0; col < 3 && !singular; ++col) {
            int piv = col;
            for (int r = col + 1; r < 3; ++r)
                if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
            if (std::abs(A[piv][col]) < 1e-300) {
                singular = true;
                break;
            }
            std::swap(A[col], A[piv]);
            for (int r = 0; r < 3; ++r) {
                if (r == col) continue;
                const double f = A[r][col] / A[col][col];
                for (int q = col; q < 4; ++q) A[r][q] -= f * A[col][q];
            }
        }
        if (singular) continue;
        const double a = A[0][3] / A[0][0], b1 = A[1][3] / A[1][1], b2 = A[2][3] / A[2][2];
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = ys[i] - (a + b1 * xs[i] + b2 * std::max(0.0, xs[i] - c));
            rss += e * e;
        }
        if (rss < best.rss) best = {c, b1, b1 + b2, a, rss};
    }
    if (!std::isfinite(best.rss)) throw EstimationFailure("two-regime fit is singular");
    return best;
}

struct MonotonicityReport {
    std::string label;
    std::size_t cells = 0;
    double spearman = 0.0;
    int inversions = 0;
    HingeFit hinge;
};

inline std::vector<const SweepCell*> usable_cells(const SweepTable& t, const std::string& label) {
    std::vector<const SweepCell*> out;
    for (const auto& c : t.cells)
        if (c.label == label && c.ok() && std::isfinite(c.lambda_m) && std::isfinite(c.delta_a) && std::isfinite(c.composite))
            out.push_back(&c);
    std::stable_sort(out.begin(), out.end(), [](const SweepCell* a, const SweepCell* b) { return a->D < b->D; });
    return out;
}

/// Delta_a against lambda_m / D for one label.
inline MonotonicityReport monotonicity_report(const SweepTable& t, const std::string& label) {
    const auto cells = usable_cells(t, label);
    if (cells.size() < 10)
        throw InsufficientData("label " + label + " has " + std::to_string(cells.size()) + " usable cells; need >= 10");
    std::vector<double> x, y;
    for (const auto* c : cells) {
        x.push_back(c->composite);
        y.push_back(c->delta_a);
    }
    MonotonicityReport r;
    r.label = label;
    r.cells = cells.size();
    r.spearman = spearman(x, y);
    r.inversions = count_inversions(x, y);
    r.hinge = hinge_fit(x, y);
    return r;
}

struct DipCandidate {
    double D = 0.0;
    double value = 0.0;
    double left_max = 0.0;
    double right_max = 0.0;
    double depth = 0.0;  // (mean of flanking maxima - value) / mean
};

struct DipReport {
    std::string label;
    bool has_dip = false;
    DipCandidate lambda_dip;                 // deepest interior minimum of lambda_m(D)
    std::vector<DipCandidate> lambda_minima; // every interior local minimum
    bool delta_has_dip = false;
    DipCandidate delta_dip;
    bool same_region = false;                // delta dip within kDipRegionWidth of the lambda dip
    bool in_window = false;                  // lambda dip taken from the requested window
};

inline constexpr double kDipRegionWidth = 0.1;

/// Interior strict local minima of y(x) (x ascending), deepest first.
inline std::vector<DipCandidate> local_minima(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<DipCandidate> out;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (!(y[i] < y[i - 1] && y[i] < y[i + 1])) continue;
        DipCandidate d;
        d.D = x[i];
        d.value = y[i];
        d.left_max = *std::max_element(y.begin(), y.begin() + i);
        d.right_max = *std::max_element(y.begin() + i + 1, y.end());
        const double mean = 0.5 * (d.left_max + d.right_max);
        d.depth = mean != 0.0 ? (mean - d.value) / std::abs(mean) : 0.0;
        out.push_back(d);
    }
    std::stable_sort(out.begin(), out.end(), [](const DipCandidate& a, const DipCandidate& b) { return a.depth > b.depth; });
    return out;
}

/// With a window, the lambda dip is the deepest minimum inside it; without
/// one (or if the window holds no minimum) the deepest overall.
inline DipReport dip_report(const SweepTable& t, const std::string& label,
                            std::optional<std::pair<double, double>> window = std::nullopt) {
    const auto cells = usable_cells(t, label);
    std::vector<double> D, lam, del;
    for (const auto* c : cells) {
        D.push_back(c->D);
        lam.push_back(c->lambda_m);
        del.push_back(c->delta_a);
    }
    DipReport r;
    r.label = label;
    r.lambda_minima = local_minima(D, lam);
    if (!r.lambda_minima.empty()) {
        r.has_dip = true;
        r.lambda_dip = r.lambda_minima.front();
        if (window)
            for (const auto& m : r.lambda_minima)
                if (m.D >= window->first - 1e-12 && m.D <= window->second + 1e-12) {
                    r.lambda_dip = m;
                    r.in_window = true;
                    break;
                }
    }
    const auto dmin = local_minima(D, del);
    if (!dmin.empty()) {
        r.delta_has_dip = true;
        r.delta_dip = dmin.front();
        // Any delta minimum near the lambda dip counts, not just the deepest.
        if (r.has_dip)
            for (const auto& m : dmin)
                if (std::abs(m.D - r.lambda_dip.D) <= kDipRegionWidth + 1e-12) {
                    r.same_region = true;
                    r.delta_dip = m;
                    break;
                }
    }
    return r;
}

inline std::vector<std::string> table_labels(const SweepTable& t) {
    std::vector<std::string> out;
    for (const auto& c : t.cells)
        if (std::find(out.begin(), out.end(), c.label) == out.end()) out.push_back(c.label);
    return out;
}

}  // namespace squidqct
