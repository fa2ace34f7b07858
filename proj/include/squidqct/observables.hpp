#pragma once

// Measured quantities of a trajectory: the uncertainty product
// Delta(t) = sqrt(Var Phi Var Q), its window average Delta_a, and
// stroboscopic Poincare sections of (<Phi>, <Q>).

#include <cmath>
#include <cstddef>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "squidqct/circuit.hpp"
#include "squidqct/error.hpp"
#include "squidqct/qsd.hpp"

namespace squidqct {

inline constexpr int kDefaultTransientPeriods = 20;
inline constexpr int kDefaultDeltaWindowPeriods = 400;
inline constexpr int kDefaultSectionPoints = 500;

/// Samples per drive period implied by the record's uniform grid.
inline int samples_per_period(const TrajectoryRecord& tr, const DimensionlessModel& m) {
    if (tr.size() < 2) throw InsufficientData("trajectory has fewer than two samples");
    const double ratio = m.drive_period() / tr.sample_spacing();
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6 * ratio)
        throw InvalidParameter("sample_stride", "trajectory sampling is not commensurate with the drive period");
    return static_cast<int>(rounded);
}

struct UncertaintySeries {
    std::vector<double> times;
    std::vector<double> delta;
    double delta_a = 0.0;
};

/// Delta for every sample; Delta_a averages the samples of periods
/// [skip, skip + window).
inline UncertaintySeries uncertainty_series(const TrajectoryRecord& tr, const DimensionlessModel& m,
                                            int skip_periods = kDefaultTransientPeriods,
                                            int window_periods = kDefaultDeltaWindowPeriods) {
    if (skip_periods < 0) throw InvalidParameter("skip_periods", "must be >= 0");
    if (window_periods < 1) throw InvalidParameter("window_periods", "must be >= 1");
    if (window_periods < 100)
        warn("Delta_a window of " + std::to_string(window_periods) + " periods is shorter than 100 periods");
    const int spp = samples_per_period(tr, m);
    const std::size_t first = static_cast<std::size_t>(skip_periods) * spp;
    const std::size_t last = static_cast<std::size_t>(skip_periods + window_periods) * spp;
    if (tr.size() < last)
        throw InsufficientData("trajectory has " + std::to_string(tr.size()) + " samples; transient + window need " +
                               std::to_string(last));
    UncertaintySeries out;
    out.times = tr.times;
    out.delta.resize(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) out.delta[i] = tr.uncertainty(i);
    out.delta_a = std::accumulate(out.delta.begin() + first, out.delta.begin() + last, 0.0) /
                  static_cast<double>(last - first);
    return out;
}

struct PhasePoint {
    double phi = 0.0;
    double q = 0.0;
};

struct PoincareSection {
    std::vector<PhasePoint> points;
    std::vector<std::size_t> sample_indices;
    double phase = 0.0;
    std::pair<int, int> period_index_range{0, 0};  // [first, last)
};

/// One point per drive period at drive phase `phase`, starting after
/// `skip_periods` periods.
inline PoincareSection poincare(const TrajectoryRecord& tr, const DimensionlessModel& m, double phase = 0.0,
                                int count = kDefaultSectionPoints, int skip_periods = kDefaultTransientPeriods) {
    if (count < 1) throw InvalidParameter("count", "must be >= 1");
    if (skip_periods < 0) throw InvalidParameter("skip_periods", "must be >= 0");
    const int spp = samples_per_period(tr, m);
    double wrapped = std::fmod(phase, kTwoPi);
    if (wrapped < 0.0) wrapped += kTwoPi;
    const double offset_exact = wrapped / kTwoPi * spp;
    long long offset = std::llround(offset_exact);
    if (std::abs(offset_exact - static_cast<double>(offset)) > 1e-6)
        throw InvalidParameter("phase", "section phase does not fall on a sample");
    if (offset == spp) offset = 0;

    PoincareSection sec;
    sec.phase = wrapped;
    sec.period_index_range = {skip_periods, skip_periods + count};
    const std::size_t needed = static_cast<std::size_t>(skip_periods + count - 1) * spp + offset + 1;
    if (tr.size() < needed)
        throw InsufficientData("trajectory too short for " + std::to_string(count) + " section points");
    sec.points.reserve(count);
    sec.sample_indices.reserve(count);
    for (int k = 0; k < count; ++k) {
        const std::size_t idx = static_cast<std::size_t>(skip_periods + k) * spp + offset;
        sec.points.push_back({tr.mean_phi[idx], tr.mean_q[idx]});
        sec.sample_indices.push_back(idx);
    }
    return sec;
}

/// Diagonal of the section's bounding box.
inline double bounding_diagonal(const PoincareSection& sec) {
    if (sec.points.empty()) return 0.0;
    double x0 = sec.points[0].phi, x1 = x0, y0 = sec.points[0].q, y1 = y0;
    for (const auto& p : sec.points) {
        x0 = std::min(x0, p.phi);
        x1 = std::max(x1, p.phi);
        y0 = std::min(y0, p.q);
        y1 = std::max(y1, p.q);
    }
    return std::hypot(x1 - x0, y1 - y0);
}

inline constexpr double kDefaultLinkageFraction = 0.05;

/// Connected components when points closer than linkage_radius are linked.
/// A non-positive radius selects 5% of the bounding-box diagonal.
inline int cluster_count(const PoincareSection& sec, double linkage_radius = 0.0) {
    const std::size_t n = sec.points.size();
    if (n == 0) throw InvalidParameter("section", "cluster count of an empty section");
    if (!(linkage_radius > 0.0)) linkage_radius = kDefaultLinkageFraction * bounding_diagonal(sec);

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    const double r2 = linkage_radius * linkage_radius;
    int components = static_cast<int>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = sec.points[i].phi - sec.points[j].phi;
            const double dy = sec.points[i].q - sec.points[j].q;
            // Coincident points are always linked, even at zero radius.
            if (dx * dx + dy * dy <= r2) {
                const std::size_t a = find(i), b = find(j);
                if (a != b) {
                    parent[a] = b;
                    --components;
                }
            }
        }
    }
    return components;
}

inline void write_section_csv(std::ostream& os, const PoincareSection& sec) {
    os << "mean_phi,mean_q\n";
    for (const auto& p : sec.points) os << format_g17(p.phi) << ',' << format_g17(p.q) << '\n';
}

inline void write_uncertainty_csv(std::ostream& os, const UncertaintySeries& u) {
    os << "t,delta\n";
    for (std::size_t i = 0; i < u.delta.size(); ++i) os << format_g17(u.times[i]) << ',' << format_g17(u.delta[i]) << '\n';
}

}  // namespace squidqct
