#pragma once

// Maximal Lyapunov exponent of a scalar series by delay embedding and the
// Kantz stretching factor:
//
//   S(dn) = < ln( 1/|U_i| sum_{j in U_i} |x_{i+last+dn} - x_{j+last+dn}| ) >_i
//
// where U_i holds the epsilon-neighbours (maximum norm) of delay vector i
// outside the Theiler window, last = (dim-1) * delay, and epsilon is a
// fraction of the series extent. The slope of the linear part of S is the
// exponent in nats per sample.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "squidqct/error.hpp"
#include "squidqct/qsd.hpp"

namespace squidqct {

struct EmbeddingConfig {
    int delay = 3;
    int dim = 3;
    int theiler = 64;
    double scale = 0.014;
    int max_horizon = 320;
    int min_neighbors = 5;
    int references = 0;  // 0: every eligible point
    bool vector_divergence = false;

    void validate() const {
        if (delay < 1) throw InvalidParameter("delay", "must be >= 1");
        if (dim < 2) throw InvalidParameter("dim", "must be >= 2");
        if (!(scale > 0.0 && scale < 1.0)) throw InvalidParameter("scale", "must lie in (0, 1)");
        if (min_neighbors < 1) throw InvalidParameter("min_neighbors", "must be >= 1");
        if (theiler < 0) throw InvalidParameter("theiler", "must be >= 0");
        if (max_horizon < 2) throw InvalidParameter("max_horizon", "must be >= 2");
        if (references < 0) throw InvalidParameter("references", "must be >= 0");
    }
};

/// Delay vectors v_i = (x_i, x_{i+delay}, ..., x_{i+(dim-1) delay}).
class DelayCloud {
public:
    DelayCloud(std::vector<double> series, int delay, int dim)
        : series_(std::move(series)), delay_(delay), dim_(dim) {
        if (delay < 1) throw InvalidParameter("delay", "must be >= 1");
        if (dim < 1) throw InvalidParameter("dim", "must be >= 1");
        if (series_.size() <= static_cast<std::size_t>(last_offset()))
            throw InsufficientData("series too short for the embedding");
    }

    int delay() const { return delay_; }
    int dim() const { return dim_; }
    int last_offset() const { return (dim_ - 1) * delay_; }
    std::size_t size() const { return series_.size() - static_cast<std::size_t>(last_offset()); }
    const std::vector<double>& series() const { return series_; }

    double operator()(std::size_t i, int coord) const { return series_[i + static_cast<std::size_t>(coord) * delay_]; }

    std::vector<double> vector(std::size_t i) const {
        std::vector<double> v(dim_);
        for (int c = 0; c < dim_; ++c) v[c] = (*this)(i, c);
        return v;
    }

private:
    std::vector<double> series_;
    int delay_;
    int dim_;
};

inline DelayCloud embed(std::span<const double> series, int delay, int dim) {
    return DelayCloud(std::vector<double>(series.begin(), series.end()), delay, dim);
}

/// Embedding with the length needed for stretching at cfg.max_horizon.
inline DelayCloud embed(std::span<const double> series, const EmbeddingConfig& cfg) {
    cfg.validate();
    const std::size_t need = static_cast<std::size_t>((cfg.dim - 1) * cfg.delay + cfg.max_horizon + 1);
    if (series.size() <= need)
        throw InsufficientData("series of " + std::to_string(series.size()) + " samples is too short; need more than " +
                               std::to_string(need));
    return embed(series, cfg.delay, cfg.dim);
}

struct StretchingCurve {
    std::vector<int> horizons;
    std::vector<double> s_values;
    std::size_t valid_refs = 0;
    std::size_t degenerate_refs = 0;
    double epsilon = 0.0;
};

using NeighborObserver = std::function<void(std::size_t reference, std::size_t neighbor)>;

inline StretchingCurve stretching(const DelayCloud& cloud, const EmbeddingConfig& cfg,
                                  const NeighborObserver& on_pair = {}) {
    cfg.validate();
    const std::vector<double>& x = cloud.series();
    const int dim = cloud.dim();
    const int delay = cloud.delay();
    const std::size_t last = static_cast<std::size_t>(cloud.last_offset());
    const std::size_t H = static_cast<std::size_t>(cfg.max_horizon);
    if (x.size() <= last + H + 1) throw InsufficientData("series too short for the requested horizon");
    // Points whose future up to horizon H exists.
    const std::size_t R = x.size() - last - H;

    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it;
    const double extent = *hi_it - lo;
    if (!(extent > 0.0)) throw EstimationFailure("series has zero extent; increase scale or check the input");
    const double eps = cfg.scale * extent;
    const double resolution = extent * std::numeric_limits<double>::epsilon();

    // Box grid on (first, last) coordinates; box side >= eps.
    constexpr std::size_t kMaxBoxes = 1024;
    const double box = std::max(eps, extent / static_cast<double>(kMaxBoxes - 1));
    const std::size_t nb = static_cast<std::size_t>(extent / box) + 1;
    auto box_of = [&](double v) {
        return std::min(nb - 1, static_cast<std::size_t>((v - lo) / box));
    };
    std::vector<std::ptrdiff_t> head(nb * nb, -1), next(R, -1);
    for (std::size_t j = R; j-- > 0;) {
        const std::size_t b = box_of(x[j]) * nb + box_of(x[j + last]);
        next[j] = head[b];
        head[b] = static_cast<std::ptrdiff_t>(j);
    }

    std::vector<std::size_t> refs;
    if (cfg.references > 0 && static_cast<std::size_t>(cfg.references) < R) {
        refs.reserve(cfg.references);
        for (std::size_t k = 0; k < static_cast<std::size_t>(cfg.references); ++k) refs.push_back(k * R / cfg.references);
    } else {
        refs.resize(R);
        for (std::size_t k = 0; k < R; ++k) refs[k] = k;
    }

    StretchingCurve curve;
    curve.epsilon = eps;
    curve.horizons.resize(H + 1);
    for (std::size_t h = 0; h <= H; ++h) curve.horizons[h] = static_cast<int>(h);
    std::vector<double> sum(H + 1, 0.0), div(H + 1);
    std::vector<std::size_t> nbrs;

    for (const std::size_t i : refs) {
        nbrs.clear();
        const std::size_t bi = box_of(x[i]), bj = box_of(x[i + last]);
        for (std::size_t a = (bi > 0 ? bi - 1 : 0); a <= std::min(nb - 1, bi + 1); ++a) {
            for (std::size_t b = (bj > 0 ? bj - 1 : 0); b <= std::min(nb - 1, bj + 1); ++b) {
                for (std::ptrdiff_t jj = head[a * nb + b]; jj >= 0; jj = next[jj]) {
                    const std::size_t j = static_cast<std::size_t>(jj);
                    const std::size_t sep = i > j ? i - j : j - i;
                    if (sep <= static_cast<std::size_t>(cfg.theiler)) continue;
                    bool close = true;
                    for (int c = 0; c < dim && close; ++c)
                        close = std::abs(x[i + c * delay] - x[j + c * delay]) < eps;
                    if (close) nbrs.push_back(j);
                }
            }
        }
        if (nbrs.size() < static_cast<std::size_t>(cfg.min_neighbors)) continue;
        // Deterministic summation order regardless of box traversal.
        std::sort(nbrs.begin(), nbrs.end());
        if (on_pair)
            for (std::size_t j : nbrs) on_pair(i, j);

        std::fill(div.begin(), div.end(), 0.0);
        for (std::size_t j : nbrs) {
            for (std::size_t h = 0; h <= H; ++h) {
                double d;
                if (cfg.vector_divergence) {
                    d = 0.0;
                    for (int c = 0; c < dim; ++c) d = std::max(d, std::abs(x[i + c * delay + h] - x[j + c * delay + h]));
                } else {
                    d = std::abs(x[i + last + h] - x[j + last + h]);
                }
                div[h] += d;
            }
        }
        // A neighbourhood of exact copies (over the whole horizon) carries no
        // divergence information. Isolated zeros are below the resolution of
        // the data and are floored there instead of giving ln 0.
        if (std::all_of(div.begin(), div.end(), [](double d) { return !(d > 0.0); })) {
            ++curve.degenerate_refs;
            continue;
        }
        for (std::size_t h = 0; h <= H; ++h)
            sum[h] += std::log(std::max(div[h] / static_cast<double>(nbrs.size()), resolution));
        ++curve.valid_refs;
    }
    if (curve.valid_refs == 0 && curve.degenerate_refs > 0)
        throw EstimationFailure("every neighbourhood consists of exact copies (zero divergence); the exponent is undefined");
    if (curve.valid_refs == 0)
        throw EstimationFailure("no reference point has " + std::to_string(cfg.min_neighbors) +
                                " neighbours; increase the scale");
    curve.s_values.resize(H + 1);
    for (std::size_t h = 0; h <= H; ++h) curve.s_values[h] = sum[h] / static_cast<double>(curve.valid_refs);
    return curve;
}

struct LyapunovEstimate {
    double lambda_per_sample = 0.0;
    double lambda_per_unit_time = 0.0;
    std::pair<int, int> fit_range{0, 0};  // inclusive horizons
    double fit_residual = 0.0;            // RMS residual of the line
    bool flat = false;
};

/// Least-squares line through S over the inclusive horizon range.
inline LyapunovEstimate fit_lambda(const StretchingCurve& curve, std::pair<int, int> range, double sample_spacing = 1.0) {
    const int n1 = range.first, n2 = range.second;
    if (n1 < 0 || n2 >= static_cast<int>(curve.s_values.size()) || n2 - n1 + 1 < 3)
        throw InvalidParameter("fit_range", "must lie inside the curve and span >= 3 horizons");
    if (!(sample_spacing > 0.0)) throw InvalidParameter("sample_spacing", "must be > 0");
    LyapunovEstimate est;
    est.fit_range = range;
    const double n = n2 - n1 + 1;
    double mx = 0.0, my = 0.0;
    for (int h = n1; h <= n2; ++h) {
        mx += curve.horizons[h];
        my += curve.s_values[h];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int h = n1; h <= n2; ++h) {
        const double dx = curve.horizons[h] - mx, dy = curve.s_values[h] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (syy <= 1e-28 * std::max(1.0, my * my)) {
        est.flat = true;
        return est;
    }
    est.lambda_per_sample = sxy / sxx;
    const double sse = std::max(0.0, syy - sxy * sxy / sxx);
    est.fit_residual = std::sqrt(sse / n);
    est.lambda_per_unit_time = est.lambda_per_sample / sample_spacing;
    return est;
}

struct AutoFitOptions {
    int min_points = 8;
    double band = 0.05;       // excluded fraction near the floor and saturation
    double tolerance = 1.5;   // accepted RMS residual relative to the best window
    bool anchor_at_onset = true;  // windows start where S leaves the floor band
    // A curve whose maximum comes at or before this horizon has no growth
    // region, only the embedding transient, and is fitted over its whole
    // length. Negative means the Theiler window; 0 disables the check.
    int transient_horizon = -1;
};

/// Automatic fit window: horizons whose S lies outside the bands near S(0)
/// and near max S; among contiguous windows of >= min_points the longest
/// whose RMS residual is within `tolerance` of the best one. Without such a
/// window the longest eligible run (>= 3 points) is used, else everything.
inline std::pair<int, int> auto_fit_range(const StretchingCurve& curve, const AutoFitOptions& opt = {}) {
    const auto& s = curve.s_values;
    const int H = static_cast<int>(s.size()) - 1;
    const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
    const double span = *mx - *mn;
    if (!(span > 0.0) || H + 1 < opt.min_points) return {0, H};
    if (opt.transient_horizon > 0 && H > opt.transient_horizon && mx - s.begin() <= opt.transient_horizon)
        return {0, H};
    const double floor_lo = s[0] - opt.band * span, floor_hi = s[0] + opt.band * span;
    const double sat_lo = *mx - opt.band * span;
    std::vector<char> ok(H + 1);
    for (int h = 0; h <= H; ++h) ok[h] = !(s[h] >= floor_lo && s[h] <= floor_hi) && !(s[h] >= sat_lo);

    // Prefix sums for O(1) window regression.
    std::vector<double> px(H + 2, 0.0), py(H + 2, 0.0), pxx(H + 2, 0.0), pxy(H + 2, 0.0), pyy(H + 2, 0.0);
    for (int h = 0; h <= H; ++h) {
        const double x = h, y = s[h];
        px[h + 1] = px[h] + x;
        py[h + 1] = py[h] + y;
        pxx[h + 1] = pxx[h] + x * x;
        pxy[h + 1] = pxy[h] + x * y;
        pyy[h + 1] = pyy[h] + y * y;
    }
    auto rms = [&](int a, int b) {
        const double n = b - a + 1;
        const double sx = px[b + 1] - px[a], sy = py[b + 1] - py[a];
        const double sxx = pxx[b + 1] - pxx[a] - sx * sx / n;
        const double sxy = pxy[b + 1] - pxy[a] - sx * sy / n;
        const double syy = pyy[b + 1] - pyy[a] - sy * sy / n;
        return std::sqrt(std::max(0.0, syy - (sxx > 0 ? sxy * sxy / sxx : 0.0)) / n);
    };

    struct Window {
        int a, b;
        double r;
    };
    std::vector<Window> windows;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= H;) {
        if (!ok[a]) {
            ++a;
            continue;
        }
        int b = a;
        while (b + 1 <= H && ok[b + 1]) ++b;
        for (int i = a; i <= (opt.anchor_at_onset ? a : b); ++i)
            for (int j = i + opt.min_points - 1; j <= b; ++j) {
                const double r = rms(i, j);
                windows.push_back({i, j, r});
                best = std::min(best, r);
            }
        if (opt.anchor_at_onset) break;
        a = b + 1;
    }
    if (windows.empty()) {
        // No window of min_points: the longest eligible run, if it can carry a line.
        int best_a = 0, best_b = -1;
        for (int a = 0; a <= H;) {
            if (!ok[a]) {
                ++a;
                continue;
            }
            int b = a;
            while (b + 1 <= H && ok[b + 1]) ++b;
            if (b - a > best_b - best_a) best_a = a, best_b = b;
            a = b + 1;
        }
        if (best_b - best_a + 1 >= 3) return {best_a, best_b};
        return {0, H};
    }
    const Window* pick = nullptr;
    for (const auto& w : windows) {
        if (w.r > opt.tolerance * best + 1e-15) continue;
        if (!pick || (w.b - w.a) > (pick->b - pick->a)) pick = &w;
    }
    return {pick->a, pick->b};
}

/// embed -> stretching -> fit on the <Phi> series of a (trimmed) trajectory.
inline LyapunovEstimate lambda_of_series(std::span<const double> series, double sample_spacing,
                                         const EmbeddingConfig& cfg,
                                         std::optional<std::pair<int, int>> fit_range = std::nullopt,
                                         StretchingCurve* curve_out = nullptr, const AutoFitOptions& fit = {}) {
    const DelayCloud cloud = embed(series, cfg);
    StretchingCurve curve = stretching(cloud, cfg);
    AutoFitOptions opt = fit;
    if (opt.transient_horizon < 0) opt.transient_horizon = cfg.theiler;
    const auto range = fit_range ? *fit_range : auto_fit_range(curve, opt);
    LyapunovEstimate est = fit_lambda(curve, range, sample_spacing);
    if (curve_out) *curve_out = std::move(curve);
    return est;
}

inline LyapunovEstimate lambda_of_trajectory(const TrajectoryRecord& tr, const EmbeddingConfig& cfg,
                                             std::optional<std::pair<int, int>> fit_range = std::nullopt,
                                             std::size_t first_sample = 0, std::size_t count = 0,
                                             StretchingCurve* curve_out = nullptr, const AutoFitOptions& fit = {}) {
    if (first_sample >= tr.size()) throw InsufficientData("trajectory shorter than the transient");
    const std::size_t avail = tr.size() - first_sample;
    if (count == 0 || count > avail) count = avail;
    const std::span<const double> series(tr.mean_phi.data() + first_sample, count);
    return lambda_of_series(series, tr.sample_spacing(), cfg, fit_range, curve_out, fit);
}

inline void write_stretching_csv(std::ostream& os, const StretchingCurve& c) {
    os << "horizon,s_value,valid_refs\n";
    for (std::size_t h = 0; h < c.s_values.size(); ++h)
        os << c.horizons[h] << ',' << format_g17(c.s_values[h]) << ',' << c.valid_refs << '\n';
}

}  // namespace squidqct
