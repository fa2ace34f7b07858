#pragma once

// Run configuration: one INI file with sections [physical], [integrator],
// [embedding] and [sweep]. Every key is optional and defaults to the values
// below; unknown sections or keys are an error. The hash covers the full
// effective configuration, so any changed value changes it.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "squidqct/circuit.hpp"
#include "squidqct/error.hpp"
#include "squidqct/lyapunov.hpp"
#include "squidqct/observables.hpp"
#include "squidqct/qsd.hpp"

namespace squidqct {

enum class AlphaConvention { Direct, Halved };
enum class StreamPolicy { Shared, PerD };
enum class LambdaUnit { PerTime, PerSample };

struct PhysicalSection {
    std::string parameter_set = "2.6";
    // Overrides of the chosen set; empty means "take it from the set".
    std::optional<double> C, L, Ic, omega_d_ratio, phi_ex0_ratio;
    double alpha0_re = 0.877;
    double alpha0_im = -0.566;
    AlphaConvention alpha_convention = AlphaConvention::Direct;
    double D = 0.25;  // coupling for single-trajectory subcommands
};

struct IntegratorSection {
    Scheme scheme = Scheme::Rk4Drift;
    int steps_per_period = 2048;
    int samples_per_period = 64;
    int N = 64;
    bool moving_frame = true;
    int renormalize_every = 1;
    double leakage_limit = 1e-4;
    double recenter_quanta = 0.0;
    int transient_periods = kDefaultTransientPeriods;
    int record_periods = 512;
    std::uint64_t seed = 20240601;
    std::uint64_t stream = 0;
};

struct EmbeddingSection {
    EmbeddingConfig embedding;
    AutoFitOptions fit;
    std::optional<std::pair<int, int>> fit_range;  // unset: automatic
    int series_length = 32768;
    LambdaUnit unit = LambdaUnit::PerTime;
};

struct SweepSection {
    std::vector<std::string> labels{"1", "1.2", "1.4", "1.9", "2.6"};
    double D_min = 0.23;
    double D_max = 1.0;
    int D_count = 28;
    std::vector<double> D_values;  // explicit grid, overrides min/max/count
    int replicates = 1;
    StreamPolicy stream_policy = StreamPolicy::Shared;
    int section_points = kDefaultSectionPoints;
    double section_phase = 0.0;
    int delta_window_periods = kDefaultDeltaWindowPeriods;
    double linkage_fraction = kDefaultLinkageFraction;
    bool save_trajectories = false;
};

struct RunConfig {
    PhysicalSection physical;
    IntegratorSection integrator;
    EmbeddingSection embedding;
    SweepSection sweep;

    /// Canonical "section.key=value" lines of every effective value.
    std::string canonical() const;
    std::uint64_t hash() const;
    std::string hash_hex() const;
    void validate() const;
};

namespace detail {

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double to_double(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    double out = 0.0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || p != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    return out;
}

inline long long to_int(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    long long out = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || p != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || p != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
    return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

inline std::string fmt(double v) { return format_g17(v); }

inline std::string fmt(const std::optional<double>& v) { return v ? format_g17(*v) : std::string("default"); }

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto opt = [](std::optional<double> PhysicalSection::*f, const char* k) {
            return Setter([f, k](RunConfig& c, const std::string& v) { c.physical.*f = to_double(k, v); });
        };
        t["physical.parameter_set"] = [](RunConfig& c, const std::string& v) { c.physical.parameter_set = trim(v); };
        t["physical.C"] = opt(&PhysicalSection::C, "physical.C");
        t["physical.L"] = opt(&PhysicalSection::L, "physical.L");
        t["physical.Ic"] = opt(&PhysicalSection::Ic, "physical.Ic");
        t["physical.omega_d_ratio"] = opt(&PhysicalSection::omega_d_ratio, "physical.omega_d_ratio");
        t["physical.phi_ex0_ratio"] = opt(&PhysicalSection::phi_ex0_ratio, "physical.phi_ex0_ratio");
        t["physical.alpha0_re"] = [](RunConfig& c, const std::string& v) { c.physical.alpha0_re = to_double("physical.alpha0_re", v); };
        t["physical.alpha0_im"] = [](RunConfig& c, const std::string& v) { c.physical.alpha0_im = to_double("physical.alpha0_im", v); };
        t["physical.alpha_convention"] = [](RunConfig& c, const std::string& v) {
            const std::string s = trim(v);
            if (s == "direct") c.physical.alpha_convention = AlphaConvention::Direct;
            else if (s == "halved") c.physical.alpha_convention = AlphaConvention::Halved;
            else throw ConfigError("physical.alpha_convention: expected direct or halved, got '" + v + "'");
        };
        t["physical.D"] = [](RunConfig& c, const std::string& v) { c.physical.D = to_double("physical.D", v); };

        t["integrator.scheme"] = [](RunConfig& c, const std::string& v) {
            try {
                c.integrator.scheme = parse_scheme(trim(v));
            } catch (const Error& e) {
                throw ConfigError(std::string("integrator.scheme: ") + e.what());
            }
        };
        t["integrator.steps_per_period"] = [](RunConfig& c, const std::string& v) { c.integrator.steps_per_period = static_cast<int>(to_int("integrator.steps_per_period", v)); };
        t["integrator.samples_per_period"] = [](RunConfig& c, const std::string& v) { c.integrator.samples_per_period = static_cast<int>(to_int("integrator.samples_per_period", v)); };
        t["integrator.N"] = [](RunConfig& c, const std::string& v) { c.integrator.N = static_cast<int>(to_int("integrator.N", v)); };
        t["integrator.moving_frame"] = [](RunConfig& c, const std::string& v) { c.integrator.moving_frame = to_bool("integrator.moving_frame", v); };
        t["integrator.renormalize_every"] = [](RunConfig& c, const std::string& v) { c.integrator.renormalize_every = static_cast<int>(to_int("integrator.renormalize_every", v)); };
        t["integrator.leakage_limit"] = [](RunConfig& c, const std::string& v) { c.integrator.leakage_limit = to_double("integrator.leakage_limit", v); };
        t["integrator.recenter_quanta"] = [](RunConfig& c, const std::string& v) { c.integrator.recenter_quanta = to_double("integrator.recenter_quanta", v); };
        t["integrator.transient_periods"] = [](RunConfig& c, const std::string& v) { c.integrator.transient_periods = static_cast<int>(to_int("integrator.transient_periods", v)); };
        t["integrator.record_periods"] = [](RunConfig& c, const std::string& v) { c.integrator.record_periods = static_cast<int>(to_int("integrator.record_periods", v)); };
        t["integrator.seed"] = [](RunConfig& c, const std::string& v) { c.integrator.seed = to_u64("integrator.seed", v); };
        t["integrator.stream"] = [](RunConfig& c, const std::string& v) { c.integrator.stream = to_u64("integrator.stream", v); };

        t["embedding.delay"] = [](RunConfig& c, const std::string& v) { c.embedding.embedding.delay = static_cast<int>(to_int("embedding.delay", v)); };
        t["embedding.dim"] = [](RunConfig& c, const std::string& v) { c.embedding.embedding.dim = static_cast<int>(to_int("embedding.dim", v)); };
        t["embedding.theiler"] = [](RunConfig& c, const std::string& v) { c.embedding.embedding.theiler = static_cast<int>(to_int("embedding.theiler", v)); };
        t["embedding.scale"] = [](RunConfig& c, const std::string& v) { c.embedding.embedding.scale = to_double("embedding.scale", v); };
        t["embedding.max_horizon"] = [](RunConfig& c, const std::string& v) { c.embedding.embedding.max_horizon = static_cast<int>(to_int("embedding.max_horizon", v)); };
        t["embedding.min_neighbors"] = [](RunConfig& c, const std::string& v) { c.embedding.embedding.min_neighbors = static_cast<int>(to_int("embedding.min_neighbors", v)); };
        t["embedding.references"] = [](RunConfig& c, const std::string& v) { c.embedding.embedding.references = static_cast<int>(to_int("embedding.references", v)); };
        t["embedding.divergence"] = [](RunConfig& c, const std::string& v) {
            const std::string s = trim(v);
            if (s == "scalar") c.embedding.embedding.vector_divergence = false;
            else if (s == "vector") c.embedding.embedding.vector_divergence = true;
            else throw ConfigError("embedding.divergence: expected scalar or vector, got '" + v + "'");
        };
        t["embedding.fit_range"] = [](RunConfig& c, const std::string& v) {
            const std::string s = trim(v);
            if (s == "auto") {
                c.embedding.fit_range.reset();
                return;
            }
            const auto parts = split_list(s);
            if (parts.size() != 2) throw ConfigError("embedding.fit_range: expected 'auto' or 'first,last', got '" + v + "'");
            c.embedding.fit_range = std::pair<int, int>(static_cast<int>(to_int("embedding.fit_range", parts[0])),
                                                        static_cast<int>(to_int("embedding.fit_range", parts[1])));
        };
        t["embedding.fit_min_points"] = [](RunConfig& c, const std::string& v) { c.embedding.fit.min_points = static_cast<int>(to_int("embedding.fit_min_points", v)); };
        t["embedding.fit_band"] = [](RunConfig& c, const std::string& v) { c.embedding.fit.band = to_double("embedding.fit_band", v); };
        t["embedding.fit_tolerance"] = [](RunConfig& c, const std::string& v) { c.embedding.fit.tolerance = to_double("embedding.fit_tolerance", v); };
        t["embedding.fit_anchor"] = [](RunConfig& c, const std::string& v) { c.embedding.fit.anchor_at_onset = to_bool("embedding.fit_anchor", v); };
        t["embedding.series_length"] = [](RunConfig& c, const std::string& v) { c.embedding.series_length = static_cast<int>(to_int("embedding.series_length", v)); };
        t["embedding.unit"] = [](RunConfig& c, const std::string& v) {
            const std::string s = trim(v);
            if (s == "time") c.embedding.unit = LambdaUnit::PerTime;
            else if (s == "sample") c.embedding.unit = LambdaUnit::PerSample;
            else throw ConfigError("embedding.unit: expected time or sample, got '" + v + "'");
        };

        t["sweep.labels"] = [](RunConfig& c, const std::string& v) { c.sweep.labels = split_list(v); };
        t["sweep.D_min"] = [](RunConfig& c, const std::string& v) { c.sweep.D_min = to_double("sweep.D_min", v); };
        t["sweep.D_max"] = [](RunConfig& c, const std::string& v) { c.sweep.D_max = to_double("sweep.D_max", v); };
        t["sweep.D_count"] = [](RunConfig& c, const std::string& v) { c.sweep.D_count = static_cast<int>(to_int("sweep.D_count", v)); };
        t["sweep.D_values"] = [](RunConfig& c, const std::string& v) {
            c.sweep.D_values.clear();
            for (const auto& s : split_list(v)) c.sweep.D_values.push_back(to_double("sweep.D_values", s));
        };
        t["sweep.replicates"] = [](RunConfig& c, const std::string& v) { c.sweep.replicates = static_cast<int>(to_int("sweep.replicates", v)); };
        t["sweep.stream_policy"] = [](RunConfig& c, const std::string& v) {
            const std::string s = trim(v);
            if (s == "shared") c.sweep.stream_policy = StreamPolicy::Shared;
            else if (s == "per_d") c.sweep.stream_policy = StreamPolicy::PerD;
            else throw ConfigError("sweep.stream_policy: expected shared or per_d, got '" + v + "'");
        };
        t["sweep.section_points"] = [](RunConfig& c, const std::string& v) { c.sweep.section_points = static_cast<int>(to_int("sweep.section_points", v)); };
        t["sweep.section_phase"] = [](RunConfig& c, const std::string& v) { c.sweep.section_phase = to_double("sweep.section_phase", v); };
        t["sweep.delta_window_periods"] = [](RunConfig& c, const std::string& v) { c.sweep.delta_window_periods = static_cast<int>(to_int("sweep.delta_window_periods", v)); };
        t["sweep.linkage_fraction"] = [](RunConfig& c, const std::string& v) { c.sweep.linkage_fraction = to_double("sweep.linkage_fraction", v); };
        t["sweep.save_trajectories"] = [](RunConfig& c, const std::string& v) { c.sweep.save_trajectories = to_bool("sweep.save_trajectories", v); };
        return t;
    }();
    return table;
}

}  // namespace detail

inline std::string RunConfig::canonical() const {
    using detail::fmt;
    std::ostringstream os;
    const auto& p = physical;
    os << "physical.parameter_set=" << p.parameter_set << '\n'
       << "physical.C=" << fmt(p.C) << '\n'
       << "physical.L=" << fmt(p.L) << '\n'
       << "physical.Ic=" << fmt(p.Ic) << '\n'
       << "physical.omega_d_ratio=" << fmt(p.omega_d_ratio) << '\n'
       << "physical.phi_ex0_ratio=" << fmt(p.phi_ex0_ratio) << '\n'
       << "physical.alpha0_re=" << fmt(p.alpha0_re) << '\n'
       << "physical.alpha0_im=" << fmt(p.alpha0_im) << '\n'
       << "physical.alpha_convention=" << (p.alpha_convention == AlphaConvention::Direct ? "direct" : "halved") << '\n'
       << "physical.D=" << fmt(p.D) << '\n';
    const auto& i = integrator;
    os << "integrator.scheme=" << to_string(i.scheme) << '\n'
       << "integrator.steps_per_period=" << i.steps_per_period << '\n'
       << "integrator.samples_per_period=" << i.samples_per_period << '\n'
       << "integrator.N=" << i.N << '\n'
       << "integrator.moving_frame=" << (i.moving_frame ? "true" : "false") << '\n'
       << "integrator.renormalize_every=" << i.renormalize_every << '\n'
       << "integrator.leakage_limit=" << fmt(i.leakage_limit) << '\n'
       << "integrator.recenter_quanta=" << fmt(i.recenter_quanta) << '\n'
       << "integrator.transient_periods=" << i.transient_periods << '\n'
       << "integrator.record_periods=" << i.record_periods << '\n'
       << "integrator.seed=" << i.seed << '\n'
       << "integrator.stream=" << i.stream << '\n';
    const auto& e = embedding;
    os << "embedding.delay=" << e.embedding.delay << '\n'
       << "embedding.dim=" << e.embedding.dim << '\n'
       << "embedding.theiler=" << e.embedding.theiler << '\n'
       << "embedding.scale=" << fmt(e.embedding.scale) << '\n'
       << "embedding.max_horizon=" << e.embedding.max_horizon << '\n'
       << "embedding.min_neighbors=" << e.embedding.min_neighbors << '\n'
       << "embedding.references=" << e.embedding.references << '\n'
       << "embedding.divergence=" << (e.embedding.vector_divergence ? "vector" : "scalar") << '\n'
       << "embedding.fit_range=";
    if (e.fit_range) os << e.fit_range->first << ',' << e.fit_range->second;
    else os << "auto";
    os << '\n'
       << "embedding.fit_min_points=" << e.fit.min_points << '\n'
       << "embedding.fit_band=" << fmt(e.fit.band) << '\n'
       << "embedding.fit_tolerance=" << fmt(e.fit.tolerance) << '\n'
       << "embedding.fit_anchor=" << (e.fit.anchor_at_onset ? "true" : "false") << '\n'
       << "embedding.series_length=" << e.series_length << '\n'
       << "embedding.unit=" << (e.unit == LambdaUnit::PerTime ? "time" : "sample") << '\n';
    const auto& s = sweep;
    os << "sweep.labels=";
    for (std::size_t k = 0; k < s.labels.size(); ++k) os << (k ? "," : "") << s.labels[k];
    os << '\n'
       << "sweep.D_min=" << fmt(s.D_min) << '\n'
       << "sweep.D_max=" << fmt(s.D_max) << '\n'
       << "sweep.D_count=" << s.D_count << '\n'
       << "sweep.D_values=";
    for (std::size_t k = 0; k < s.D_values.size(); ++k) os << (k ? "," : "") << fmt(s.D_values[k]);
    os << '\n'
       << "sweep.replicates=" << s.replicates << '\n'
       << "sweep.stream_policy=" << (s.stream_policy == StreamPolicy::Shared ? "shared" : "per_d") << '\n'
       << "sweep.section_points=" << s.section_points << '\n'
       << "sweep.section_phase=" << fmt(s.section_phase) << '\n'
       << "sweep.delta_window_periods=" << s.delta_window_periods << '\n'
       << "sweep.linkage_fraction=" << fmt(s.linkage_fraction) << '\n'
       << "sweep.save_trajectories=" << (s.save_trajectories ? "true" : "false") << '\n';
    return os.str();
}

inline std::uint64_t RunConfig::hash() const { return detail::fnv1a(canonical()); }

inline std::string RunConfig::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

inline void RunConfig::validate() const {
    const auto& i = integrator;
    if (i.steps_per_period < 1) throw ConfigError("integrator.steps_per_period must be >= 1");
    if (i.samples_per_period < 1 || i.steps_per_period % i.samples_per_period != 0)
        throw ConfigError("integrator.samples_per_period must divide steps_per_period");
    if (i.N < 4) throw ConfigError("integrator.N must be >= 4");
    if (i.renormalize_every < 1) throw ConfigError("integrator.renormalize_every must be >= 1");
    if (!(i.leakage_limit > 0.0)) throw ConfigError("integrator.leakage_limit must be > 0");
    if (i.transient_periods < 0) throw ConfigError("integrator.transient_periods must be >= 0");
    if (i.record_periods < 1) throw ConfigError("integrator.record_periods must be >= 1");
    if (!(physical.D >= 0.0)) throw ConfigError("physical.D must be >= 0");
    try {
        embedding.embedding.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("embedding: ") + e.what());
    }
    if (embedding.series_length < 1) throw ConfigError("embedding.series_length must be >= 1");
    if (embedding.fit.min_points < 2) throw ConfigError("embedding.fit_min_points must be >= 2");
    if (embedding.fit_range && (embedding.fit_range->first < 0 || embedding.fit_range->second <= embedding.fit_range->first ||
                                embedding.fit_range->second > embedding.embedding.max_horizon))
        throw ConfigError("embedding.fit_range must satisfy 0 <= first < last <= max_horizon");
    const auto& s = sweep;
    if (s.labels.empty()) throw ConfigError("sweep.labels is empty");
    if (s.D_values.empty()) {
        if (s.D_count < 1) throw ConfigError("sweep.D_count must be >= 1");
        if (s.D_count > 1 && !(s.D_max > s.D_min)) throw ConfigError("sweep.D_max must exceed D_min");
        if (!(s.D_min >= 0.0)) throw ConfigError("sweep.D_min must be >= 0");
    } else {
        for (std::size_t k = 0; k < s.D_values.size(); ++k) {
            if (!(s.D_values[k] >= 0.0)) throw ConfigError("sweep.D_values must be >= 0");
            if (k > 0 && !(s.D_values[k] > s.D_values[k - 1])) throw ConfigError("sweep.D_values must be strictly increasing");
        }
    }
    if (s.replicates < 1) throw ConfigError("sweep.replicates must be >= 1");
    if (s.section_points < 1) throw ConfigError("sweep.section_points must be >= 1");
    if (s.delta_window_periods < 1) throw ConfigError("sweep.delta_window_periods must be >= 1");
    if (!(s.linkage_fraction > 0.0)) throw ConfigError("sweep.linkage_fraction must be > 0");
}

/// Parses INI text; throws ConfigError listing every unknown key.
inline RunConfig parse_config(std::istream& is) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }
    RunConfig cfg;
    const auto& table = detail::setters();
    std::vector<std::string> unknown;
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            // A key outside any section, or an empty section.
            const bool known = section == "physical" || section == "integrator" || section == "embedding" || section == "sweep";
            if (!body.data().empty() || !known) unknown.push_back(section);
            continue;
        }
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            const auto it = table.find(full);
            if (it == table.end()) unknown.push_back(full);
            else it->second(cfg, value.get_value<std::string>());
        }
    }
    if (!unknown.empty()) {
        std::string msg = "unknown configuration keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }
    cfg.validate();
    return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

}  // namespace squidqct
