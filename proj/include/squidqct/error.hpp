#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>

namespace squidqct {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    InvalidParameter(std::string field, const std::string& what)
        : Error("invalid parameter '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Probability weight escaped into the top of the truncated basis.
class TruncationError : public Error {
public:
    TruncationError(double time, double leakage)
        : Error("truncation leakage " + std::to_string(leakage) + " at t=" + std::to_string(time)),
          time_(time), leakage_(leakage) {}
    double time() const noexcept { return time_; }
    double leakage() const noexcept { return leakage_; }

private:
    double time_;
    double leakage_;
};

class NumericalBlowup : public Error {
public:
    explicit NumericalBlowup(long long step)
        : Error("non-finite amplitude at step " + std::to_string(step)), step_(step) {}
    long long step() const noexcept { return step_; }

private:
    long long step_;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class EstimationFailure : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Raised by the master-equation oracle; it is a test tool and must be loud.
class OracleFailure : public Error {
public:
    using Error::Error;
};

// -----------------------------------------------------------------------------
// Warnings
// -----------------------------------------------------------------------------

using WarningSink = std::function<void(const std::string&)>;

namespace detail {
inline std::mutex& warning_mutex() {
    static std::mutex m;
    return m;
}
inline WarningSink& warning_sink() {
    static WarningSink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
    return sink;
}
}  // namespace detail

/// Replace the process-wide warning sink; returns the previous one.
inline WarningSink set_warning_sink(WarningSink sink) {
    std::lock_guard lock(detail::warning_mutex());
    return std::exchange(detail::warning_sink(), std::move(sink));
}

inline void warn(const std::string& msg) {
    std::lock_guard lock(detail::warning_mutex());
    if (detail::warning_sink()) detail::warning_sink()(msg);
}

}  // namespace squidqct
