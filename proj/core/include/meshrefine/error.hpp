#pragma once

#include <stdexcept>
#include <string>

namespace meshrefine {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind {
    Usage,    // bad flags / bad config values          -> exit 2
    Data,     // unreadable or invalid input data        -> exit 3
    Numeric,  // NaN/Inf or divergence during a run      -> exit 4
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) { throw Error(ErrorKind::Usage, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorKind::Data, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(ErrorKind::Numeric, msg); }

}  // namespace meshrefine
