#pragma once

#include <stdexcept>
#include <string>

namespace colorspace {

enum class ErrorKind {
    invalid_shape,
    invalid_target,
    invalid_probability,
    invalid_input,
    invalid_spec,
    division_hazard,
    decode,
    io,
    version,
    divergence,
    usage,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_shape: return "invalid-shape";
        case ErrorKind::invalid_target: return "invalid-target";
        case ErrorKind::invalid_probability: return "invalid-probability";
        case ErrorKind::invalid_input: return "invalid-input";
        case ErrorKind::invalid_spec: return "invalid-spec";
        case ErrorKind::division_hazard: return "division-hazard";
        case ErrorKind::decode: return "decode";
        case ErrorKind::io: return "io";
        case ErrorKind::version: return "version";
        case ErrorKind::divergence: return "divergence";
        case ErrorKind::usage: return "usage";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Process exit code for an error: 2 usage/config, 3 data, 4 numeric divergence.
inline int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::usage:
        case ErrorKind::invalid_spec:
        case ErrorKind::invalid_probability:
        case ErrorKind::version:
            return 2;
        case ErrorKind::divergence:
            return 4;
        default:
            return 3;
    }
}

}  // namespace colorspace
