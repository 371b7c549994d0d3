#pragma once

#include <stdexcept>
#include <string>

namespace fpd {

// Error categories double as the machine-parsable tokens printed by the CLI.
enum class ErrorCategory {
    Shape,     // tensor/layer dimension mismatch
    Param,     // invalid hyperparameter or argument value
    Label,     // target outside the admitted label set
    Numeric,   // non-finite value where finiteness is required
    Spec,      // malformed subset/contour specification
    Input,     // malformed raw input (image, landmark file, ...)
    Ingest,    // manifest/record validation failure
    Protocol,  // evaluation protocol violation (e.g. < 2 patients)
    Config,    // malformed model or run configuration
    Tap,       // unknown embedding tap
    Io,        // filesystem read/write failure
    Parse,     // malformed structured file (report, config)
    Usage,     // bad command-line invocation
};

const char* category_name(ErrorCategory c);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }
    const char* category_str() const { return category_name(category_); }

private:
    ErrorCategory category_;
};

inline const char* category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Shape: return "shape";
        case ErrorCategory::Param: return "param";
        case ErrorCategory::Label: return "label";
        case ErrorCategory::Numeric: return "numeric";
        case ErrorCategory::Spec: return "spec";
        case ErrorCategory::Input: return "input";
        case ErrorCategory::Ingest: return "ingest";
        case ErrorCategory::Protocol: return "protocol";
        case ErrorCategory::Config: return "config";
        case ErrorCategory::Tap: return "tap";
        case ErrorCategory::Io: return "io";
        case ErrorCategory::Parse: return "parse";
        case ErrorCategory::Usage: return "usage";
    }
    return "unknown";
}

[[noreturn]] inline void raise(ErrorCategory c, const std::string& msg) {
    throw Error(c, msg);
}

}  // namespace fpd
