#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rainbench {

enum class ErrorKind {
    parse,
    validation,
    imputation,
    alignment,
    insufficient_data,
    empty_subset,
    dimension_mismatch,
    config,
    io,
};

const char* to_string(ErrorKind kind);

// Single exception type for every recoverable failure in the library; the CLI
// maps it to exit code 1.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::imputation: return "imputation";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::empty_subset: return "empty-subset";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

inline void require(bool condition, ErrorKind kind, std::string_view message)
{
    if (!condition) {
        throw Error(kind, std::string(message));
    }
}

} // namespace rainbench
