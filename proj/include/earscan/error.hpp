#pragma once

#include <stdexcept>
#include <string>

namespace earscan {

enum class ErrorKind {
    Io,
    Parse,
    UnsupportedFace,
    Index,
    EmptyInput,
    EmptySelection,
    MissingAttribute,
    Domain,
    Shape,
    DegenerateFit,
    DegenerateWeights,
    ZeroMean,
    UndefinedCorrelation,
    Division,
    Size,
    DegenerateFace,
    Dataset,
    InsufficientData,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; the kind drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace earscan
