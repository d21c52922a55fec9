#include "earscan/error.hpp"

namespace earscan {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Io: return "io error";
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::UnsupportedFace: return "unsupported face";
        case ErrorKind::Index: return "index error";
        case ErrorKind::EmptyInput: return "empty input";
        case ErrorKind::EmptySelection: return "empty selection";
        case ErrorKind::MissingAttribute: return "missing attribute";
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::Shape: return "shape error";
        case ErrorKind::DegenerateFit: return "degenerate fit";
        case ErrorKind::DegenerateWeights: return "degenerate weights";
        case ErrorKind::ZeroMean: return "zero mean";
        case ErrorKind::UndefinedCorrelation: return "undefined correlation";
        case ErrorKind::Division: return "division error";
        case ErrorKind::Size: return "size error";
        case ErrorKind::DegenerateFace: return "degenerate face";
        case ErrorKind::Dataset: return "dataset error";
        case ErrorKind::InsufficientData: return "insufficient data";
    }
    return "error";
}

}  // namespace earscan
