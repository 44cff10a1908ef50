#include "cif/error.hpp"

namespace cif {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::TruncatedFile: return "TruncatedFile";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::VersionUnsupported: return "VersionUnsupported";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::AllDepthMissing: return "AllDepthMissing";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::TooFewForeground: return "TooFewForeground";
        case ErrorCode::EmptyHyperedge: return "EmptyHyperedge";
        case ErrorCode::DegenerateHypergraph: return "DegenerateHypergraph";
        case ErrorCode::EmptyBucket: return "EmptyBucket";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::EmptyBank: return "EmptyBank";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptySet: return "EmptySet";
        case ErrorCode::DegenerateCloud: return "DegenerateCloud";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::NoAnomalousPixels: return "NoAnomalousPixels";
    }
    return "UnknownError";
}

}  // namespace cif
