#ifndef CIF_ERROR_HPP
#define CIF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cif {

enum class ErrorCode {
    BadMagic,
    TruncatedFile,
    NonFiniteValue,
    VersionUnsupported,
    IoFailure,
    AllDepthMissing,
    InvalidConfig,
    TooFewPoints,
    TooFewForeground,
    EmptyHyperedge,
    DegenerateHypergraph,
    EmptyBucket,
    DimMismatch,
    EmptyInput,
    KTooLarge,
    ShapeMismatch,
    EmptyBank,
    LengthMismatch,
    EmptySet,
    DegenerateCloud,
    SingleClass,
    NoAnomalousPixels,
};

const char* error_code_name(ErrorCode code);

class CifError : public std::runtime_error {
public:
    CifError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace cif

#endif
