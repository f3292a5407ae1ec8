#include "tsd/error.hpp"

namespace tsd {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::all_zero_cross_matrix: return "AllZeroCrossMatrix";
    case Errc::non_finite: return "NonFinite";
    case Errc::zero_cross: return "ZeroCross";
    case Errc::zero_background: return "ZeroBackground";
    case Errc::not_hermitian: return "NotHermitian";
    case Errc::not_psd: return "NotPSD";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::insufficient_clicks: return "InsufficientClicks";
    case Errc::zero_trace: return "ZeroTrace";
    case Errc::all_zero: return "AllZero";
    case Errc::bad_partition: return "BadPartition";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::parse_error: return "ParseError";
    case Errc::validation_error: return "ValidationError";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

}  // namespace tsd
