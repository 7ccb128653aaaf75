#include "effica/error.hpp"

namespace effica {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::DegenerateSample: return "degenerate-sample";
    case ErrorKind::SingularSystem: return "singular-system";
    case ErrorKind::CvFailure: return "cv-failure";
    case ErrorKind::IllConditionedScale: return "ill-conditioned-scale";
    case ErrorKind::SingularMatrix: return "singular-matrix";
    case ErrorKind::SingularInformation: return "singular-information";
    case ErrorKind::RankDeficient: return "rank-deficient";
    case ErrorKind::DegenerateAlignment: return "degenerate-alignment";
    case ErrorKind::Parse: return "parse-error";
  }
  return "unknown";
}

}  // namespace effica
