#include "effica/metrics.hpp"

namespace effica {

Summary summarize(std::span<const double> frob_errors, std::span<const double> amari_errors) {
  if (frob_errors.empty() || frob_errors.size() != amari_errors.size()) {
    throw Error(ErrorKind::InvalidArgument, "summarize: need equal, nonzero lengths");
  }
  double amari = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < frob_errors.size(); ++i) {
    amari += amari_errors[i];
    sq += frob_errors[i] * frob_errors[i];
  }
  const double n = static_cast<double>(frob_errors.size());
  return {amari / n, std::sqrt(sq / n)};
}

}  // namespace effica
