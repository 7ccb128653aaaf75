#pragma once

#include <stdexcept>
#include <string>

namespace effica {

enum class ErrorKind {
  InvalidArgument,
  DegenerateSample,
  SingularSystem,
  CvFailure,
  IllConditionedScale,
  SingularMatrix,
  SingularInformation,
  RankDeficient,
  DegenerateAlignment,
  Parse,
};

const char* to_string(ErrorKind kind) noexcept;

/// Numerical or argument failure raised by the library. The kind lets the CLI
/// map failures onto exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures that originate in the data rather than the numerics.
  bool is_data_error() const noexcept {
    return kind_ == ErrorKind::InvalidArgument || kind_ == ErrorKind::Parse ||
           kind_ == ErrorKind::DegenerateSample;
  }

 private:
  ErrorKind kind_;
};

}  // namespace effica
