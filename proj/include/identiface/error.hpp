#pragma once

#include <stdexcept>
#include <string>

namespace identiface {

/// Base of every error raised by the library. `code()` is a stable,
/// machine-readable tag used by the CLI and the HTTP service.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define IDENTIFACE_DEFINE_ERROR(Name, tag)                              \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& message) : Error(tag, message) {} \
  };

IDENTIFACE_DEFINE_ERROR(DimensionError, "dimension_error")
IDENTIFACE_DEFINE_ERROR(NumericError, "numeric_error")
IDENTIFACE_DEFINE_ERROR(LabelError, "label_error")
IDENTIFACE_DEFINE_ERROR(StateError, "state_error")
IDENTIFACE_DEFINE_ERROR(ParseError, "parse_error")
IDENTIFACE_DEFINE_ERROR(FormatError, "format_error")
IDENTIFACE_DEFINE_ERROR(RangeError, "range_error")
IDENTIFACE_DEFINE_ERROR(PlanError, "plan_error")
IDENTIFACE_DEFINE_ERROR(DataError, "data_error")
IDENTIFACE_DEFINE_ERROR(SpecError, "spec_error")
IDENTIFACE_DEFINE_ERROR(DegeneracyError, "degeneracy_error")
IDENTIFACE_DEFINE_ERROR(InfeasibleError, "infeasible_error")
IDENTIFACE_DEFINE_ERROR(ConfigError, "config_error")

#undef IDENTIFACE_DEFINE_ERROR

}  // namespace identiface
