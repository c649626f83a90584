#pragma once

#include <stdexcept>
#include <string>

namespace cfglyph {

// Every failure surfaces as a typed exception derived from Error. Messages are
// single-line and start with the failing input's name so CLI output stays
// machine-parseable.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define CFGLYPH_ERROR_TYPE(Name)                                    \
  class Name : public Error {                                       \
  public:                                                           \
    explicit Name(const std::string& msg)                           \
        : Error(std::string(#Name) + ": " + msg) {}                 \
  }

CFGLYPH_ERROR_TYPE(CycleError);
CFGLYPH_ERROR_TYPE(UnknownParentError);
CFGLYPH_ERROR_TYPE(UnknownAttributeError);
CFGLYPH_ERROR_TYPE(OutOfRangeError);
CFGLYPH_ERROR_TYPE(DimensionError);
CFGLYPH_ERROR_TYPE(ConfigError);
CFGLYPH_ERROR_TYPE(EmptyInputError);
CFGLYPH_ERROR_TYPE(BlankImageError);
CFGLYPH_ERROR_TYPE(EmptyConfigurationError);
CFGLYPH_ERROR_TYPE(SingularDesignError);
CFGLYPH_ERROR_TYPE(DegenerateDataError);
CFGLYPH_ERROR_TYPE(NonBinaryAttributeError);
CFGLYPH_ERROR_TYPE(NoFeasibleCheckpointError);
CFGLYPH_ERROR_TYPE(UnknownRowError);
CFGLYPH_ERROR_TYPE(NumericError);
CFGLYPH_ERROR_TYPE(FormatError);
CFGLYPH_ERROR_TYPE(IoError);

#undef CFGLYPH_ERROR_TYPE

}  // namespace cfglyph
