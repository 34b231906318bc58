#pragma once

#include <stdexcept>
#include <string>

namespace pat {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PAT_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                   \
   public:                                                      \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  };

PAT_DEFINE_ERROR(InvalidGrid)
PAT_DEFINE_ERROR(GridMismatch)
PAT_DEFINE_ERROR(InvalidField)
PAT_DEFINE_ERROR(DepthTooLarge)
PAT_DEFINE_ERROR(ShapeMismatch)
PAT_DEFINE_ERROR(InvalidParams)
PAT_DEFINE_ERROR(InvalidIndex)
PAT_DEFINE_ERROR(SupportViolation)
PAT_DEFINE_ERROR(NotConverged)
PAT_DEFINE_ERROR(BadAperture)
PAT_DEFINE_ERROR(ZeroTruth)
PAT_DEFINE_ERROR(FormatError)
PAT_DEFINE_ERROR(ConfigError)

#undef PAT_DEFINE_ERROR

}  // namespace pat
