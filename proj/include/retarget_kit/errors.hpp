#pragma once

#include <stdexcept>
#include <string>

namespace rkit {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs that violate a documented precondition (shapes, names, schemas).
/// The command line tool maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Inputs that are well-formed but numerically unusable (degenerate geometry,
/// non-finite objectives). The command line tool maps these to exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

#define RKIT_DEFINE_ERROR(Name, Base) \
  class Name : public Base {          \
   public:                            \
    using Base::Base;                 \
  };

// rotations
RKIT_DEFINE_ERROR(DegenerateBone, NumericError)
RKIT_DEFINE_ERROR(RankDeficient, NumericError)
RKIT_DEFINE_ERROR(DegenerateFrame, NumericError)
RKIT_DEFINE_ERROR(InvalidRotation, ValidationError)

// skeleton
RKIT_DEFINE_ERROR(InvalidSkeleton, ValidationError)
RKIT_DEFINE_ERROR(PoseMismatch, ValidationError)
RKIT_DEFINE_ERROR(MissingDefault, ValidationError)

// retarget
RKIT_DEFINE_ERROR(UnresolvableCorrespondence, ValidationError)
RKIT_DEFINE_ERROR(NonFiniteObjective, NumericError)

// vq / metrics
RKIT_DEFINE_ERROR(DimensionMismatch, ValidationError)
RKIT_DEFINE_ERROR(LengthMismatch, ValidationError)
RKIT_DEFINE_ERROR(MissingHeights, ValidationError)
RKIT_DEFINE_ERROR(DegenerateSample, ValidationError)
RKIT_DEFINE_ERROR(TooFewSamples, ValidationError)
RKIT_DEFINE_ERROR(GroupTooSmall, ValidationError)
RKIT_DEFINE_ERROR(PoolTooLarge, ValidationError)

// io / features
RKIT_DEFINE_ERROR(MissingContactMarkers, ValidationError)
RKIT_DEFINE_ERROR(SchemaVersionError, ValidationError)

#undef RKIT_DEFINE_ERROR

/// Malformed file. Carries the file path and a location, which is either
/// "line L, column C" for syntax errors or a JSON pointer for schema errors.
class ParseError : public ValidationError {
 public:
  ParseError(std::string path, std::string location, std::string reason)
      : ValidationError(path + ": " + location + ": " + reason),
        path_(std::move(path)),
        location_(std::move(location)),
        reason_(std::move(reason)) {}

  const std::string& path() const noexcept {
    return path_;
  }
  const std::string& location() const noexcept {
    return location_;
  }
  const std::string& reason() const noexcept {
    return reason_;
  }

 private:
  std::string path_;
  std::string location_;
  std::string reason_;
};

} // namespace rkit
