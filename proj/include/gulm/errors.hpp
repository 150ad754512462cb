#pragma once

#include <stdexcept>
#include <string>

namespace gulm {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument, violated invariant or malformed configuration.
class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// On-disk container is malformed (bad magic, version, truncation).
class FormatError : public Error {
public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

/// Round-trip path shorter than the focal separation; no such ellipse exists.
class DegenerateEllipseError : public ValidationError {
public:
  explicit DegenerateEllipseError(const std::string& msg) : ValidationError(msg) {}
};

/// Two conics coincide; the intersection set is a whole curve.
class CoincidentCurvesError : public Error {
public:
  explicit CoincidentCurvesError(const std::string& msg) : Error(msg) {}
};

/// A metric has an empty denominator (no detections and no truth anywhere).
class UndefinedMetricError : public Error {
public:
  explicit UndefinedMetricError(const std::string& msg) : Error(msg) {}
};

} // namespace gulm
