#pragma once

#include <stdexcept>
#include <string>

namespace seqloc {

// Base class for everything this library throws on contract violations.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroQuaternionError : Error { using Error::Error; };
struct EmptyListError : Error { using Error::Error; };
struct BehindCameraError : Error { using Error::Error; };
struct DegeneratePointError : Error { using Error::Error; };
struct ShapeMismatchError : Error { using Error::Error; };
struct DimensionMismatchError : Error { using Error::Error; };
struct LengthMismatchError : Error { using Error::Error; };
struct CacheMismatchError : Error { using Error::Error; };
struct TooFewFramesError : Error { using Error::Error; };
struct DegenerateOrientationTermError : Error { using Error::Error; };
struct NonFiniteGradientError : Error { using Error::Error; };
struct NonFiniteLossError : Error { using Error::Error; };
struct ConfigMismatchError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace seqloc
