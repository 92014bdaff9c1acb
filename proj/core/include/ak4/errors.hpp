#pragma once

#include <stdexcept>
#include <string>

namespace ak4 {

// Base class for all ak4 failures. Each concrete type corresponds to one
// contract violation, so callers can catch exactly what they can handle.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// pointwise
struct IncompatiblePair : Error { using Error::Error; };
struct NotPositive : Error { using Error::Error; };
struct NotSymmetric : Error { using Error::Error; };
struct NotInCone : Error { using Error::Error; };

// projgeom
struct BadDimension : Error { using Error::Error; };
struct NotOnGrassmannian : Error { using Error::Error; };
struct QuaternionicStructure : Error { using Error::Error; };
struct NotRealLine : Error { using Error::Error; };
struct NotIsotropic : Error { using Error::Error; };
struct RealIntersection : Error { using Error::Error; };
struct DegenerateConfiguration : Error { using Error::Error; };
struct IncompatibleOrientation : Error { using Error::Error; };

// hodge
struct BadDegree : Error { using Error::Error; };
struct SolverDiverged : Error { using Error::Error; };
struct NegativeSquare : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// experiments
struct VolumeMismatch : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace ak4
