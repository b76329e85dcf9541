#pragma once

#include <stdexcept>
#include <string>

namespace ordcomp {

// Root of the library's error hierarchy. Input/format problems derive from
// InputError, solver failures from SolveError, broken internal invariants
// from InternalError. The CLI maps these to exit codes 2, 3 and 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InputError : public Error {
 public:
  using Error::Error;
};

class SolveError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

// core_types
struct InvalidValue : InputError { using InputError::InputError; };
struct DimensionMismatch : InputError { using InputError::InputError; };
struct ZeroWidthAxis : InputError { using InputError::InputError; };
struct EmptyPartition : InputError { using InputError::InputError; };

// gridfn
struct RadiusOrder : InputError { using InputError::InputError; };
struct GridMismatch : InputError { using InputError::InputError; };

// pwpoly
struct OutOfDomain : InputError { using InputError::InputError; };
struct OnSkeleton : InputError { using InputError::InputError; };
struct DomainMismatch : InputError { using InputError::InputError; };
struct ComplexMismatch : InputError { using InputError::InputError; };

// lattice
struct EmptyFamily : InputError { using InputError::InputError; };
struct NotNearlyFinite : InputError { using InputError::InputError; };
struct NotNested : InputError { using InputError::InputError; };
struct MixedMode : InputError { using InputError::InputError; };

// pdeop
struct SyntaxError : InputError {
  SyntaxError(const std::string& msg, int line, int col)
      : InputError(msg + " at line " + std::to_string(line) + ", col " +
                   std::to_string(col)),
        line(line),
        col(col) {}
  int line;
  int col;
};
struct UnknownFunction : InputError { using InputError::InputError; };
struct ArityError : InputError { using InputError::InputError; };
struct EvalDomain : Error { using Error::Error; };
struct NonpositiveViscosity : InputError { using InputError::InputError; };
struct DegreeTooLow : InputError { using InputError::InputError; };

// ordsolve
struct NoJetFound : SolveError { using SolveError::SolveError; };
struct DepthExhausted : SolveError { using SolveError::SolveError; };
struct CenterNotOnInitialFace : InputError { using InputError::InputError; };

// io
struct FormatError : InputError { using InputError::InputError; };

}  // namespace ordcomp
