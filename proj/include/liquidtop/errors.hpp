#pragma once

#include <stdexcept>
#include <string>

namespace liquidtop {

// Base class for all domain errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// -- model --------------------------------------------------------------
struct NonPositiveParameter : Error { using Error::Error; };
struct FluidInertiaExceedsTotal : Error { using Error::Error; };

// -- basis --------------------------------------------------------------
struct EmptyBasis : Error { using Error::Error; };

// -- operators ----------------------------------------------------------
struct InertiaNotPD : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// -- spectral -----------------------------------------------------------
struct EigensolverFailure : Error { using Error::Error; };
struct DefectiveZeroEigenvalue : Error { using Error::Error; };
struct AlphaOutOfRange : Error { using Error::Error; };

// -- dynamics -----------------------------------------------------------
struct MagnitudeTooLarge : Error { using Error::Error; };
struct InadmissibleInitialData : Error { using Error::Error; };
struct StepSizeUnderflow : Error { using Error::Error; };
struct NonFiniteState : Error { using Error::Error; };
struct FitUnreliable : Error { using Error::Error; };

// -- experiments --------------------------------------------------------
struct NoSignChange : Error { using Error::Error; };
struct UnexpectedGrowth : Error { using Error::Error; };
struct NoEscape : Error { using Error::Error; };
struct PreconditionViolation : Error { using Error::Error; };

// -- cli / config -------------------------------------------------------
struct ConfigError : Error { using Error::Error; };

}  // namespace liquidtop
