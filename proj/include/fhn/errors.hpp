#pragma once

#include <stdexcept>
#include <string>

namespace fhn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Integration
struct StepSizeUnderflow : Error { using Error::Error; };
struct NonFiniteState : Error { using Error::Error; };

// Sampling
struct RejectionExhausted : Error { using Error::Error; };

// Dataset
struct LengthMismatch : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct FormatVersionMismatch : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Networks
struct ShapeError : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };

// Metrics
struct EmptyInput : Error { using Error::Error; };
struct ZeroTruthValue : Error { using Error::Error; };
struct ConstantTruth : Error { using Error::Error; };
struct InvalidK : Error { using Error::Error; };

// CLI / configuration
struct ConfigError : Error { using Error::Error; };

// Execution policy for the data-parallel kernels. Serial is the reference
// path kept for testing; Parallel must produce bit-identical results.
enum class Exec { Serial, Parallel };

} // namespace fhn
