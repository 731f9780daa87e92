#pragma once
#include <stdexcept>
#include <string>

namespace ksub {

struct GeomError : std::runtime_error {
    explicit GeomError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ChartExit : GeomError        { using GeomError::GeomError; };
struct StepFailure : GeomError      { using GeomError::GeomError; };
struct NoConvergence : GeomError    { using GeomError::GeomError; };
struct NoStabilization : GeomError  { using GeomError::GeomError; };
struct FitFailure : GeomError       { using GeomError::GeomError; };
struct DegenerateSpan : GeomError   { using GeomError::GeomError; };
struct NotUnitSpeed : GeomError     { using GeomError::GeomError; };
struct RankDeficient : GeomError    { using GeomError::GeomError; };
struct TangencySuspected : GeomError { using GeomError::GeomError; };
struct WindowTooSmall : GeomError   { using GeomError::GeomError; };
struct InsufficientExtent : GeomError { using GeomError::GeomError; };

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ksub
