#ifndef NEGATTN_ERRORS_HPP
#define NEGATTN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace negattn {

// Shape/dimension mismatches. Messages name both offending shapes.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration values (negative lambda, bad mask resolution, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Out-of-range indices (token index, schedule step, ...).
struct IndexError : std::runtime_error {
    explicit IndexError(const std::string& msg) : std::runtime_error(msg) {}
};

// Operations called in the wrong state (no maps recorded, no finalized mask).
struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad timestep / degenerate alpha-bar.
struct ScheduleError : std::runtime_error {
    explicit ScheduleError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unknown tokens / identifier collisions.
struct VocabularyError : std::runtime_error {
    explicit VocabularyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training blew up (NaN loss), untrained proxy heads, ...
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace negattn

#endif
