#pragma once

#include <stdexcept>
#include <string>

namespace bsvc {

// Error taxonomy used across the library. The CLI maps these onto exit
// codes: config/usage -> 2, I/O and parse -> 3, everything else -> 1.

struct invalid_input : std::runtime_error {
    explicit invalid_input(const std::string& msg) : std::runtime_error(msg) {}
};

struct invalid_state : std::runtime_error {
    explicit invalid_state(const std::string& msg) : std::runtime_error(msg) {}
};

struct numerical_failure : std::runtime_error {
    explicit numerical_failure(const std::string& msg) : std::runtime_error(msg) {}
};

// Fixed-point map evaluated where its denominator vanishes.
struct degenerate_point : numerical_failure {
    explicit degenerate_point(const std::string& msg) : numerical_failure(msg) {}
};

// Validity index undefined for the given partition (e.g. coincident centroids).
struct degenerate_clustering : std::runtime_error {
    explicit degenerate_clustering(const std::string& msg) : std::runtime_error(msg) {}
};

struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bsvc
