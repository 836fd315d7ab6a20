#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace keycal {

// Thrown when a transform with a (numerically) zero linear determinant has to
// be inverted.
struct SingularTransformError : std::domain_error {
    using std::domain_error::domain_error;
};

// Keypoint lies outside the plane it is being encoded into.
struct OutOfBoundsError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// A classification map without any positive response.
struct NoDetectionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t byte_offset)
        : std::runtime_error(what), byte(byte_offset) {}
    std::size_t byte;
};

struct ReferentialIntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace keycal
