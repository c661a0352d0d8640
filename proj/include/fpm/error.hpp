#pragma once

#include <stdexcept>
#include <string>

namespace fpm {

// Bad or unreadable input data (edge lists, attribute files, configs on disk).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A checkpoint whose architecture or embedding configuration does not match.
class CheckpointMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fpm
