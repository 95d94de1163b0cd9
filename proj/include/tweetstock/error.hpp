#pragma once

#include <stdexcept>
#include <string>

namespace tweetstock {

/// File-level failure: missing path, unreadable stream, short read.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input violates a documented contract (bad column, bad value, bad shape).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite loss or gradient encountered during training.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tweetstock
