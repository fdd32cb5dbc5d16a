#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rupnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite loss or gradient encountered during training.
class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Dataset layout problems: missing directories, unpaired stems, empty sets.
class DataError : public Error {
public:
    using Error::Error;
};

/// Malformed byte stream. Carries the offset at which decoding failed.
class OffsetError : public Error {
public:
    OffsetError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class DecodeError : public OffsetError {
public:
    using OffsetError::OffsetError;
};

class CorruptCheckpoint : public OffsetError {
public:
    using OffsetError::OffsetError;
};

}  // namespace rupnet
