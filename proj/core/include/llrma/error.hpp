#pragma once

#include <stdexcept>
#include <string>

namespace llrma {

/// Base class for all llrma errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Data errors: bad input files or unusable data.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class DuplicateError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Usage errors: inconsistent shapes, indices, or configuration.
class ShapeError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InsufficientEntriesError : public Error {
public:
    using Error::Error;
};

class SizeError : public Error {
public:
    using Error::Error;
};

// Numerical errors.
class DivergenceError : public Error {
public:
    DivergenceError(int epoch, const std::string& what)
        : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

class EmptyNeighborhoodError : public Error {
public:
    using Error::Error;
};

}  // namespace llrma
