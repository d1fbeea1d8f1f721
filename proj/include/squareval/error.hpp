#pragma once

#include <stdexcept>
#include <string>

namespace squareval {

// Broad failure classes; the CLI maps each one to a process exit code.
enum class ErrorKind {
    Usage,    // bad flags, unknown tokens, empty inputs where data is required
    Input,    // malformed FEN/PGN/dataset/model files, I/O failures
    Engine,   // engine launch, timeout, protocol violations
    Numeric,  // non-finite values during training
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

}  // namespace squareval
