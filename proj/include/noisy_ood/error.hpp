#pragma once

#include <stdexcept>
#include <string>

namespace noisy_ood {

// Error categories surfaced through the C API as status codes.
enum class ErrorKind {
    InvalidArgument,
    Config,
    Io,
    Run,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
    throw Error(ErrorKind::InvalidArgument, what);
}

[[noreturn]] inline void throw_config(const std::string& what) {
    throw Error(ErrorKind::Config, what);
}

[[noreturn]] inline void throw_io(const std::string& what) {
    throw Error(ErrorKind::Io, what);
}

}  // namespace noisy_ood
