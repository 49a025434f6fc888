#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace xom {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (assembly, trace, or config). Lines are 1-based.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

/// A region set handed to evaluate_mpu failed per-region validation.
class InvalidRegionSetError : public Error {
public:
    using Error::Error;
};

/// Code size exceeds what the device's comparator budget can watch.
class RejectError : public Error {
public:
    RejectError(std::uint64_t code_size, std::uint64_t limit, const std::string& msg)
        : Error(msg), code_size_(code_size), limit_(limit) {}
    std::uint64_t code_size() const { return code_size_; }
    std::uint64_t limit() const { return limit_; }

private:
    std::uint64_t code_size_ = 0;
    std::uint64_t limit_ = 0;
};

/// A plan exists arithmetically but the layout or application cannot use it
/// (e.g. privileged operations with only the unprivileged option left).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// A literal load whose pool entry the rewriter cannot resolve.
class UnsupportedLiteralError : public Error {
public:
    UnsupportedLiteralError(int line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

/// A table-branch the rewriter cannot lower (non-pc base, missing or
/// malformed inline table).
class UnsupportedTableError : public Error {
public:
    UnsupportedTableError(int line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

/// The program cannot be placed in memory (offset out of range, bad value).
class LayoutError : public Error {
public:
    using Error::Error;
};

/// The interpreter hit undefined behavior at the given pc.
class StuckError : public Error {
public:
    StuckError(std::uint32_t pc, const std::string& reason)
        : Error(reason), pc_(pc) {}
    std::uint32_t pc() const { return pc_; }

private:
    std::uint32_t pc_ = 0;
};

/// Structured config file problems (bad schema, unknown enum strings).
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace xom
