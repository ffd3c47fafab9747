#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace curator {

// Base for every error raised by the toolkit. The CLI maps ConfigError to
// exit code 1 and everything else to 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed JSON / JSONL. `line()` is 1-based; 0 when not line oriented.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A record is missing a mandatory key.
class SchemaError : public Error {
public:
    SchemaError(const std::string& what, std::string key)
        : Error(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class TemplateError : public Error {
public:
    TemplateError(const std::string& what, std::string slot)
        : Error(what), slot_(std::move(slot)) {}
    const std::string& slot() const noexcept { return slot_; }

private:
    std::string slot_;
};

class SizeError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class AuthError : public Error {
public:
    using Error::Error;
};

class ProtocolError : public Error {
public:
    using Error::Error;
};

/// The judge/grader reply did not contain what the parser needed.
class UnparseableReply : public Error {
public:
    UnparseableReply(const std::string& what, std::string raw)
        : Error(what), raw_(std::move(raw)) {}
    const std::string& raw_reply() const noexcept { return raw_; }

private:
    std::string raw_;
};

/// Too many failed items in a batch run; the endpoint or prompt is broken.
class QualityError : public Error {
public:
    using Error::Error;
};

/// Request budget for one run exhausted (simulated interruption).
class BudgetExhausted : public Error {
public:
    using Error::Error;
};

}  // namespace curator
