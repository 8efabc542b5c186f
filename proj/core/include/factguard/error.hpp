#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace factguard {

// Every failure surfaced by the library carries a stable machine-readable
// code (e.g. "BAD_LABEL", "BACKEND_UNREACHABLE") in addition to the message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message);

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Record validation failure that names the offending field.
class ValidationError : public Error {
public:
    ValidationError(std::string code, std::string field, const std::string& message);

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Value-or-code result for parsers whose failures are data, not exceptions.
template <typename T>
struct Parsed {
    std::optional<T> value;
    std::string error;

    static Parsed ok(T v) { return Parsed{std::move(v), {}}; }
    static Parsed fail(std::string code) { return Parsed{std::nullopt, std::move(code)}; }

    explicit operator bool() const noexcept { return value.has_value(); }
    const T& operator*() const { return *value; }
    const T* operator->() const { return &*value; }
};

} // namespace factguard
