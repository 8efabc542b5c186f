#include "factguard/error.hpp"

namespace factguard {

Error::Error(std::string code, const std::string& message)
    : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

ValidationError::ValidationError(std::string code, std::string field, const std::string& message)
    : Error(std::move(code), field + ": " + message), field_(std::move(field)) {}

} // namespace factguard
