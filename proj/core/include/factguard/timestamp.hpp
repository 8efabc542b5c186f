#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace factguard {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Parses an RFC-3339 date-time ("2023-01-01T00:00:00Z", optional fraction,
// "Z" or "+HH:MM" offset). Returns nullopt on any syntax or range error.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

// UTC rendering; milliseconds are emitted only when nonzero.
std::string format_rfc3339(Timestamp ts);

} // namespace factguard
