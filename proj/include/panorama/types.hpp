#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace panorama {

/// Opaque, non-empty node identifier. Ordered lexicographically so node-sets
/// iterate deterministically.
class NodeId {
public:
    NodeId() = default;
    explicit NodeId(std::string id) : id_(std::move(id)) {}
    NodeId(const char* id) : id_(id) {}  // NOLINT: literal convenience

    const std::string& str() const noexcept { return id_; }
    bool empty() const noexcept { return id_.empty(); }

    friend auto operator<=>(const NodeId&, const NodeId&) = default;
    friend bool operator==(const NodeId&, const NodeId&) = default;
    friend std::ostream& operator<<(std::ostream& os, const NodeId& n) { return os << n.id_; }

private:
    std::string id_;
};

/// Engine-assigned logical version counter. 0 is the initial graph version.
struct Timestamp {
    std::uint64_t value = 0;

    constexpr Timestamp() = default;
    constexpr explicit Timestamp(std::uint64_t v) : value(v) {}

    constexpr Timestamp next() const noexcept { return Timestamp{value + 1}; }

    friend constexpr auto operator<=>(Timestamp, Timestamp) = default;
    friend std::ostream& operator<<(std::ostream& os, Timestamp t) { return os << 't' << t.value; }
};

inline constexpr Timestamp kInitialVersion{0};

/// Durations and clock instants. Instants are offsets from the engine epoch.
using Millis = std::chrono::milliseconds;

using NodeSet = std::set<NodeId>;

enum class ErrorCode {
    CycleDetected,
    UnknownNode,
    DuplicateNode,
    StaleVersion,
    NoMatchingUC,
    VersionCollected,
    EmptyWriteSet,
    NotBaseNode,
    AlreadyCommitted,
    NotHeadOfQueue,
    EmptyViewport,
    ClockWentBackwards,
    EmptyGroup,
    UnorderedTrace,
    MissingVersionHistory,
    WorkloadMismatch,
    ConfigInvalid,
    UnknownLens,
    UnknownPolicy,
    WriteInProgress,
    ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace panorama

template <>
struct std::hash<panorama::NodeId> {
    std::size_t operator()(const panorama::NodeId& n) const noexcept {
        return std::hash<std::string>{}(n.str());
    }
};
