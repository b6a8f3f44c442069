#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace pcnlab {

// All amounts are integer satoshi. Ratios are computed in double at
// report time only.
using Satoshi = std::int64_t;
using BlockHeight = std::int64_t;

struct NodeId {
    std::string value;

    NodeId() = default;
    explicit NodeId(std::string v) : value(std::move(v)) {}

    friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

struct NodeIdHash {
    std::size_t operator()(const NodeId& n) const noexcept {
        return std::hash<std::string>{}(n.value);
    }
};

// Base class for every domain error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnknownNode : Error {
    using Error::Error;
};
struct DuplicateChannel : Error {
    using Error::Error;
};
struct DuplicateEndpoint : Error {
    using Error::Error;
};
struct NoSuchChannel : Error {
    using Error::Error;
};
struct InvalidConfig : Error {
    using Error::Error;
};
struct InsufficientTargets : Error {
    using Error::Error;
};
struct NoPathBetweenPair : Error {
    using Error::Error;
};
struct BrokenPath : Error {
    using Error::Error;
};
struct AllocationExceedsBalance : Error {
    using Error::Error;
};
struct AllocationExceedsBottleneck : Error {
    using Error::Error;
};
struct Unbounded : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct TopologyCalibrationFailed : Error {
    using Error::Error;
};

// HTLC errors carry the failing hop index (0-based from the sender).
struct HopError : Error {
    int hop;
    HopError(const std::string& what, int h) : Error(what), hop(h) {}
};
struct InsufficientBalance : HopError {
    using HopError::HopError;
};
struct SlotsExhausted : HopError {
    using HopError::HopError;
};
struct BelowDust : HopError {
    using HopError::HopError;
};

}  // namespace pcnlab
