#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evackit {

using NodeId = std::int32_t;
using ArcId = std::int32_t;
using Seconds = double;
using Meters = double;

/// How the hard subproblems are solved: exact enumeration (micro instances),
/// the evolutionary kernel, or the greedy baseline alone.
enum class SolverMode { exact, evo, greedy };

inline SolverMode solver_mode_from_string(const std::string& s) {
    if (s == "exact") return SolverMode::exact;
    if (s == "evo") return SolverMode::evo;
    if (s == "greedy") return SolverMode::greedy;
    throw std::runtime_error("unknown solver mode: " + s);
}

inline const char* to_string(SolverMode m) {
    switch (m) {
        case SolverMode::exact: return "exact";
        case SolverMode::evo: return "evo";
        case SolverMode::greedy: return "greedy";
    }
    return "?";
}

/// Input or state that violates a documented precondition.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Referenced entity (node, arc, pickup, ...) does not exist.
class UnknownEntityError : public ValidationError {
public:
    explicit UnknownEntityError(const std::string& what) : ValidationError(what) {}
};

/// Exact enumeration requested on an instance beyond the exhaustive bounds.
class InstanceTooLargeError : public ValidationError {
public:
    explicit InstanceTooLargeError(const std::string& what) : ValidationError(what) {}
};

}  // namespace evackit
