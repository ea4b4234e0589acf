#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dagcrew {

/// Simulation runs at the source game's clock rate, so "30 seconds" of
/// wall time maps to exactly 600 ticks.
inline constexpr int kTicksPerSecond = 20;

using Tick = std::int64_t;
using NodeId = std::int64_t;

struct Vec3 {
    int x = 0;
    int y = 0;
    int z = 0;

    friend bool operator==(const Vec3&, const Vec3&) = default;
    friend auto operator<=>(const Vec3&, const Vec3&) = default;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
};

inline int manhattan(const Vec3& a, const Vec3& b) {
    return std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z);
}

inline std::string to_string(const Vec3& v) {
    return "(" + std::to_string(v.x) + "," + std::to_string(v.y) + "," +
           std::to_string(v.z) + ")";
}

struct Vec3Hash {
    std::size_t operator()(const Vec3& v) const {
        std::size_t h = std::hash<int>{}(v.x);
        h = h * 1000003u ^ std::hash<int>{}(v.y);
        h = h * 1000003u ^ std::hash<int>{}(v.z);
        return h;
    }
};

class GraphError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class WorldError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class MetricError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dagcrew
