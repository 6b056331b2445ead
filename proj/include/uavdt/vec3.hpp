#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace uavdt {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
    double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

    bool operator==(const Vec3&) const = default;
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

struct Aabb {
    Vec3 min;
    Vec3 max;

    bool valid() const {
        return min.finite() && max.finite() &&
               min.x < max.x && min.y < max.y && min.z < max.z;
    }
    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
               p.z >= min.z && p.z <= max.z;
    }
    // Horizontal footprint test; ground entities live below the flight floor.
    bool contains_xy(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
    }
    Vec3 clamp(const Vec3& p) const {
        return {std::clamp(p.x, min.x, max.x),
                std::clamp(p.y, min.y, max.y),
                std::clamp(p.z, min.z, max.z)};
    }

    bool operator==(const Aabb&) const = default;
};

// Deterministic helpers on top of mt19937_64. The standard pins the engine's
// output sequence but not the distributions', so we map raw draws ourselves to
// keep results identical across standard libraries.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53; // [0, 1)
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

// Millimetre quantization; generated geometry snaps to this grid so that the
// 9-significant-digit text form round-trips bit-exactly.
inline double quantize_mm(double v) { return std::round(v * 1000.0) / 1000.0; }

} // namespace uavdt
