#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace pageflat {

// Image coordinate convention used throughout: x grows right, y grows down
// (row index). "Counterclockwise" always means as seen on screen under that
// convention.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const noexcept { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const noexcept { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const noexcept { return {x * s, y * s}; }
    constexpr bool operator==(const Vec2&) const noexcept = default;
};

[[nodiscard]] constexpr double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
[[nodiscard]] constexpr double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }
[[nodiscard]] inline double norm(Vec2 a) noexcept { return std::hypot(a.x, a.y); }
[[nodiscard]] inline double distance(Vec2 a, Vec2 b) noexcept { return norm(a - b); }

// Unsigned angle between two direction vectors, in [0, pi].
[[nodiscard]] inline double angle_between(Vec2 a, Vec2 b) noexcept {
    return std::atan2(std::abs(cross(a, b)), dot(a, b));
}

// Shoelace area of a closed polygon. Positive for traversal that appears
// clockwise on screen (y-down coordinates), negative for counterclockwise.
[[nodiscard]] inline double signed_area(std::span<const Vec2> poly) noexcept {
    double acc = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * acc;
}

// Perpendicular distance from p to the line through a and b. Falls back to
// point distance when a == b.
[[nodiscard]] inline double line_point_distance(Vec2 a, Vec2 b, Vec2 p) noexcept {
    const Vec2 ab = b - a;
    const double len = norm(ab);
    if (len <= 1e-12) return distance(a, p);
    return std::abs(cross(ab, p - a)) / len;
}

// True if any three of the four points are (nearly) collinear.
[[nodiscard]] inline bool has_collinear_triple(std::span<const Vec2, 4> q, double tol = 1e-9) noexcept {
    for (int skip = 0; skip < 4; ++skip) {
        Vec2 t[3];
        int m = 0;
        for (int i = 0; i < 4; ++i)
            if (i != skip) t[m++] = q[i];
        if (std::abs(cross(t[1] - t[0], t[2] - t[0])) <= tol * (1.0 + norm(t[1] - t[0]) * norm(t[2] - t[0])))
            return true;
    }
    return false;
}

}  // namespace pageflat
