#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace svl
{
using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline Vec3 operator+(const Vec3& a, const Vec3& b)
{
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b)
{
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(double s, const Vec3& a)
{
    return {s * a[0], s * a[1], s * a[2]};
}
inline double dot(const Vec3& a, const Vec3& b)
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Map a coordinate onto the fundamental cell [-1/2, 1/2).
inline double wrap(double x)
{
    double y = x - std::floor(x + 0.5);
    return y >= 0.5 ? y - 1.0 : y;
}

// Minimal-image displacement on the unit torus.
inline Vec3 torus_delta(const Vec3& a, const Vec3& b)
{
    return {wrap(a[0] - b[0]), wrap(a[1] - b[1]), wrap(a[2] - b[2])};
}

// Integer lattice mode k in Z^3.
struct Mode
{
    int k1 = 0, k2 = 0, k3 = 0;

    int norm2() const { return k1 * k1 + k2 * k2 + k3 * k3; }
    int linf() const
    {
        return std::max(std::abs(k1), std::max(std::abs(k2), std::abs(k3)));
    }
    Vec3 as_vec() const { return {double(k1), double(k2), double(k3)}; }
    Mode operator-() const { return {-k1, -k2, -k3}; }
    bool operator==(const Mode&) const = default;

    // Lexicographic half-lattice: first nonzero coordinate positive.
    bool in_positive_half() const
    {
        if (k1 != 0)
            return k1 > 0;
        if (k2 != 0)
            return k2 > 0;
        return k3 > 0;
    }

    // Stable identifier used to key random streams, independent of the
    // enumeration order of any particular mode set.
    std::uint32_t key() const
    {
        auto enc = [](int c) { return std::uint32_t(c + 512) & 0x3ffu; };
        return (enc(k1) << 20) | (enc(k2) << 10) | enc(k3);
    }
};

// Modes of the half lattice Z^3_+ with 0 < |k|_inf <= kmax.
std::vector<Mode> half_cube_modes(int kmax);
// Modes of Z^3_+ with 0 < |k|_2 <= radius.
std::vector<Mode> half_ball_modes(double radius);
// All nonzero modes with |k|_inf <= kmax.
std::vector<Mode> full_cube_modes(int kmax);
}  // namespace svl
