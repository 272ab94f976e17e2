#pragma once

#include <array>
#include <cmath>

namespace vsphere {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double length(const Vec2& v) { return std::sqrt(dot(v, v)); }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr bool operator==(const Vec3&) const = default;

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }

/// Returns v / |v|; the zero vector stays zero.
inline Vec3 normalize(const Vec3& v) {
    const double len = length(v);
    return len > 0.0 ? v / len : Vec3{};
}

/// Angle between two nonzero vectors, robust near 0 and pi.
inline double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(length(cross(a, b)), dot(a, b));
}

/// Row-major 3x3 matrix. Vectors are columns: `m * v`.
struct Mat3 {
    std::array<Vec3, 3> rows{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};

    static constexpr Mat3 identity() { return {}; }

    static constexpr Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
        Mat3 m;
        m.rows = {r0, r1, r2};
        return m;
    }

    static constexpr Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
        return from_rows({c0.x, c1.x, c2.x}, {c0.y, c1.y, c2.y}, {c0.z, c1.z, c2.z});
    }

    constexpr Vec3 operator*(const Vec3& v) const {
        return {dot(rows[0], v), dot(rows[1], v), dot(rows[2], v)};
    }

    constexpr Mat3 operator*(const Mat3& o) const {
        const Mat3 t = o.transposed();
        return from_rows({dot(rows[0], t.rows[0]), dot(rows[0], t.rows[1]), dot(rows[0], t.rows[2])},
                         {dot(rows[1], t.rows[0]), dot(rows[1], t.rows[1]), dot(rows[1], t.rows[2])},
                         {dot(rows[2], t.rows[0]), dot(rows[2], t.rows[1]), dot(rows[2], t.rows[2])});
    }

    constexpr Mat3 transposed() const {
        return from_rows({rows[0].x, rows[1].x, rows[2].x}, {rows[0].y, rows[1].y, rows[2].y},
                         {rows[0].z, rows[1].z, rows[2].z});
    }

    constexpr double determinant() const { return dot(rows[0], cross(rows[1], rows[2])); }
};

// Camera space is left-handed: +x right, +y up, +z along the view direction.
inline Mat3 rotation_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return Mat3::from_rows({1, 0, 0}, {0, c, -s}, {0, s, c});
}

inline Mat3 rotation_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return Mat3::from_rows({c, 0, s}, {0, 1, 0}, {-s, 0, c});
}

inline Mat3 rotation_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return Mat3::from_rows({c, -s, 0}, {s, c, 0}, {0, 0, 1});
}

/// Orientation of a camera or object: yaw turns +z toward +x, positive pitch
/// turns +z toward +y (up), roll spins about +z.
inline Mat3 orientation(double yaw, double pitch, double roll) {
    return rotation_y(yaw) * rotation_x(-pitch) * rotation_z(roll);
}

}  // namespace vsphere
