#pragma once

#include <cmath>

namespace epifit {

/// First-order dual number: carries a value and one directional derivative.
/// The model right-hand sides are templated on the scalar type, so running
/// them on Dual1 yields exact Jacobian columns without finite differencing.
struct Dual1 {
    double v = 0.0; ///< value
    double d = 0.0; ///< derivative along the active direction

    Dual1() = default;
    Dual1(double value) : v(value), d(0.0) {}
    Dual1(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual1 operator+(Dual1 a, Dual1 b) { return {a.v + b.v, a.d + b.d}; }
inline Dual1 operator-(Dual1 a, Dual1 b) { return {a.v - b.v, a.d - b.d}; }
inline Dual1 operator-(Dual1 a) { return {-a.v, -a.d}; }
inline Dual1 operator*(Dual1 a, Dual1 b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual1 operator/(Dual1 a, Dual1 b) {
    double inv = 1.0 / b.v;
    return {a.v * inv, (a.d - a.v * b.d * inv) * inv};
}

inline Dual1& operator+=(Dual1& a, Dual1 b) { a = a + b; return a; }
inline Dual1& operator-=(Dual1& a, Dual1 b) { a = a - b; return a; }
inline Dual1& operator*=(Dual1& a, Dual1 b) { a = a * b; return a; }
inline Dual1& operator/=(Dual1& a, Dual1 b) { a = a / b; return a; }

inline Dual1 exp(Dual1 a) {
    double e = std::exp(a.v);
    return {e, a.d * e};
}

inline double value_of(double x) { return x; }
inline double value_of(Dual1 x) { return x.v; }

} // namespace epifit
