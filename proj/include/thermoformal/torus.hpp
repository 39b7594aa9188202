#pragma once
#include <cmath>
#include <vector>
#include <array>
#include <algorithm>
#include <cassert>

namespace tf {

using Pt = std::vector<double>; // point on the m-torus, coords in [0,1)

inline double wrap01(double x) {
    x -= std::floor(x);
    return x >= 1.0 ? x - 1.0 : (x < 0.0 ? x + 1.0 : x);
}

// distance on the circle R/Z
inline double circ_dist(double a, double b) {
    double d = std::fabs(wrap01(a) - wrap01(b));
    return d <= 0.5 ? d : 1.0 - d;
}

// signed representative of a-b in (-1/2, 1/2]
inline double circ_diff(double a, double b) {
    double d = wrap01(a) - wrap01(b);
    if (d > 0.5) d -= 1.0;
    if (d <= -0.5) d += 1.0;
    return d;
}

inline Pt wrap01(const Pt& x) {
    Pt y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = wrap01(x[i]);
    return y;
}

// flat-torus metric: max over coordinates of the circle distance
inline double dist_torus(const Pt& a, const Pt& b) {
    assert(a.size() == b.size());
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) d = std::max(d, circ_dist(a[i], b[i]));
    return d;
}

// Arc on the circle: [lo, lo+len) with len in [0,1]. len >= 1 means the whole circle.
struct Arc {
    double lo = 0.0;
    double len = 0.0;
    bool full() const { return len >= 1.0; }
    bool contains_point(double x) const {
        if (full()) return true;
        double off = wrap01(x - lo);
        return off < len || off > 1.0 - 1e-15;
    }
    bool contains_arc(const Arc& other) const {
        if (full()) return true;
        if (other.len > len) return false;
        double off = wrap01(other.lo - lo);
        return off + other.len <= len + 1e-15;
    }
    double mid() const { return wrap01(lo + 0.5 * std::min(len, 1.0)); }
};

inline Arc arc_around(double center, double radius) {
    if (radius >= 0.5) return Arc{0.0, 1.0};
    return Arc{wrap01(center - radius), 2.0 * radius};
}

} // namespace tf
