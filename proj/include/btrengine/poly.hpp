#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "btrengine/errors.hpp"

namespace btrengine {

// Dense univariate real polynomial, ascending coefficients. Degrees in this
// library stay small (a few dozen), so O(d^2) algorithms are fine.
using Poly = std::vector<double>;

inline double poly_scale(const Poly& p) {
    double m = 0.0;
    for (double c : p) m = std::max(m, std::fabs(c));
    return m;
}

inline void poly_trim(Poly& p, double rel_tol = 1e-13) {
    const double tol = rel_tol * std::max(1.0, poly_scale(p));
    while (p.size() > 1 && std::fabs(p.back()) <= tol) p.pop_back();
    if (p.empty()) p.push_back(0.0);
}

inline int poly_degree(const Poly& p) { return static_cast<int>(p.size()) - 1; }

inline bool poly_is_zero(const Poly& p, double rel_tol = 1e-13) {
    const double tol = rel_tol * std::max(1.0, poly_scale(p));
    for (double c : p)
        if (std::fabs(c) > tol) return false;
    return true;
}

inline Poly poly_add(const Poly& a, const Poly& b) {
    Poly r(std::max(a.size(), b.size()), 0.0);
    for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
    poly_trim(r);
    return r;
}

inline Poly poly_scale_by(const Poly& a, double s) {
    Poly r = a;
    for (double& c : r) c *= s;
    return r;
}

inline Poly poly_sub(const Poly& a, const Poly& b) { return poly_add(a, poly_scale_by(b, -1.0)); }

inline Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r(a.size() + b.size() - 1, 0.0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    poly_trim(r);
    return r;
}

inline Poly poly_derivative(const Poly& a) {
    if (a.size() <= 1) return Poly{0.0};
    Poly r(a.size() - 1);
    for (size_t i = 1; i < a.size(); ++i) r[i - 1] = a[i] * static_cast<double>(i);
    poly_trim(r);
    return r;
}

template <typename S>
S poly_eval(const Poly& p, const S& x) {
    S acc = S(0);
    for (size_t i = p.size(); i-- > 0;) acc = acc * x + S(p[i]);
    return acc;
}

// Coefficients of p(u + c): Taylor recentering by synthetic division.
inline Poly poly_shift(const Poly& p, double c) {
    Poly r = p;
    const int n = static_cast<int>(r.size());
    for (int i = 0; i < n - 1; ++i)
        for (int j = n - 2; j >= i; --j) r[j] += c * r[j + 1];
    return r;
}

// Divides by (x - root); remainder returned separately.
inline Poly poly_deflate(const Poly& p, double root, double* remainder) {
    Poly q(std::max<size_t>(p.size() - 1, 1), 0.0);
    double carry = 0.0;
    for (size_t i = p.size(); i-- > 0;) {
        carry = p[i] + carry * root;
        if (i > 0) q[i - 1] = carry;
    }
    if (remainder) *remainder = carry;
    return q;
}

// Multiplicity of `root` as a zero of p, judged at relative tolerance.
inline int poly_root_multiplicity(const Poly& p, double root, double rel_tol = 1e-9) {
    Poly cur = p;
    int mult = 0;
    const double scale = std::max(1.0, poly_scale(p));
    while (poly_degree(cur) >= 1 || std::fabs(cur[0]) <= rel_tol * scale) {
        double rem = 0.0;
        Poly next = poly_deflate(cur, root, &rem);
        if (std::fabs(rem) > rel_tol * scale) break;
        cur = next;
        ++mult;
        if (poly_is_zero(cur)) break;
    }
    return mult;
}

}  // namespace btrengine
