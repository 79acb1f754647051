#pragma once

#include <complex>
#include <vector>

#include "btrengine/errors.hpp"

namespace btrengine {

using Complex = std::complex<double>;

// Truncated Laurent series at a finite center c (local variable u = z - c) or
// at infinity (local variable u = 1/z). Exponents refer to u; helpers below
// translate to z-exponents at infinity, where the natural grading descends.
//
// Coefficients beyond the truncation order are undefined, never implicitly
// zero; arithmetic propagates the minimum reliable window.
struct LaurentSeries {
    bool at_infinity = false;
    Complex center = 0.0;
    int kmin = 0;                 // lowest stored u-exponent
    std::vector<Complex> coef;    // u^kmin .. u^(kmin + coef.size() - 1)
    int ktrunc = -1;              // largest reliable u-exponent

    int khigh() const { return kmin + static_cast<int>(coef.size()) - 1; }

    Complex at(int k) const {
        if (k > ktrunc) throw Error("insufficient truncation", "coefficient beyond truncation order");
        if (k < kmin || k > khigh()) return 0.0;
        return coef[k - kmin];
    }

    // z-exponent convention used in the public contract: equals the
    // u-exponent at a finite center and its negation at infinity.
    int z_exponent(int k) const { return at_infinity ? -k : k; }
    Complex coeff_z(int zexp) const { return at(at_infinity ? -zexp : zexp); }

    Complex eval(Complex z) const {
        Complex u = at_infinity ? Complex(1.0) / z : z - center;
        Complex acc = 0.0, up = std::pow(u, kmin);
        for (size_t i = 0; i < coef.size(); ++i) {
            acc += coef[i] * up;
            up *= u;
        }
        return acc;
    }

    void compress(double tol = 0.0) {
        while (!coef.empty() && std::abs(coef.front()) <= tol) {
            coef.erase(coef.begin());
            ++kmin;
        }
        while (!coef.empty() && kmin + static_cast<int>(coef.size()) - 1 > ktrunc) coef.pop_back();
        if (coef.empty()) { coef.assign(1, 0.0); kmin = std::min(kmin, ktrunc); }
    }
};

inline bool same_center(const LaurentSeries& a, const LaurentSeries& b) {
    if (a.at_infinity != b.at_infinity) return false;
    return a.at_infinity || a.center == b.center;
}

inline LaurentSeries series_add(const LaurentSeries& a, const LaurentSeries& b) {
    require(same_center(a, b), "center mismatch", "series_add needs a common center");
    LaurentSeries r;
    r.at_infinity = a.at_infinity;
    r.center = a.center;
    r.ktrunc = std::min(a.ktrunc, b.ktrunc);
    r.kmin = std::min(a.kmin, b.kmin);
    r.coef.assign(static_cast<size_t>(std::max(0, r.ktrunc - r.kmin + 1)), 0.0);
    for (int k = r.kmin; k <= r.ktrunc; ++k) {
        Complex v = 0.0;
        if (k >= a.kmin && k <= a.khigh()) v += a.coef[k - a.kmin];
        if (k >= b.kmin && k <= b.khigh()) v += b.coef[k - b.kmin];
        r.coef[k - r.kmin] = v;
    }
    return r;
}

inline LaurentSeries series_mul(const LaurentSeries& a, const LaurentSeries& b) {
    require(same_center(a, b), "center mismatch", "series_mul needs a common center");
    LaurentSeries r;
    r.at_infinity = a.at_infinity;
    r.center = a.center;
    r.kmin = a.kmin + b.kmin;
    r.ktrunc = std::min(a.ktrunc + b.kmin, b.ktrunc + a.kmin);
    r.coef.assign(static_cast<size_t>(std::max(0, r.ktrunc - r.kmin + 1)), 0.0);
    for (int i = a.kmin; i <= a.khigh(); ++i)
        for (int j = b.kmin; j <= b.khigh(); ++j) {
            int k = i + j;
            if (k > r.ktrunc) continue;
            r.coef[k - r.kmin] += a.coef[i - a.kmin] * b.coef[j - b.kmin];
        }
    return r;
}

inline LaurentSeries series_div(const LaurentSeries& a, const LaurentSeries& b) {
    require(same_center(a, b), "center mismatch", "series_div needs a common center");
    // locate the true leading coefficient of b
    int lead = b.kmin;
    double scale = 0.0;
    for (const auto& c : b.coef) scale = std::max(scale, std::abs(c));
    while (lead <= b.khigh() && std::abs(b.at(lead)) <= 1e-14 * scale) ++lead;
    require(scale > 0.0 && lead <= b.khigh(), "division by zero", "series_div by identically-zero series");

    const int rel = std::min(a.ktrunc - a.kmin, b.ktrunc - lead);
    LaurentSeries r;
    r.at_infinity = a.at_infinity;
    r.center = a.center;
    r.kmin = a.kmin - lead;
    r.ktrunc = r.kmin + rel;
    if (rel < 0) { r.coef.assign(1, 0.0); return r; }
    r.coef.assign(static_cast<size_t>(rel + 1), 0.0);
    const Complex b0 = b.at(lead);
    for (int m = 0; m <= rel; ++m) {
        Complex acc = (a.kmin + m <= a.ktrunc) ? a.at(a.kmin + m) : Complex(0.0);
        for (int j = 0; j < m; ++j) {
            int bk = lead + m - j;
            Complex bc = (bk <= b.khigh() && bk >= b.kmin) ? b.coef[bk - b.kmin] : Complex(0.0);
            acc -= r.coef[j] * bc;
        }
        r.coef[m] = acc / b0;
    }
    return r;
}

enum class SeriesOp { add, mul, div };

inline LaurentSeries series_arith(const LaurentSeries& a, const LaurentSeries& b, SeriesOp op) {
    switch (op) {
        case SeriesOp::add: return series_add(a, b);
        case SeriesOp::mul: return series_mul(a, b);
        case SeriesOp::div: return series_div(a, b);
    }
    throw Error("internal", "unreachable series op");
}

// Residue in the series' own chart. At a finite center this is the u^{-1}
// coefficient; at infinity the convention is Res_inf f = -[z^{-1}] f, i.e.
// minus the u^{+1} coefficient.
inline Complex series_residue(const LaurentSeries& s) {
    const int need = s.at_infinity ? 1 : -1;
    if (need > s.ktrunc) throw Error("insufficient truncation", "residue coefficient not resolved");
    Complex c = (need >= s.kmin && need <= s.khigh()) ? s.coef[need - s.kmin] : Complex(0.0);
    return s.at_infinity ? -c : c;
}

}  // namespace btrengine
