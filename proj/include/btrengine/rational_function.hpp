#pragma once

#include <array>
#include <complex>
#include <map>
#include <utility>
#include <vector>

#include "btrengine/laurent.hpp"
#include "btrengine/poly.hpp"

namespace btrengine {

// Candidate pole locations for the pole-basis representation used across the
// spectral-curve modules: the ramification points and the origin.
inline constexpr std::array<double, 3> kBasisPoles = {-1.0, 0.0, 1.0};

// Univariate rational function with real coefficients. The denominator is
// kept monic and common factors at the basis points are cancelled; this is
// enough reduction for every object this library builds (their poles live at
// the basis points, the Joukowski preimages, or probe points we control).
class RationalFunction {
public:
    RationalFunction() : num_{0.0}, den_{1.0} {}
    RationalFunction(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) { normalize(); }

    static RationalFunction from_poly(Poly p) { return RationalFunction(std::move(p), Poly{1.0}); }
    static RationalFunction constant(double c) { return from_poly(Poly{c}); }

    // z^e, negative exponents allowed.
    static RationalFunction monomial(int e, double c = 1.0) {
        if (e >= 0) {
            Poly n(static_cast<size_t>(e + 1), 0.0);
            n.back() = c;
            return RationalFunction(n, Poly{1.0});
        }
        Poly d(static_cast<size_t>(-e + 1), 0.0);
        d.back() = 1.0;
        return RationalFunction(Poly{c}, d);
    }

    // 1/(z - p)^o
    static RationalFunction basis(double p, int o, double c = 1.0) {
        Poly d{1.0};
        for (int i = 0; i < o; ++i) d = poly_mul(d, Poly{-p, 1.0});
        return RationalFunction(Poly{c}, d);
    }

    const Poly& num() const { return num_; }
    const Poly& den() const { return den_; }
    bool is_zero() const { return poly_is_zero(num_); }

    template <typename S>
    S eval(const S& z) const {
        return poly_eval<S>(num_, z) / poly_eval<S>(den_, z);
    }

    RationalFunction derivative() const {
        Poly n = poly_sub(poly_mul(poly_derivative(num_), den_), poly_mul(num_, poly_derivative(den_)));
        return RationalFunction(n, poly_mul(den_, den_));
    }

    // f(1/z), the involution pullback on functions.
    RationalFunction reciprocal_argument() const {
        Poly nr(num_.rbegin(), num_.rend());
        Poly dr(den_.rbegin(), den_.rend());
        int shift = poly_degree(den_) - poly_degree(num_);
        if (shift >= 0) {
            Poly mono(static_cast<size_t>(shift + 1), 0.0);
            mono.back() = 1.0;
            nr = poly_mul(nr, mono);
        } else {
            Poly mono(static_cast<size_t>(-shift + 1), 0.0);
            mono.back() = 1.0;
            dr = poly_mul(dr, mono);
        }
        return RationalFunction(nr, dr);
    }

    friend RationalFunction operator+(const RationalFunction& a, const RationalFunction& b) {
        return RationalFunction(poly_add(poly_mul(a.num_, b.den_), poly_mul(b.num_, a.den_)),
                                poly_mul(a.den_, b.den_));
    }
    friend RationalFunction operator-(const RationalFunction& a, const RationalFunction& b) {
        return RationalFunction(poly_sub(poly_mul(a.num_, b.den_), poly_mul(b.num_, a.den_)),
                                poly_mul(a.den_, b.den_));
    }
    friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
        return RationalFunction(poly_mul(a.num_, b.num_), poly_mul(a.den_, b.den_));
    }
    friend RationalFunction operator/(const RationalFunction& a, const RationalFunction& b) {
        require(!b.is_zero(), "division by zero", "rational function divide");
        return RationalFunction(poly_mul(a.num_, b.den_), poly_mul(a.den_, b.num_));
    }
    RationalFunction operator-() const { return RationalFunction(poly_scale_by(num_, -1.0), den_); }

    int pole_order(double p) const {
        int dm = poly_root_multiplicity(den_, p);
        if (dm == 0) return 0;
        int nm = poly_root_multiplicity(num_, p);
        return std::max(0, dm - nm);
    }

    // Laurent expansion around a finite real center, reliable through the
    // z-exponent `trunc`. A pole at the center is fine; the series simply
    // starts at a negative order.
    LaurentSeries laurent_at(double c, int trunc) const {
        Poly ns = poly_shift(num_, c);
        Poly ds = poly_shift(den_, c);
        return divide_local(ns, ds, false, c, trunc);
    }

    // Expansion at infinity, reliable down to z-exponent `trunc_z` (so pass
    // e.g. -4 to resolve coefficients of z^0 .. z^-4).
    LaurentSeries laurent_at_infinity(int trunc_z) const {
        Poly nr(num_.rbegin(), num_.rend());
        Poly dr(den_.rbegin(), den_.rend());
        // In w = 1/z: f = w^(deg den - deg num) * nr(w)/dr(w).
        int shift = poly_degree(den_) - poly_degree(num_);
        return divide_local(nr, dr, true, 0.0, -trunc_z, shift);
    }

    Complex residue(double p) const {
        LaurentSeries s = laurent_at(p, 0);
        if (-1 < s.kmin) return 0.0;
        return s.at(-1);
    }

    Complex residue_at_infinity() const {
        LaurentSeries s = laurent_at_infinity(-2);
        return -s.at(1);  // -[z^{-1}] f
    }

    // Decomposition onto sum_{p,o} c_{p,o} / (z-p)^o over the basis poles.
    // Errors out if anything is left over (pole elsewhere or polynomial
    // part), which is how representational bugs surface.
    std::map<std::pair<int, int>, double> partial_fractions_basis(double rel_tol = 1e-8) const {
        std::map<std::pair<int, int>, double> out;
        for (double p : kBasisPoles) {
            int m = pole_order(p);
            if (m == 0) continue;
            LaurentSeries s = laurent_at(p, -1);
            for (int o = 1; o <= m; ++o) {
                Complex c = s.at(-o);
                if (std::abs(c) > 0.0) out[{static_cast<int>(p), o}] += c.real();
            }
        }
        // verify nothing is missing
        double scale = 0.0;
        for (auto& [k, v] : out) scale = std::max(scale, std::fabs(v));
        const Complex probes[] = {{1.7, 0.9}, {-0.4, 2.2}, {3.1, -1.3}};
        for (Complex z : probes) {
            Complex recon = 0.0;
            for (auto& [k, v] : out) recon += v / std::pow(z - static_cast<double>(k.first), k.second);
            Complex truth = eval(z);
            if (std::abs(truth - recon) > rel_tol * std::max({1.0, scale, std::abs(truth)}))
                throw Error("pole outside basis",
                            "rational function does not decompose over poles {-1,0,+1}");
        }
        return out;
    }

private:
    void normalize() {
        poly_trim(num_);
        poly_trim(den_);
        require(!poly_is_zero(den_), "division by zero", "zero denominator polynomial");
        // cancel common factors at the basis points (tolerated multiplicity)
        for (double p : kBasisPoles) {
            while (true) {
                double rn = 0.0, rd = 0.0;
                if (poly_degree(num_) < 1 || poly_degree(den_) < 1) break;
                Poly qn = poly_deflate(num_, p, &rn);
                Poly qd = poly_deflate(den_, p, &rd);
                const double tn = 1e-12 * std::max(1.0, poly_scale(num_));
                const double td = 1e-12 * std::max(1.0, poly_scale(den_));
                if (std::fabs(rn) <= tn && std::fabs(rd) <= td && !poly_is_zero(qd)) {
                    num_ = qn;
                    den_ = qd;
                } else {
                    break;
                }
            }
        }
        poly_trim(num_);
        poly_trim(den_);
        const double lead = den_.back();
        for (double& c : den_) c /= lead;
        for (double& c : num_) c /= lead;
        if (poly_is_zero(num_)) num_ = Poly{0.0};
    }

    static LaurentSeries divide_local(Poly ns, Poly ds, bool at_inf, double center, int ktrunc,
                                      int extra_shift = 0) {
        // strip leading (lowest-order) near-zeros
        auto strip = [](Poly& p) {
            int k = 0;
            const double tol = 1e-12 * std::max(1.0, poly_scale(p));
            while (poly_degree(p) >= 1 && std::fabs(p.front()) <= tol) {
                p.erase(p.begin());
                ++k;
            }
            return k;
        };
        int zn = strip(ns), zd = strip(ds);
        require(!poly_is_zero(ds), "division by zero", "expansion of f with zero denominator");
        LaurentSeries s;
        s.at_infinity = at_inf;
        s.center = center;
        s.kmin = zn - zd + extra_shift;
        s.ktrunc = ktrunc;
        int terms = ktrunc - s.kmin + 1;
        if (terms <= 0) {
            s.coef.assign(1, 0.0);
            s.kmin = ktrunc;
            return s;
        }
        s.coef.assign(static_cast<size_t>(terms), 0.0);
        const double b0 = ds[0];
        for (int m = 0; m < terms; ++m) {
            Complex acc = (m < static_cast<int>(ns.size())) ? Complex(ns[m]) : Complex(0.0);
            for (int j = 0; j < m; ++j) {
                int bk = m - j;
                double bc = (bk < static_cast<int>(ds.size())) ? ds[bk] : 0.0;
                acc -= s.coef[j] * bc;
            }
            s.coef[m] = acc / b0;
        }
        if (poly_is_zero(ns)) {
            s.coef.assign(1, 0.0);
            s.kmin = 0;
        }
        return s;
    }

    Poly num_, den_;
};

struct AtInfinity {};

inline LaurentSeries laurent_expand(const RationalFunction& f, double center, int trunc) {
    return f.laurent_at(center, trunc);
}
inline LaurentSeries laurent_expand(const RationalFunction& f, AtInfinity, int trunc_z) {
    return f.laurent_at_infinity(trunc_z);
}

// residue() over both representations the contract names.
inline Complex residue(const RationalFunction& f, double p) { return f.residue(p); }
inline Complex residue_at_infinity(const RationalFunction& f) { return f.residue_at_infinity(); }
inline Complex residue(const LaurentSeries& s) { return series_residue(s); }

}  // namespace btrengine
