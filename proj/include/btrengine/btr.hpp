#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "btrengine/omega2.hpp"
#include "btrengine/pole_basis.hpp"

namespace btrengine {

// --- local series with tensor coefficients ----------------------------------
//
// Everything the recursion manipulates near a ramification point is a Laurent
// series in u = zeta - p whose coefficients are sums of separable products of
// pole-basis factors over the live variables (variable 0 is the form's first
// slot, 1..n-1 the spectators). Products never share a variable, so the
// algebra closes over this representation.

using FactorSet = std::vector<std::pair<int, PoleKey>>;  // sorted by variable

struct TensorExpr {
    std::map<FactorSet, double> terms;

    void add(const FactorSet& f, double c) {
        if (c == 0.0) return;
        auto& slot = terms[f];
        slot += c;
        if (std::fabs(slot) < 1e-300) terms.erase(f);
    }
    void add(const TensorExpr& o, double scale = 1.0) {
        for (const auto& [f, c] : o.terms) add(f, c * scale);
    }
    bool empty() const { return terms.empty(); }

    friend TensorExpr merge(const TensorExpr& a, const TensorExpr& b) {
        TensorExpr r;
        for (const auto& [fa, ca] : a.terms)
            for (const auto& [fb, cb] : b.terms) {
                FactorSet f = fa;
                f.insert(f.end(), fb.begin(), fb.end());
                std::sort(f.begin(), f.end());
                r.add(f, ca * cb);
            }
        return r;
    }
};

struct TensorSeries {
    int kmin = 0;
    std::vector<TensorExpr> coef;

    int khigh() const { return kmin + static_cast<int>(coef.size()) - 1; }
    TensorExpr& at(int k) {
        require(k >= kmin && k <= khigh(), "insufficient truncation", "tensor series access");
        return coef[static_cast<size_t>(k - kmin)];
    }
    const TensorExpr* get(int k) const {
        if (k < kmin || k > khigh()) return nullptr;
        return &coef[static_cast<size_t>(k - kmin)];
    }
    static TensorSeries zero(int kmin, int khigh) {
        TensorSeries s;
        s.kmin = kmin;
        s.coef.assign(static_cast<size_t>(khigh - kmin + 1), {});
        return s;
    }
    void add(const TensorSeries& o, double scale = 1.0) {
        for (int k = o.kmin; k <= o.khigh(); ++k) {
            const TensorExpr* e = o.get(k);
            if (e && k >= kmin && k <= khigh()) at(k).add(*e, scale);
        }
    }
    friend TensorSeries mul(const TensorSeries& a, const TensorSeries& b, int hi) {
        TensorSeries r = zero(a.kmin + b.kmin, hi);
        for (int i = a.kmin; i <= a.khigh(); ++i)
            for (int j = b.kmin; j <= b.khigh() && i + j <= hi; ++j) {
                const TensorExpr *ea = a.get(i), *eb = b.get(j);
                if (!ea || !eb || ea->empty() || eb->empty()) continue;
                r.at(i + j).add(merge(*ea, *eb));
            }
        return r;
    }
};

// real Laurent series in u; thin wrapper used for the numeric parts
struct RSeries {
    int kmin = 0;
    std::vector<double> c;

    int khigh() const { return kmin + static_cast<int>(c.size()) - 1; }
    double get(int k) const {
        if (k < kmin || k > khigh()) return 0.0;
        return c[static_cast<size_t>(k - kmin)];
    }
    static RSeries from_laurent(const LaurentSeries& s) {
        RSeries r;
        r.kmin = s.kmin;
        r.c.resize(s.coef.size());
        for (size_t i = 0; i < s.coef.size(); ++i) {
            require(std::fabs(s.coef[i].imag()) <= 1e-9 * (1.0 + std::abs(s.coef[i])),
                    "internal", "expected a real series");
            r.c[i] = s.coef[i].real();
        }
        return r;
    }
};

inline TensorSeries mul_numeric(const TensorSeries& a, const RSeries& s, int hi) {
    TensorSeries r = TensorSeries::zero(a.kmin + s.kmin, hi);
    for (int i = a.kmin; i <= a.khigh(); ++i)
        for (int j = s.kmin; j <= s.khigh() && i + j <= hi; ++j) {
            const TensorExpr* ea = a.get(i);
            if (!ea || ea->empty() || s.get(j) == 0.0) continue;
            r.at(i + j).add(*ea, s.get(j));
        }
    return r;
}

// --- option block ------------------------------------------------------------

enum class BlobMode { normal, dropped, flipped };

struct BtrOptions {
    int gmax = 2;
    int nmax = 3;
    int truncation_margin = 4;     // extra series orders past the needed residue
    double symmetry_tol = 1e-8;
    double contour_eps = 0.1;
    BlobMode blob_mode = BlobMode::normal;
};

// Public view of the recursion kernel K(z, zeta) expanded at a ramification
// point: per power of (zeta - p) a rational function of z carried as
// pole-basis coefficients on variable 0.
struct KernelSeries {
    int p = 1;
    TensorSeries series;  // orders -1 .. truncation
    int truncation() const { return series.khigh(); }

    RationalFunction coefficient_rational(int order) const {
        RationalFunction acc = RationalFunction::constant(0.0);
        const TensorExpr* e = series.get(order);
        if (!e) return acc;
        for (const auto& [f, c] : e->terms) {
            require(f.size() == 1 && f[0].first == 0, "internal", "kernel coefficient shape");
            acc = acc + RationalFunction::basis(f[0].second.pole, f[0].second.order, c);
        }
        return acc;
    }
};

// --- the omega table ----------------------------------------------------------

class OmegaTable {
public:
    OmegaTable(const ModelSpec& spec, std::vector<CellWeight> weights, SpectralData curve,
               Omega02 om, BtrOptions opts = {})
        : spec_(spec),
          weights_(std::move(weights)),
          curve_(std::move(curve)),
          om_(std::move(om)),
          opts_(opts),
          tk_(interactions(spec, weights_)) {
        require(curve_.symmetric(), "hypothesis 1(ii) violated",
                "blobbed recursion needs a symmetric support");
    }

    const SpectralData& curve() const { return curve_; }
    const Omega02& omega02() const { return om_; }
    const ModelSpec& spec() const { return spec_; }
    const BtrOptions& options() const { return opts_; }
    const std::map<std::pair<int, int>, InteractionPoly>& interactions_table() const { return tk_; }

    bool has(int g, int n) const { return stable_.count({g, n}) > 0; }

    const PoleBasisForm& omega(int g, int n) {
        require(g >= 0 && n >= 1 && 2 * g - 2 + n >= 1, "unstable", "omega(g,n) needs 2g-2+n >= 1");
        auto it = stable_.find({g, n});
        if (it != stable_.end()) return it->second;
        compute(g, n);
        return stable_.at({g, n});
    }

    const std::map<std::pair<int, int>, PoleBasisForm>& stable() const { return stable_; }

    void compute_all(int gmax, int nmax) {
        for (int g = 0; g <= gmax; ++g)
            for (int n = 1; n <= nmax; ++n)
                if (2 * g - 2 + n >= 1) omega(g, n);
    }

    // ---- kernel -------------------------------------------------------------

    KernelSeries recursion_kernel(int p, int order) const {
        KernelSeries K;
        K.p = p;
        // numerator: [1/(z-zeta) - 1/(z-1/zeta)] + [P2(z,zeta) - P2(z,1/zeta)],
        // built as a tensor series in u = zeta - p with variable-0 factors
        const int hi = order;
        TensorSeries num = TensorSeries::zero(0, hi + 2);

        // 1/(z - zeta) = sum_m u^m / (z - p)^{m+1}
        for (int m = 0; m <= hi + 2; ++m)
            num.at(m).add({{0, PoleKey{static_cast<int8_t>(p), static_cast<int16_t>(m + 1)}}}, 1.0);

        // -1/(z - 1/zeta) via v = 1/zeta - p
        {
            RationalFunction inv_minus_p(Poly{1.0, -static_cast<double>(p)}, Poly{0.0, 1.0});
            RSeries v = RSeries::from_laurent(inv_minus_p.laurent_at(p, hi + 3));
            // powers of v
            RSeries vp;
            vp.kmin = 0;
            vp.c = {1.0};
            for (int m = 0; m <= hi + 2; ++m) {
                if (m > 0) {
                    // vp *= v
                    RSeries next;
                    next.kmin = vp.kmin + v.kmin;
                    next.c.assign(static_cast<size_t>(hi + 3 - next.kmin + 1), 0.0);
                    for (int i = vp.kmin; i <= vp.khigh(); ++i)
                        for (int j = v.kmin; j <= v.khigh(); ++j) {
                            if (i + j > hi + 2) continue;
                            next.c[static_cast<size_t>(i + j - next.kmin)] += vp.get(i) * v.get(j);
                        }
                    vp = next;
                }
                for (int l = std::max(vp.kmin, 0); l <= std::min(vp.khigh(), hi + 2); ++l)
                    num.at(l).add({{0, PoleKey{static_cast<int8_t>(p), static_cast<int16_t>(m + 1)}}},
                                  -vp.get(l));
            }
        }

        // P2(z, zeta) - P2(z, 1/zeta), with
        // P2(z,tau) = sum_{k,i} S_k(z) beta[k][i] tau^{-i} / i
        for (int k = 1; k <= om_.dim; ++k)
            for (int i = 1; i <= om_.dim; ++i) {
                const double bki = om_.beta[k][i];
                if (bki == 0.0) continue;
                RationalFunction taum = RationalFunction::monomial(-i);
                RationalFunction taup = RationalFunction::monomial(i);
                RSeries sm = RSeries::from_laurent(taum.laurent_at(p, hi + 2));
                RSeries sp = RSeries::from_laurent(taup.laurent_at(p, hi + 2));
                for (int r = 0; 2 * r <= k - 1; ++r) {
                    const double skc = c_table(k, r);
                    const int e = 2 * r - k - 1;  // z-exponent, always <= -2
                    PoleKey zkey{0, static_cast<int16_t>(-e)};
                    for (int l = 0; l <= hi + 2; ++l) {
                        double c = skc * bki / i * (sm.get(l) - sp.get(l));
                        if (c != 0.0) num.at(l).add({{0, zkey}}, c);
                    }
                }
            }

        // denominator: [W(zeta) - W(1/zeta)] x'(zeta), double zero at p
        RationalFunction W = curve_.w01_rational();
        RationalFunction dden = (W - W.reciprocal_argument()) * xprime_rf();
        LaurentSeries ds = dden.laurent_at(p, hi + 4);
        double dscale = 0.0;
        for (const auto& cc : ds.coef) dscale = std::max(dscale, std::abs(cc));
        ds.compress(1e-9 * dscale);
        require(ds.kmin == 2, "internal",
                "kernel denominator must have a double zero at the ramification point");
        LaurentSeries ones;
        ones.at_infinity = false;
        ones.center = p;
        ones.kmin = 0;
        ones.coef = {1.0};
        ones.ktrunc = hi + 4;
        RSeries dinv = RSeries::from_laurent(series_div(ones, ds));

        TensorSeries K2 = mul_numeric(num, dinv, hi);
        // overall 1/2, trimming the structurally empty leading order: the
        // numerator has a simple zero at p against the double zero below
        int lead = K2.kmin;
        while (lead < K2.khigh() && K2.get(lead)->empty()) ++lead;
        TensorSeries out = TensorSeries::zero(lead, hi);
        for (int o = lead; o <= hi; ++o)
            if (const TensorExpr* e = K2.get(o)) out.at(o).add(*e, 0.5);
        K.series = out;
        return K;
    }

    // ---- E term --------------------------------------------------------------

    // E_{g,n}(zeta, iota(zeta); z_I) expanded at zeta = p through order `hi`.
    // Factors of the quadratic part are expanded `depth` orders further so
    // the truncated products stay exact: the coefficient of u^o in A*B pulls
    // on A up to order o - kmin(B).
    TensorSeries e_term(int g, int n, int p, int hi) {
        const int depth = 2 * max_order_bound(g, n) + 4;
        const int hifac = hi + depth;
        TensorSeries acc = TensorSeries::zero(-4 * max_order_bound(g, n) - 8, hi);

        // omega_{g-1, n+1}(zeta, iota(zeta), z_I)
        if (g >= 1) {
            if (g - 1 == 0 && n + 1 == 2) {
                acc.add(series_w02_diagpair(p, hi));
            } else {
                const PoleBasisForm& w = omega(g - 1, n + 1);
                for (const auto& [idx, c] : w.terms()) {
                    RationalFunction rf = basis_rf(idx[0]) * iota_basis_rf(idx[1]);
                    RSeries s = RSeries::from_laurent(rf.laurent_at(p, hi));
                    TensorSeries piece = TensorSeries::zero(s.kmin, hi);
                    TensorExpr spect;
                    spect.add(spectator_factors(idx, 2), c);
                    for (int l = s.kmin; l <= s.khigh(); ++l)
                        if (s.get(l) != 0.0) piece.at(l).add(spect, s.get(l));
                    acc.add(piece);
                }
            }
        }

        // sum over (J, f) products
        const int nI = n - 1;
        for (unsigned mask = 0; mask < (1u << nI); ++mask) {
            for (int f = 0; f <= g; ++f) {
                const bool full = (mask == (1u << nI) - 1u);
                if (mask == 0 && f == 0) continue;       // excluded (empty, 0)
                if (full && f == g) continue;            // excluded (I, g)
                std::vector<int> J, Jc;
                for (int i = 0; i < nI; ++i)
                    (mask & (1u << i)) ? J.push_back(i + 1) : Jc.push_back(i + 1);
                int fa = f, na = static_cast<int>(J.size()) + 1;
                int fb = g - f, nb = n - static_cast<int>(J.size());
                if (!factor_exists(fa, na) || !factor_exists(fb, nb)) continue;
                TensorSeries A = factor_series(fa, na, J, p, hifac, false);
                TensorSeries B = factor_series(fb, nb, Jc, p, hifac, true);
                acc.add(mul(A, B, hi));
            }
        }
        return acc;
    }

    // ---- potentials and blob ---------------------------------------------------

    struct MultiRFTerm {
        double c = 1.0;
        std::map<int, RationalFunction> factors;  // spectator variable -> rational
    };
    using MultiRFExpr = std::vector<MultiRFTerm>;
    // V_{g,n}(x; z_I): polynomial in x with MultiRFExpr coefficients
    using Potential = std::map<int, MultiRFExpr>;

    Potential potential(int g, int n) {
        Potential V;
        const int nI = n - 1;
        if (g == 2 && n == 1 && tk_.count({2, 1})) {
            for (const auto& [mono, c] : tk_.at({2, 1}).monomials())
                V[mono[0]].push_back(MultiRFTerm{c, {}});
        }
        const int two_g = 2 * spec_.gbar;
        for (int k = 2; k <= two_g; ++k) {
            for (const auto& [hk, poly] : tk_) {
                if (hk.second != k || hk.first <= 0) continue;
                const int h = hk.first;
                // set partitions of the integrated slots {2..k}
                auto partitions = set_partitions(k - 1);
                for (const auto& part : partitions) {
                    const int blocks = static_cast<int>(part.size());
                    const int R = g - h - (k - 1) + blocks;
                    if (R < 0) continue;
                    // ordered spectator assignments to blocks
                    std::vector<int> assign(static_cast<size_t>(nI), 0);
                    while (true) {
                        std::vector<std::vector<int>> Jb(static_cast<size_t>(blocks));
                        for (int i = 0; i < nI; ++i) Jb[static_cast<size_t>(assign[i])].push_back(i + 1);
                        // genus compositions f_1 + ... + f_blocks = R
                        std::vector<int> fvec(static_cast<size_t>(blocks), 0);
                        fvec.back() = R;
                        enumerate_compositions(R, blocks, [&](const std::vector<int>& fs) {
                            bool ok = true;
                            for (int bidx = 0; bidx < blocks; ++bidx) {
                                int m = static_cast<int>(part[bidx].size() + Jb[bidx].size());
                                if (!factor_exists(fs[bidx], m)) ok = false;
                            }
                            if (!ok) return;
                            accumulate_potential_terms(V, poly, part, Jb, fs, k);
                        });
                        // advance assignment
                        int i = 0;
                        for (; i < nI; ++i) {
                            if (assign[i] + 1 < blocks) {
                                ++assign[i];
                                break;
                            }
                            assign[i] = 0;
                        }
                        if (nI == 0 || i == nI) break;
                    }
                }
            }
        }
        return V;
    }

    // Phi_{g,n} as a residue of omega_{0,2}(z, .) V_{g,n} at the origin; the
    // sign realizes the clockwise boundary orientation and is pinned by the
    // T-operator negative control.
    PoleBasisForm blob_term(int g, int n) {
        PoleBasisForm out(n);
        if (opts_.blob_mode == BlobMode::dropped) return out;
        Potential V = potential(g, n);
        if (V.empty()) return out;
        const double sign = (opts_.blob_mode == BlobMode::flipped) ? -1.0 : 1.0;

        for (const auto& [jdeg, expr] : V) {
            // residue at zeta = 0 of omega02(z, zeta) x(zeta)^jdeg
            // omega02 density: 1/(z-zeta)^2 + Q2(z,zeta)
            // diag part: sum_m (m+1) zeta^m / z^{m+2}; Q2: z^{-a-1} zeta^{-i-1}
            std::map<PoleKey, double> z0_of_residue;
            for (int e = -jdeg; e <= jdeg; ++e) {
                double xc = om_.x_power_coeff(jdeg, e);
                if (xc == 0.0) continue;
                // pair zeta^e with zeta^m from diag: e + m = -1 impossible (m >= 0, e >= -jdeg)
                if (e <= -1) {
                    int m = -1 - e;
                    z0_of_residue[PoleKey{0, static_cast<int16_t>(m + 2)}] += xc * (m + 1);
                }
                // pair zeta^e with zeta^{-i-1} from Q2: e - i - 1 = -1 -> i = e
                if (e >= 1 && e <= om_.dim) {
                    for (int a = 1; a <= om_.dim; ++a) {
                        double q = om_.q2_coeff(a, e);
                        if (q != 0.0) z0_of_residue[PoleKey{0, static_cast<int16_t>(a + 1)}] += xc * q;
                    }
                }
            }
            if (z0_of_residue.empty()) continue;

            if (n == 1) {
                double total = 0.0;
                for (const auto& term : expr) total += term.c;
                for (const auto& [zk, zc] : z0_of_residue) out.add_term({zk}, sign * zc * total);
            } else if (n == 2) {
                // single spectator: sum the rational content first, decompose once
                // (individual terms may carry polynomial pieces that cancel)
                RationalFunction sum = RationalFunction::constant(0.0);
                for (const auto& term : expr) {
                    RationalFunction rf = xprime_rf();
                    auto it = term.factors.find(1);
                    if (it != term.factors.end()) rf = rf * it->second;
                    sum = sum + RationalFunction::constant(term.c) * rf;
                }
                if (sum.is_zero()) continue;
                auto pf = sum.partial_fractions_basis();
                for (const auto& [zk, zc] : z0_of_residue)
                    for (const auto& [po, c] : pf)
                        out.add_term({zk, PoleKey{static_cast<int8_t>(po.first),
                                                  static_cast<int16_t>(po.second)}},
                                     sign * zc * c);
            } else {
                // several spectators: decompose factor by factor
                for (const auto& term : expr) {
                    std::vector<MultiIndex> idxs{MultiIndex(static_cast<size_t>(n))};
                    std::vector<double> vals{term.c * sign};
                    for (int var = 1; var < n; ++var) {
                        RationalFunction rf = xprime_rf();
                        auto it = term.factors.find(var);
                        if (it != term.factors.end()) rf = rf * it->second;
                        auto pf = rf.partial_fractions_basis();
                        std::vector<MultiIndex> nidx;
                        std::vector<double> nval;
                        for (size_t q = 0; q < idxs.size(); ++q)
                            for (const auto& [po, c] : pf) {
                                MultiIndex m = idxs[q];
                                m[static_cast<size_t>(var)] = PoleKey{
                                    static_cast<int8_t>(po.first), static_cast<int16_t>(po.second)};
                                nidx.push_back(m);
                                nval.push_back(vals[q] * c);
                            }
                        idxs = std::move(nidx);
                        vals = std::move(nval);
                    }
                    for (const auto& [zk, zc] : z0_of_residue)
                        for (size_t q = 0; q < idxs.size(); ++q) {
                            MultiIndex m = idxs[q];
                            m[0] = zk;
                            out.add_term(m, zc * vals[q]);
                        }
                }
            }
        }
        return out;
    }

    // ---- gamma moments ---------------------------------------------------------

    // (1/2pi i) oint x(zeta)^m (zeta-p)^{-o} dzeta over the basis contour
    double res_moment(int m, int p, int o) const {
        RationalFunction f = x_power_rf(m) * RationalFunction::basis(p, o);
        Complex r = f.residue(p);
        if (p != 0) r += f.residue(0.0);
        return r.real();
    }

    // gamma moment of a univariate pole-basis slice (coefficients per key)
    Complex gamma_moment(const std::map<std::pair<int, int>, Complex>& slice, int m) const {
        Complex acc = 0.0;
        for (const auto& [po, c] : slice) acc += c * res_moment(m, po.first, po.second);
        return acc;
    }

    // ---- the recursion ----------------------------------------------------------

    void compute(int g, int n) {
        require(2 * g - 2 + n >= 1, "unstable", "compute needs a stable pair");
        if (stable_.count({g, n})) return;
        // dependencies first
        if (g >= 1 && !(g - 1 == 0 && n + 1 == 2)) omega(g - 1, n + 1);
        for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask)
            for (int f = 0; f <= g; ++f) {
                int na = __builtin_popcount(mask) + 1, nb = n - __builtin_popcount(mask);
                if ((mask == 0 && f == 0) || (na == n && f == g)) continue;
                if (factor_exists(f, na) && 2 * f - 2 + na >= 1) omega(f, na);
                if (factor_exists(g - f, nb) && 2 * (g - f) - 2 + nb >= 1) omega(g - f, nb);
            }
        ensure_potential_deps(g, n);

        PoleBasisForm result = blob_term(g, n);
        for (int p : {1, -1}) {
            // expand E far enough that the kernel residue is exact
            TensorSeries E = e_term(g, n, p, opts_.truncation_margin);
            int emin = E.kmin;
            while (emin <= E.khigh() && E.get(emin)->empty()) ++emin;
            KernelSeries K = recursion_kernel(p, -1 - emin + 1);
            // residue: coefficient of u^{-1} in K * E
            for (int a = K.series.kmin; a <= K.series.khigh(); ++a) {
                int b = -1 - a;
                const TensorExpr* ka = K.series.get(a);
                const TensorExpr* eb = E.get(b);
                if (!ka || !eb || ka->empty() || eb->empty()) continue;
                TensorExpr prod = merge(*ka, *eb);
                for (const auto& [fset, c] : prod.terms) {
                    require(static_cast<int>(fset.size()) == n, "internal",
                            "recursion term misses a variable factor");
                    MultiIndex idx(static_cast<size_t>(n));
                    for (const auto& [var, key] : fset) idx[static_cast<size_t>(var)] = key;
                    result.add_term(idx, c);
                }
            }
        }
        result.prune(1e-13 * std::max(1.0, result.max_abs_coeff()));

        const double defect = result.symmetry_defect();
        require(defect <= opts_.symmetry_tol * std::max(1.0, result.max_abs_coeff()),
                "symmetry violation", "computed omega_{g,n} is not permutation symmetric");
        stable_.emplace(std::make_pair(g, n), std::move(result));
    }

    // ---- extraction ---------------------------------------------------------------

    // Q_{g; perims}: x-expansion coefficients of W_{g,n}
    double stuffed_map_coeffs(int g, const std::vector<int>& perims) {
        const int n = static_cast<int>(perims.size());
        if (g == 0 && n == 1) return curve_.moment(perims[0]);
        if (g == 0 && n == 2) return omega2_xmoment(om_, perims[0], perims[1]);
        const PoleBasisForm& w = omega(g, n);
        double acc = 0.0;
        for (const auto& [idx, c] : w.terms()) {
            double term = c;
            for (int i = 0; i < n; ++i) term *= res_moment(perims[static_cast<size_t>(i)],
                                                           idx[static_cast<size_t>(i)].pole,
                                                           idx[static_cast<size_t>(i)].order);
            acc += term;
        }
        return acc;
    }

    // W_{f,m} as a function of points on the exterior chart
    Complex w_eval(int f, int m, const std::vector<Complex>& z) {
        require(static_cast<int>(z.size()) == m, "arity mismatch", "w_eval");
        if (f == 0 && m == 1) return curve_.w01_z(z[0]);
        if (f == 0 && m == 2)
            return om_.F(z[0], z[1]) / (curve_.dx_of_z(z[0]) * curve_.dx_of_z(z[1]));
        const PoleBasisForm& w = omega(f, m);
        Complex den = 1.0;
        for (Complex zi : z) den *= curve_.dx_of_z(zi);
        return w.eval_density(z) / den;
    }

    RationalFunction xprime_rf() const {
        return RationalFunction(Poly{-om_.gamma, 0.0, om_.gamma}, Poly{0.0, 0.0, 1.0});
    }

    // ---- residual checkers --------------------------------------------------

    // max | P_+ omega_{g,n} + O omega_{g,n} + d_z V_{g,n} | over probe points
    // on the contour, spectators held at fixed exterior positions.
    double t_operator_residual(int g, int n, const std::vector<Complex>& probes,
                               const std::vector<Complex>& spectators) {
        const PoleBasisForm& w = omega(g, n);
        auto slice = w.slice(0, spectators);
        Potential V = potential(g, n);

        // gamma moments of the sliced form
        std::map<int, Complex> gm;
        for (int m = 1; m <= om_.dim + 1; ++m) gm[m] = gamma_moment(slice, m);

        Complex spect_jac = 1.0;
        for (Complex zs : spectators) spect_jac *= curve_.dx_of_z(zs);

        double worst = 0.0;
        for (Complex z : probes) {
            Complex f = 0.0, fi = 0.0;
            for (const auto& [po, c] : slice) {
                f += c / std::pow(z - static_cast<double>(po.first), po.second);
                fi += c / std::pow(1.0 / z - static_cast<double>(po.first), po.second);
            }
            Complex phat = f - fi / (z * z);

            Complex ohat = 0.0;
            for (const auto& [km, nu] : om_.nu) {
                const int k = km.first, m = km.second;
                ohat += static_cast<double>(k) * nu * std::pow(om_.x_of_z(z), k - 1) *
                        curve_.dx_of_z(z) * gm.at(m);
            }

            Complex dv = 0.0;
            for (const auto& [jdeg, expr] : V) {
                if (jdeg == 0) continue;
                Complex coeff = 0.0;
                for (const auto& term : expr) {
                    Complex t = term.c;
                    for (const auto& [var, rf] : term.factors)
                        t *= rf.eval(spectators[static_cast<size_t>(var - 1)]);
                    coeff += t;
                }
                dv += coeff * static_cast<double>(jdeg) * std::pow(om_.x_of_z(z), jdeg - 1) *
                      curve_.dx_of_z(z);
            }
            dv *= spect_jac;

            worst = std::max(worst, std::abs(phat + ohat + dv));
        }
        return worst;
    }

    // rank-n Schwinger-Dyson residual at order N^{3-2g-n}, evaluated at probe
    // points in the exterior chart with the contour terms done by quadrature.
    // Everything independent of the probe is tabulated on the contour first.
    double sde_residual(int g, int n, const std::vector<Complex>& probes_z,
                        const std::vector<Complex>& spectators_z, int quad_m = 400) {
        require(static_cast<int>(spectators_z.size()) == n - 1, "arity mismatch", "sde_residual");
        // Any radius between the unit circle and the probe moduli encloses the
        // same poles; a wider ring keeps the trapezoid error away from the
        // high-order poles at the ramification points.
        const double radius = 1.3;
        for (Complex zp : probes_z)
            require(std::abs(zp) > radius * 1.15, "invalid probe", "sde probes must stay outside the ring");
        for (Complex zs : spectators_z)
            require(std::abs(zs) > radius * 1.15, "invalid probe", "sde spectators must stay outside the ring");
        const int nI = n - 1;

        // contour nodes for the outermost variable
        std::vector<Complex> nodes(static_cast<size_t>(quad_m));
        for (int s2 = 0; s2 < quad_m; ++s2)
            nodes[static_cast<size_t>(s2)] = std::polar(radius, 2.0 * M_PI * s2 / quad_m);

        // probe-independent weight on each node; the probe couples through
        // 1/(x - x(zeta_1)) only
        std::vector<Complex> grid(static_cast<size_t>(quad_m), 0.0);

        // derivative-kernel terms
        for (int i = 0; i < nI; ++i) {
            Complex xi = om_.x_of_z(spectators_z[static_cast<size_t>(i)]);
            std::vector<Complex> rest;
            for (int q = 0; q < nI; ++q)
                if (q != i) rest.push_back(spectators_z[static_cast<size_t>(q)]);
            for (int s2 = 0; s2 < quad_m; ++s2) {
                Complex zeta = nodes[static_cast<size_t>(s2)];
                std::vector<Complex> args{zeta};
                args.insert(args.end(), rest.begin(), rest.end());
                Complex xz = om_.x_of_z(zeta);
                grid[static_cast<size_t>(s2)] += w_eval(g, n - 1, args) * curve_.dx_of_z(zeta) *
                                                 zeta / ((xi - xz) * (xi - xz)) /
                                                 static_cast<double>(quad_m);
            }
        }

        // interaction terms
        for (const auto& [hk, poly] : tk_) {
            const int h = hk.first, k = hk.second;
            auto monos = poly.monomials();
            auto parts = set_partitions(k);
            for (const auto& part : parts) {
                const int blocks = static_cast<int>(part.size());
                const int R = g - h - k + blocks;
                if (R < 0) continue;
                std::vector<int> assign(static_cast<size_t>(nI), 0);
                while (true) {
                    std::vector<std::vector<int>> Jb(static_cast<size_t>(blocks));
                    for (int i = 0; i < nI; ++i) Jb[static_cast<size_t>(assign[i])].push_back(i);
                    enumerate_compositions(R, blocks, [&](const std::vector<int>& fs) {
                        bool ok = true;
                        for (int b = 0; b < blocks; ++b)
                            if (!factor_exists(fs[static_cast<size_t>(b)],
                                               static_cast<int>(part[static_cast<size_t>(b)].size() +
                                                                Jb[static_cast<size_t>(b)].size())))
                                ok = false;
                        if (!ok) return;
                        add_interaction_grid(grid, nodes, monos, part, Jb, fs, k, spectators_z,
                                             quad_m);
                    });
                    int i = 0;
                    for (; i < nI; ++i) {
                        if (assign[i] + 1 < blocks) {
                            ++assign[i];
                            break;
                        }
                        assign[i] = 0;
                    }
                    if (nI == 0 || i == nI) break;
                }
            }
        }

        double worst = 0.0;
        for (Complex z : probes_z) {
            const Complex x = om_.x_of_z(z);
            Complex total = 0.0;
            if (g >= 1) {
                std::vector<Complex> args{z, z};
                args.insert(args.end(), spectators_z.begin(), spectators_z.end());
                total += w_eval(g - 1, n + 1, args);
            }
            for (unsigned mask = 0; mask < (1u << nI); ++mask)
                for (int f = 0; f <= g; ++f) {
                    std::vector<Complex> za{z}, zb{z};
                    for (int i = 0; i < nI; ++i)
                        ((mask >> i) & 1u) ? za.push_back(spectators_z[static_cast<size_t>(i)])
                                           : zb.push_back(spectators_z[static_cast<size_t>(i)]);
                    if (!factor_exists(f, static_cast<int>(za.size())) ||
                        !factor_exists(g - f, static_cast<int>(zb.size())))
                        continue;
                    total += w_eval(f, static_cast<int>(za.size()), za) *
                             w_eval(g - f, static_cast<int>(zb.size()), zb);
                }
            for (int s2 = 0; s2 < quad_m; ++s2)
                total += grid[static_cast<size_t>(s2)] / (x - om_.x_of_z(nodes[static_cast<size_t>(s2)]));
            worst = std::max(worst, std::abs(total));
        }
        return worst;
    }

    // (0,2) jump relation: hat P_+ W_{0,2} + O W_{0,2} + 1/(x-x_2)^2 = 0 on V
    double w02_jump_residual(const std::vector<Complex>& probes, Complex z2, int quad_m = 600) {
        const double radius = 1.3;
        // function-level gamma moments of W_{0,2}(., x_2)
        std::map<int, Complex> q;
        for (int m = 1; m <= om_.dim + 1; ++m) {
            Complex acc = 0.0;
            for (int s = 0; s < quad_m; ++s) {
                double th = 2.0 * M_PI * s / quad_m;
                Complex zeta = std::polar(radius * 1.03, th);
                acc += std::pow(om_.x_of_z(zeta), m) * om_.F(zeta, z2) * zeta / curve_.dx_of_z(z2);
            }
            q[m] = acc / static_cast<double>(quad_m);
        }
        double worst = 0.0;
        for (Complex z : probes) {
            Complex w1 = w_eval(0, 2, {z, z2});
            Complex w2 = w_eval(0, 2, {1.0 / z, z2});
            Complex ohat = 0.0;
            for (const auto& [km, nu] : om_.nu)
                ohat += static_cast<double>(km.first) * nu *
                        std::pow(om_.x_of_z(z), km.first - 1) * q.at(km.second);
            Complex dx = om_.x_of_z(z) - om_.x_of_z(z2);
            worst = std::max(worst, std::abs(w1 + w2 + ohat + 1.0 / (dx * dx)));
        }
        return worst;
    }

    RationalFunction x_power_rf(int m) const {
        Poly num(static_cast<size_t>(2 * m + 1), 0.0);
        for (int e = -m; e <= m; ++e) num[static_cast<size_t>(e + m)] = om_.x_power_coeff(m, e);
        Poly den(static_cast<size_t>(m + 1), 0.0);
        den.back() = 1.0;
        return RationalFunction(num, den);
    }

private:
    // upper bound on basis pole orders among already-computed forms
    int max_order_bound(int g, int n) const {
        int m = 4;
        for (const auto& [gn, w] : stable_)
            for (const auto& [idx, c] : w.terms())
                for (const auto& k : idx) m = std::max(m, static_cast<int>(k.order));
        (void)g;
        (void)n;
        return m;
    }

    static FactorSet spectator_factors(const MultiIndex& idx, int first_spectator_slot) {
        FactorSet f;
        for (size_t i = static_cast<size_t>(first_spectator_slot); i < idx.size(); ++i)
            f.push_back({static_cast<int>(i) - first_spectator_slot + 1, idx[i]});
        return f;
    }

    bool factor_exists(int f, int m) const {
        if (f < 0 || m < 1) return false;
        if (f == 0 && (m == 1 || m == 2)) return true;
        return 2 * f - 2 + m >= 1;
    }

    RationalFunction basis_rf(const PoleKey& k) const {
        return RationalFunction::basis(k.pole, k.order);
    }

    // density of the basis form evaluated at iota(zeta), Jacobian included
    RationalFunction iota_basis_rf(const PoleKey& k) const {
        Poly num(static_cast<size_t>(k.order + 1), 0.0);
        num.back() = -1.0;  // -z^o
        Poly den{1.0};
        Poly lin{1.0, -static_cast<double>(k.pole)};
        for (int i = 0; i < k.order; ++i) den = poly_mul(den, lin);
        den = poly_mul(den, Poly{0.0, 0.0, 1.0});  // z^2
        return RationalFunction(num, den);
    }

    // omega_{0,2}(zeta, iota(zeta)) density in dzeta^2 as an exact rational
    RationalFunction w02_diagpair_rf() const {
        // -1/(zeta^2-1)^2 + [Q2(zeta, 1/zeta)] * (-1/zeta^2)
        Poly den = poly_mul(Poly{-1.0, 0.0, 1.0}, Poly{-1.0, 0.0, 1.0});
        RationalFunction acc(Poly{-1.0}, den);
        for (int a = 1; a <= om_.dim; ++a)
            for (int i = 1; i <= om_.dim; ++i) {
                double c = om_.q2_coeff(a, i);
                if (c != 0.0) acc = acc + RationalFunction::monomial(i - a - 2, -c);
            }
        return acc;
    }

    TensorSeries series_w02_diagpair(int p, int hi) const {
        RSeries s = RSeries::from_laurent(w02_diagpair_rf().laurent_at(p, hi));
        TensorSeries out = TensorSeries::zero(s.kmin, hi);
        for (int l = s.kmin; l <= s.khigh(); ++l)
            if (s.get(l) != 0.0) out.at(l).add(FactorSet{}, s.get(l));
        return out;
    }

    // omega_{0,2}(zeta, z_j) expanded at zeta = p
    TensorSeries series_w02_spectator(int j, int p, int hi, bool at_iota) const {
        TensorSeries out = TensorSeries::zero(0, hi);
        for (int m = 0; m <= hi; ++m) {
            if (!at_iota) {
                // 1/(zeta - z_j)^2: u^m coefficient (m+1)/(z_j - p)^{m+2}
                out.at(m).add({{j, PoleKey{static_cast<int8_t>(p), static_cast<int16_t>(m + 2)}}},
                              m + 1.0);
            } else {
                // -(m+1)(-p)^m z_j^m/(z_j-p)^{m+2}, expanded over the basis
                double mp = (m % 2 == 0) ? 1.0 : -static_cast<double>(p);
                double binom = 1.0;
                for (int i = 0; i <= m; ++i) {
                    double pp = 1.0;
                    for (int q = 0; q < m - i; ++q) pp *= p;
                    out.at(m).add(
                        {{j, PoleKey{static_cast<int8_t>(p), static_cast<int16_t>(m + 2 - i)}}},
                        -(m + 1.0) * mp * binom * pp);
                    binom = binom * (m - i) / (i + 1.0);
                }
            }
        }
        // Q2 part; at iota the Jacobian turns zeta^{-a-1} into -zeta^{a-1}
        for (int a = 1; a <= om_.dim; ++a) {
            RationalFunction zf = at_iota ? RationalFunction::monomial(a - 1, -1.0)
                                          : RationalFunction::monomial(-a - 1);
            RSeries s = RSeries::from_laurent(zf.laurent_at(p, hi));
            for (int i = 1; i <= om_.dim; ++i) {
                double q = om_.q2_coeff(a, i);
                if (q == 0.0) continue;
                for (int l = std::max(0, s.kmin); l <= s.khigh() && l <= hi; ++l) {
                    double c = q * s.get(l);
                    if (c != 0.0)
                        out.at(l).add({{j, PoleKey{0, static_cast<int16_t>(i + 1)}}}, c);
                }
            }
        }
        return out;
    }

    // omega_{f,m}(slot, z_vars) with the live slot at zeta or iota(zeta)
    TensorSeries factor_series(int f, int m, const std::vector<int>& vars, int p, int hi,
                               bool at_iota) {
        if (f == 0 && m == 2) return series_w02_spectator(vars[0], p, hi, at_iota);
        const PoleBasisForm& w = omega(f, m);
        TensorSeries acc = TensorSeries::zero(-2 * max_order_bound(f, m) - 4, hi);
        for (const auto& [idx, c] : w.terms()) {
            RationalFunction rf = at_iota ? iota_basis_rf(idx[0]) : basis_rf(idx[0]);
            RSeries s = RSeries::from_laurent(rf.laurent_at(p, hi));
            TensorExpr spect;
            FactorSet fs;
            for (size_t q = 1; q < idx.size(); ++q) fs.push_back({vars[q - 1], idx[q]});
            std::sort(fs.begin(), fs.end());
            spect.add(fs, c);
            for (int l = std::max(s.kmin, acc.kmin); l <= s.khigh() && l <= hi; ++l)
                if (s.get(l) != 0.0) acc.at(l).add(spect, s.get(l));
        }
        return acc;
    }

    static std::vector<std::vector<std::vector<int>>> set_partitions(int n) {
        std::vector<std::vector<std::vector<int>>> out;
        std::vector<std::vector<int>> current;
        std::function<void(int)> place = [&](int i) {
            if (i == n) {
                out.push_back(current);
                return;
            }
            for (auto& block : current) {
                block.push_back(i);
                place(i + 1);
                block.pop_back();
            }
            current.push_back({i});
            place(i + 1);
            current.pop_back();
        };
        place(0);
        return out;
    }

    static void enumerate_compositions(int total, int parts,
                                       const std::function<void(const std::vector<int>&)>& fn) {
        std::vector<int> f(static_cast<size_t>(parts), 0);
        std::function<void(int, int)> rec = [&](int idx, int rest) {
            if (idx == parts - 1) {
                f[static_cast<size_t>(idx)] = rest;
                fn(f);
                return;
            }
            for (int v = 0; v <= rest; ++v) {
                f[static_cast<size_t>(idx)] = v;
                rec(idx + 1, rest - v);
            }
        };
        if (parts == 0) {
            if (total == 0) fn(f);
            return;
        }
        rec(0, total);
    }

    void ensure_potential_deps(int g, int n) {
        // factors W_{f,m} appearing in V_{g,n} have 2f+m-2 < 2g+n-2; walking
        // the same enumeration as `potential` and calling omega() pulls them in
        const int nI = n - 1;
        for (const auto& [hk, poly] : tk_) {
            if (hk.first <= 0 || hk.second < 2) continue;
            const int k = hk.second, h = hk.first;
            auto partitions = set_partitions(k - 1);
            for (const auto& part : partitions) {
                const int blocks = static_cast<int>(part.size());
                const int R = g - h - (k - 1) + blocks;
                if (R < 0) continue;
                enumerate_compositions(R, blocks, [&](const std::vector<int>& fs) {
                    for (int b = 0; b < blocks; ++b) {
                        int mmax = static_cast<int>(part[static_cast<size_t>(b)].size()) + nI;
                        for (int m = 1; m <= mmax; ++m)
                            if (fs[static_cast<size_t>(b)] >= 1 ||
                                (fs[static_cast<size_t>(b)] == 0 && m >= 3))
                                if (factor_exists(fs[static_cast<size_t>(b)], m) &&
                                    2 * fs[static_cast<size_t>(b)] - 2 + m >= 1 &&
                                    2 * fs[static_cast<size_t>(b)] - 2 + m < 2 * g - 2 + n)
                                    omega(fs[static_cast<size_t>(b)], m);
                    }
                });
            }
        }
    }

    // gamma-moment of one W-block against monomial exponents; returns the
    // spectator-variable rational content
    MultiRFExpr block_moment(int f, const std::vector<int>& ints_exps,
                             const std::vector<int>& spect_vars) {
        const int m = static_cast<int>(ints_exps.size() + spect_vars.size());
        MultiRFExpr out;
        if (f == 0 && m == 1) {
            // oint xi^a W01 = m_a (with m_0 = t)
            out.push_back(MultiRFTerm{curve_.moment(ints_exps[0]), {}});
            return out;
        }
        if (f == 0 && m == 2) {
            if (ints_exps.size() == 2) {
                out.push_back(MultiRFTerm{omega2_xmoment(om_, ints_exps[0], ints_exps[1]), {}});
                return out;
            }
            // one integrated slot against a spectator
            out.push_back(MultiRFTerm{1.0, {{spect_vars[0], gm2_rational(ints_exps[0])}}});
            return out;
        }
        const PoleBasisForm& w = omega(f, m);
        for (const auto& [idx, c] : w.terms()) {
            MultiRFTerm term;
            term.c = c;
            size_t slot = 0;
            for (int a : ints_exps) {
                term.c *= res_moment(a, idx[slot].pole, idx[slot].order);
                ++slot;
            }
            RationalFunction invxp = RationalFunction::constant(1.0) / xprime_rf();
            for (int var : spect_vars) {
                term.factors[var] = basis_rf(idx[slot]) * invxp;
                ++slot;
            }
            if (term.c != 0.0) out.push_back(std::move(term));
        }
        return out;
    }

    // oint xi^a W_{0,2}(xi, x_j) dxi / 2pi i as a rational function of z_j
    RationalFunction gm2_rational(int a) const {
        RationalFunction acc = RationalFunction::constant(0.0);
        // Res_0 of x^a Q1(., z): sum_{mm} (mm+1) z^mm [x^a]_{mm+1}
        Poly p0(static_cast<size_t>(std::max(a, 1)), 0.0);
        for (int mm = 0; mm <= a - 1; ++mm)
            p0[static_cast<size_t>(mm)] = (mm + 1.0) * om_.x_power_coeff(a, mm + 1);
        acc = acc + RationalFunction::from_poly(p0);
        // Res at 1/z of x^a Q1: (a/z^2) x(z)^{a-1} gamma (1 - z^2)
        if (a >= 1) {
            RationalFunction xr = x_power_rf(a - 1);
            RationalFunction jac(Poly{om_.gamma * a, 0.0, -om_.gamma * a}, Poly{0.0, 0.0, 1.0});
            acc = acc + xr * jac;
        }
        // Res_0 of x^a Q2(., z): sum_e [x^a]_e q2_coeff(e, i) z^{-i-1}
        for (int e = 1; e <= std::min(a, om_.dim); ++e) {
            double xc = om_.x_power_coeff(a, e);
            if (xc == 0.0) continue;
            for (int i = 1; i <= om_.dim; ++i) {
                double q = om_.q2_coeff(e, i);
                if (q != 0.0) acc = acc + RationalFunction::monomial(-i - 1, xc * q);
            }
        }
        return acc / xprime_rf();
    }

    // Accumulates one interaction term of the SDE onto the zeta_1 grid. The
    // integral factorizes over the partition blocks; every W factor is
    // tabulated once on its node tuple and the monomial sweep only touches
    // precomputed power tables.
    void add_interaction_grid(std::vector<Complex>& grid, const std::vector<Complex>& nodes,
                              const std::vector<std::pair<std::vector<int>, double>>& monos,
                              const std::vector<std::vector<int>>& part,
                              const std::vector<std::vector<int>>& Jb,
                              const std::vector<int>& fs, int k,
                              const std::vector<Complex>& spectators_z, int quad_m) {
        const double base = 1.3;
        const int blocks = static_cast<int>(part.size());
        const int quad_inner = std::max(160, quad_m / 2);
        const int M = static_cast<int>(nodes.size());
        double kfact = 1.0;
        for (int i = 2; i <= k - 1; ++i) kfact *= i;

        // node set per slot: slot 0 rides `nodes`, others their own circles
        std::vector<std::vector<Complex>> slot_nodes(static_cast<size_t>(k));
        slot_nodes[0] = nodes;
        for (int slot = 1; slot < k; ++slot) {
            const double rr = base * (1.0 + 0.05 * (slot + 1));
            auto& v = slot_nodes[static_cast<size_t>(slot)];
            v.resize(static_cast<size_t>(quad_inner));
            for (int s2 = 0; s2 < quad_inner; ++s2)
                v[static_cast<size_t>(s2)] = std::polar(rr, 2.0 * M_PI * s2 / quad_inner);
        }
        int max_exp = 1;
        for (const auto& [mono, mc] : monos)
            for (int e : mono) max_exp = std::max(max_exp, e);
        // x powers and quadrature measures per slot/node
        std::vector<std::vector<std::vector<Complex>>> xpow(static_cast<size_t>(k));
        std::vector<std::vector<Complex>> meas(static_cast<size_t>(k));
        for (int slot = 0; slot < k; ++slot) {
            const auto& v = slot_nodes[static_cast<size_t>(slot)];
            xpow[static_cast<size_t>(slot)].assign(v.size(),
                                                   std::vector<Complex>(static_cast<size_t>(max_exp + 1)));
            meas[static_cast<size_t>(slot)].resize(v.size());
            for (size_t q = 0; q < v.size(); ++q) {
                Complex x = om_.x_of_z(v[q]);
                Complex p = 1.0;
                for (int e = 0; e <= max_exp; ++e) {
                    xpow[static_cast<size_t>(slot)][q][static_cast<size_t>(e)] = p;
                    p *= x;
                }
                meas[static_cast<size_t>(slot)][q] =
                    curve_.dx_of_z(v[q]) * v[q] / static_cast<double>(v.size());
            }
        }

        int b0 = -1;
        for (int b = 0; b < blocks; ++b)
            if (std::find(part[static_cast<size_t>(b)].begin(), part[static_cast<size_t>(b)].end(), 0) !=
                part[static_cast<size_t>(b)].end())
                b0 = b;

        // value table per block: flattened over the block's node tuple
        std::vector<std::vector<Complex>> table(static_cast<size_t>(blocks));
        std::vector<size_t> tsize(static_cast<size_t>(blocks), 1);
        for (int b = 0; b < blocks; ++b) {
            const auto& slots = part[static_cast<size_t>(b)];
            size_t total = 1;
            for (int slot : slots) total *= slot_nodes[static_cast<size_t>(slot)].size();
            tsize[static_cast<size_t>(b)] = total;
            table[static_cast<size_t>(b)].resize(total);
            std::vector<size_t> idx(slots.size(), 0);
            for (size_t flat = 0; flat < total; ++flat) {
                std::vector<Complex> args;
                size_t rem = flat;
                for (size_t q = 0; q < slots.size(); ++q) {
                    size_t sz = slot_nodes[static_cast<size_t>(slots[q])].size();
                    idx[q] = rem % sz;
                    rem /= sz;
                    args.push_back(slot_nodes[static_cast<size_t>(slots[q])][idx[q]]);
                }
                for (int j : Jb[static_cast<size_t>(b)])
                    args.push_back(spectators_z[static_cast<size_t>(j)]);
                table[static_cast<size_t>(b)][flat] =
                    w_eval(fs[static_cast<size_t>(b)], static_cast<int>(args.size()), args);
            }
        }

        // moment of one block against given exponents; slot-0 block returns a
        // vector over the zeta_1 grid, others a scalar (vector of size one)
        auto block_moment_q = [&](int b, const std::vector<int>& mono) -> std::vector<Complex> {
            const auto& slots = part[static_cast<size_t>(b)];
            const bool has0 = (b == b0);
            std::vector<Complex> acc(has0 ? static_cast<size_t>(M) : 1, 0.0);
            for (size_t flat = 0; flat < tsize[static_cast<size_t>(b)]; ++flat) {
                Complex v = table[static_cast<size_t>(b)][flat];
                size_t rem = flat;
                size_t pos0 = 0;
                for (size_t q = 0; q < slots.size(); ++q) {
                    size_t sz = slot_nodes[static_cast<size_t>(slots[q])].size();
                    size_t nq = rem % sz;
                    rem /= sz;
                    int slot = slots[q];
                    if (slot == 0) {
                        pos0 = nq;
                        // derivative factor a_1 x^{a_1 - 1}; measure added later
                        v *= static_cast<double>(mono[0]) *
                             xpow[0][nq][static_cast<size_t>(mono[0] - 1)];
                    } else {
                        v *= xpow[static_cast<size_t>(slot)][nq][static_cast<size_t>(mono[static_cast<size_t>(slot)])] *
                             meas[static_cast<size_t>(slot)][nq];
                    }
                }
                acc[has0 ? pos0 : 0] += v;
            }
            return acc;
        };

        for (const auto& [mono, mc] : monos) {
            if (mono[0] == 0) continue;
            Complex scalar = mc / kfact;
            bool dead = false;
            for (int b = 0; b < blocks && !dead; ++b) {
                if (b == b0) continue;
                Complex m = block_moment_q(b, mono)[0];
                scalar *= m;
                if (scalar == Complex(0.0)) dead = true;
            }
            if (dead) continue;
            std::vector<Complex> g0 = block_moment_q(b0, mono);
            for (int s1 = 0; s1 < M; ++s1)
                grid[static_cast<size_t>(s1)] += scalar * g0[static_cast<size_t>(s1)] * meas[0][static_cast<size_t>(s1)];
        }
    }

    void accumulate_potential_terms(Potential& V, const InteractionPoly& poly,
                                    const std::vector<std::vector<int>>& part,
                                    const std::vector<std::vector<int>>& Jb,
                                    const std::vector<int>& fs, int k) {
        double kfact = 1.0;
        for (int i = 2; i <= k - 1; ++i) kfact *= i;
        for (const auto& [mono, mc] : poly.monomials()) {
            MultiRFExpr total;
            total.push_back(MultiRFTerm{mc / kfact, {}});
            for (size_t b = 0; b < part.size(); ++b) {
                std::vector<int> exps;
                for (int slot : part[b]) exps.push_back(mono[static_cast<size_t>(slot) + 1]);
                MultiRFExpr block = block_moment(fs[b], exps, Jb[b]);
                MultiRFExpr next;
                for (const auto& ta : total)
                    for (const auto& tb : block) {
                        MultiRFTerm t = ta;
                        t.c *= tb.c;
                        for (const auto& [var, rf] : tb.factors) t.factors[var] = rf;
                        next.push_back(std::move(t));
                    }
                total = std::move(next);
            }
            auto& slotv = V[mono[0]];
            for (auto& t : total)
                if (t.c != 0.0) slotv.push_back(std::move(t));
        }
    }

    ModelSpec spec_;
    std::vector<CellWeight> weights_;
    SpectralData curve_;
    Omega02 om_;
    BtrOptions opts_;
    std::map<std::pair<int, int>, InteractionPoly> tk_;
    std::map<std::pair<int, int>, PoleBasisForm> stable_;
};

}  // namespace btrengine
