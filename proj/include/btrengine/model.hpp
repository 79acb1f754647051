#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <sstream>
#include <vector>

#include "btrengine/rational.hpp"

namespace btrengine {

using HermitianMatrix = Eigen::MatrixXcd;

constexpr int kMaxTraceOrder = 64;

struct MultiTraceTerm {
    std::vector<int> orders;   // weakly increasing D-powers n_I
    BigRational coupling;      // alpha-hat
};

// Couplings of the ensemble. Exact rationals are the primary storage so the
// Wick oracle can fold them without rounding; the analytic modules read the
// double views.
struct ModelSpec {
    BigRational t = BigRational(1);
    int N = 1;
    int d = 2;                              // max single-trace degree
    std::map<int, BigRational> alpha;       // n -> alpha_n, 3 <= n <= d
    std::vector<MultiTraceTerm> multitrace;
    int gbar = 0;                           // max s over multitrace entries
    bool plain_1mm = false;

    double t_d() const { return t.to_double(); }

    void validate() const {
        require(t.to_double() > 0.0, "invalid spec", "temperature must be positive");
        require(N >= 1, "invalid spec", "N must be positive");
        require(d >= 2, "invalid spec", "d must be at least 2");
        for (const auto& [n, a] : alpha) {
            require(n >= 3 && n <= d, "invalid spec", "alpha order outside [3, d]");
            (void)a;
        }
        int smax = 0;
        for (const auto& mt : multitrace) {
            require(!mt.orders.empty(), "invalid spec", "empty multitrace order list");
            require(std::is_sorted(mt.orders.begin(), mt.orders.end()), "invalid spec",
                    "multitrace orders must be weakly increasing");
            for (int n : mt.orders)
                require(n >= 1 && n <= kMaxTraceOrder, "invalid spec", "multitrace order out of range");
            smax = std::max(smax, static_cast<int>(mt.orders.size()));
        }
        require(multitrace.empty() || smax <= gbar, "invalid spec",
                "gbar below the multitrace arity present");
    }
};

// Boltzmann weight of one elementary 2-cell (g; l_1 <= ... <= l_k).
struct CellWeight {
    int g = 0;
    std::vector<int> perims;
    BigRational exact;
    double value = 0.0;

    int boundaries() const { return static_cast<int>(perims.size()); }
    int chi() const { return 2 - 2 * g - boundaries(); }

    std::string name() const {
        std::ostringstream os;
        os << "t[" << g << ";";
        for (size_t i = 0; i < perims.size(); ++i) os << (i ? "," : "") << perims[i];
        os << "]";
        return os.str();
    }
};

namespace detail {

inline double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

inline BigRational binom_q(int n, int k) {
    mpz_class b;
    mpz_bin_uiui(b.get_mpz_t(), n, k);
    return BigRational(mpq_class(b));
}

inline BigRational factorial_q(int n) {
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), n);
    return BigRational(mpq_class(f));
}

}  // namespace detail

// Expands the action into its cell decomposition. Disk weights are the bare
// couplings; cylinder weights collect the double-trace part of Tr V(D);
// stable weights collect the expansion of prod_i Tr(D^{n_i}) subset by
// subset. The combinatorial multiplicities are produced mechanically and
// certified by the action-equivalence test, not tabulated.
inline std::vector<CellWeight> compile_weights(const ModelSpec& spec) {
    spec.validate();
    std::map<std::pair<int, std::vector<int>>, BigRational> acc;

    auto add = [&acc](int g, std::vector<int> perims, const BigRational& w) {
        std::sort(perims.begin(), perims.end());
        for (int l : perims)
            require(l >= 1 && l <= kMaxTraceOrder, "invalid spec",
                    "trace order exceeds representable degree");
        acc[{g, perims}] += w;
    };

    for (const auto& [n, a] : spec.alpha) {
        if (a.is_zero()) continue;
        add(0, {n}, a);  // t^(0)_l = alpha_l
        if (!spec.plain_1mm) {
            // double-trace part of Tr V(D): -(1/2t)(alpha_n/n) C(n,r) Tr H^{n-r} Tr H^r
            for (int r = 1; r <= n - 1; ++r) {
                BigRational w = a * detail::binom_q(n, r) * BigRational(r) * BigRational(n - r) /
                                (BigRational(n) * spec.t);
                add(0, {r, n - r}, w);
            }
        }
    }

    if (!spec.plain_1mm) {
        add(0, {1, 1}, BigRational(-1) / spec.t);

        for (const auto& mt : spec.multitrace) {
            if (mt.coupling.is_zero()) continue;
            const int s = static_cast<int>(mt.orders.size());
            for (unsigned mask = 0; mask < (1u << s); ++mask) {
                const int m = __builtin_popcount(mask);
                std::vector<int> base, split;
                for (int i = 0; i < s; ++i)
                    (mask & (1u << i)) ? split.push_back(mt.orders[i]) : base.push_back(mt.orders[i]);
                if (std::any_of(split.begin(), split.end(), [](int n) { return n < 2; })) continue;

                // every split assignment r_j in [1, n_j - 1]
                std::vector<int> r(split.size(), 1);
                while (true) {
                    std::vector<int> perims = base;
                    BigRational cmul(1);
                    for (size_t q = 0; q < split.size(); ++q) {
                        perims.push_back(r[q]);
                        perims.push_back(split[q] - r[q]);
                        cmul *= detail::binom_q(split[q], r[q]);
                    }
                    // t^(s+1)_l = (s+m)! 2^(s-m) t^(s-m) (prod C)(prod l_i) alpha-hat
                    BigRational w = detail::factorial_q(s + m) * BigRational(1L << (s - m)) *
                                    spec.t.pow(s - m) * cmul * mt.coupling;
                    for (int l : perims) w *= BigRational(l);
                    add(s + 1, perims, w);

                    size_t q = 0;
                    for (; q < split.size(); ++q) {
                        if (r[q] < split[q] - 1) {
                            ++r[q];
                            break;
                        }
                        r[q] = 1;
                    }
                    if (q == split.size()) break;
                }
            }
        }
    }

    std::vector<CellWeight> out;
    for (const auto& [key, w] : acc) {
        if (w.is_zero()) continue;
        CellWeight c;
        c.g = key.first;
        c.perims = key.second;
        c.exact = w;
        c.value = w.to_double();
        out.push_back(std::move(c));
    }
    return out;
}

// --- action evaluation -----------------------------------------------------

inline void check_hermitian(const HermitianMatrix& H) {
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    require((H - H.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "not hermitian",
            "action input must be Hermitian");
}

// S(D) evaluated literally on the N^2 x N^2 anticommutator operator
// B -> HB + BH. Kept independent of the compiled-weight path on purpose.
inline double action_direct(const ModelSpec& spec, const HermitianMatrix& H) {
    check_hermitian(H);
    const int N = static_cast<int>(H.rows());
    require(N <= 64, "oracle scale", "action_direct supports N <= 64");
    const int NN = N * N;
    HermitianMatrix D = HermitianMatrix::Zero(NN, NN);
    // matrix of B -> HB + BH in column-major vectorization of B
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            for (int c = 0; c < N; ++c) {
                D(a + N * b, c + N * b) += H(a, c);          // HB
                D(a + N * b, a + N * c) += H(c, b);          // BH
            }

    int max_pow = 2;
    for (const auto& [n, a] : spec.alpha)
        if (!a.is_zero()) max_pow = std::max(max_pow, n);
    for (const auto& mt : spec.multitrace)
        for (int n : mt.orders) max_pow = std::max(max_pow, n);

    std::vector<double> trD(max_pow + 1, 0.0);
    HermitianMatrix P = D;
    trD[1] = P.trace().real();
    for (int n = 2; n <= max_pow; ++n) {
        P = P * D;
        trD[n] = P.trace().real();
    }

    const double t = spec.t_d();
    double S = (1.0 / (2.0 * t)) * (0.5 * trD[2]);
    for (const auto& [n, a] : spec.alpha)
        S -= (1.0 / (2.0 * t)) * (a.to_double() / n) * trD[n];

    if (!spec.plain_1mm) {
        const double Nt = static_cast<double>(N) / t;
        for (const auto& mt : spec.multitrace) {
            const int s = static_cast<int>(mt.orders.size());
            double prod = mt.coupling.to_double();
            for (int n : mt.orders) prod *= trD[n];
            S -= std::pow(Nt, -4.0 * s) * prod;
        }
    } else {
        // plain mode keeps only the single-trace potential: subtract the
        // double-trace part that Tr V(D) generates
        std::vector<double> trH(max_pow + 1, 0.0);
        HermitianMatrix Q = H;
        trH[1] = Q.trace().real();
        for (int n = 2; n <= max_pow; ++n) {
            Q = Q * H;
            trH[n] = Q.trace().real();
        }
        S = (static_cast<double>(N) / t) * (0.5 * trH[2]);
        for (const auto& [n, a] : spec.alpha)
            S -= (static_cast<double>(N) / t) * (a.to_double() / n) * trH[n];
    }
    return S;
}

// S_0 + S_int over the compiled cell weights.
inline double action_compiled(const ModelSpec& spec, const HermitianMatrix& H,
                              const std::vector<CellWeight>& weights) {
    check_hermitian(H);
    const int N = static_cast<int>(H.rows());
    const double t = spec.t_d();

    int max_pow = 2;
    for (const auto& w : weights)
        for (int l : w.perims) max_pow = std::max(max_pow, l);

    std::vector<double> trH(max_pow + 1, 0.0);
    trH[0] = N;
    HermitianMatrix P = H;
    trH[1] = P.trace().real();
    for (int n = 2; n <= max_pow; ++n) {
        P = P * H;
        trH[n] = P.trace().real();
    }

    double S = (N / (2.0 * t)) * trH[2];
    double fact[17];
    fact[0] = 1.0;
    for (int i = 1; i <= 16; ++i) fact[i] = fact[i - 1] * i;
    for (const auto& w : weights) {
        double term = w.value;
        for (int l : w.perims) term *= trH[l] / l;
        S -= std::pow(static_cast<double>(N) / t, w.chi()) / fact[w.boundaries()] * term;
    }
    return S;
}

inline double action_compiled(const ModelSpec& spec, const HermitianMatrix& H) {
    return action_compiled(spec, H, compile_weights(spec));
}

// --- k-point interactions ---------------------------------------------------

// Symmetric polynomial stored on weakly increasing exponent multi-indices:
// T(s_1..s_k) = sum_l c_l m_l(s), where m_l sums the distinct permutations
// of the monomial s^l. Symmetry is structural.
struct InteractionPoly {
    int h = 0;
    int k = 1;
    std::map<std::vector<int>, double> coeffs;

    // expansion into ordered monomials (exponent per slot)
    std::vector<std::pair<std::vector<int>, double>> monomials() const {
        std::vector<std::pair<std::vector<int>, double>> out;
        for (const auto& [l, c] : coeffs) {
            std::vector<int> perm = l;
            std::sort(perm.begin(), perm.end());
            do {
                out.push_back({perm, c});
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
        return out;
    }

    template <typename S>
    S eval(const std::vector<S>& s) const {
        S acc = S(0);
        for (const auto& [mono, c] : monomials()) {
            S term = S(c);
            for (int i = 0; i < k; ++i)
                for (int e = 0; e < mono[i]; ++e) term *= s[i];
            acc += term;
        }
        return acc;
    }
};

// T_{h,k} for every (h,k) present in the compiled weights; includes the free
// -xi^2/2 in T_{0,1}.
inline std::map<std::pair<int, int>, InteractionPoly> interactions(
    const ModelSpec& spec, const std::vector<CellWeight>& weights) {
    (void)spec;
    std::map<std::pair<int, int>, InteractionPoly> out;
    auto& t01 = out[{0, 1}];
    t01.h = 0;
    t01.k = 1;
    t01.coeffs[{2}] = -0.5;

    for (const auto& w : weights) {
        const int k = w.boundaries();
        auto& poly = out[{w.g, k}];
        poly.h = w.g;
        poly.k = k;
        // multiplicity of the sorted exponent vector
        double mult_fact = 1.0, run = 1.0;
        for (size_t i = 1; i < w.perims.size(); ++i) {
            run = (w.perims[i] == w.perims[i - 1]) ? run + 1.0 : 1.0;
            mult_fact *= run;
        }
        double kfact = 1.0;
        for (int i = 2; i <= k; ++i) kfact *= i;
        double c = mult_fact / kfact * w.value;
        for (int l : w.perims) c /= l;
        poly.coeffs[w.perims] += c;
    }
    for (auto it = out.begin(); it != out.end();) {
        bool all_zero = true;
        for (auto& [l, c] : it->second.coeffs)
            if (std::fabs(c) > 0.0) all_zero = false;
        it = all_zero ? out.erase(it) : std::next(it);
    }
    return out;
}

inline std::map<std::pair<int, int>, InteractionPoly> interactions(const ModelSpec& spec) {
    return interactions(spec, compile_weights(spec));
}

// nu_{k,m}: coefficient of xi^k eta^m in T_{0,2}.
inline std::map<std::pair<int, int>, double> nu_table(const InteractionPoly& t02) {
    std::map<std::pair<int, int>, double> nu;
    for (const auto& [mono, c] : t02.monomials()) nu[{mono[0], mono[1]}] += c;
    return nu;
}

}  // namespace btrengine
