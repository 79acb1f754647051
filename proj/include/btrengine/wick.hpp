#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include "btrengine/model.hpp"

namespace btrengine {

constexpr int kDefaultWickBudget = 18;

// Exact Laurent polynomial in N and t: map (N-exponent, t-exponent) -> coeff.
struct NLaurent {
    std::map<std::pair<int, int>, BigRational> terms;

    bool is_zero() const { return terms.empty(); }

    void add_term(int n_exp, int t_exp, const BigRational& c) {
        if (c.is_zero()) return;
        auto& slot = terms[{n_exp, t_exp}];
        slot += c;
        if (slot.is_zero()) terms.erase({n_exp, t_exp});
    }

    NLaurent& operator+=(const NLaurent& o) {
        for (const auto& [k, c] : o.terms) add_term(k.first, k.second, c);
        return *this;
    }

    friend NLaurent operator*(const NLaurent& a, const NLaurent& b) {
        NLaurent r;
        for (const auto& [ka, ca] : a.terms)
            for (const auto& [kb, cb] : b.terms)
                r.add_term(ka.first + kb.first, ka.second + kb.second, ca * cb);
        return r;
    }

    NLaurent negated() const {
        NLaurent r;
        for (const auto& [k, c] : terms) r.terms[k] = -c;
        return r;
    }

    static NLaurent one() {
        NLaurent r;
        r.terms[{0, 0}] = BigRational(1);
        return r;
    }

    // numeric value at given N and t
    double eval(double N, double t) const {
        double acc = 0.0;
        for (const auto& [k, c] : terms)
            acc += c.to_double() * std::pow(N, k.first) * std::pow(t, k.second);
        return acc;
    }

    BigRational eval_exact(const BigRational& N, const BigRational& t) const {
        BigRational acc(0);
        for (const auto& [k, c] : terms) acc += c * N.pow(k.first) * t.pow(k.second);
        return acc;
    }
};

// Exact Gaussian moment E[prod_j Tr H^{l_j}] under the normalized measure
// with covariance E[H_ij H_kl] = (t/N) d_il d_jk. Pairings are enumerated by
// always matching the first free half-edge (no double counting); each
// pairing contributes t^P N^{L-P} where L counts the index loops of the
// pairing permutation composed with the trace rotations.
inline NLaurent gaussian_moment(const std::vector<int>& powers, int budget = kDefaultWickBudget) {
    int n = std::accumulate(powers.begin(), powers.end(), 0);
    if (n % 2 == 1) return NLaurent{};  // odd moments vanish exactly
    if (n == 0) return NLaurent::one();
    require(n <= 32, "budget", "pairing enumerator supports total degree <= 32");
    if (n > budget) {
        std::ostringstream os;
        os << "gaussian moment of total degree " << n << " over budget " << budget;
        throw Error("budget", os.str());
    }

    std::array<int8_t, 64> sigma{};
    int pos = 0;
    for (int l : powers) {
        require(l >= 1, "invalid spec", "trace powers must be positive");
        for (int i = 0; i < l; ++i) sigma[pos + i] = static_cast<int8_t>(pos + (i + 1) % l);
        pos += l;
    }

    // depth-first over canonical pairings: the first free half-edge is
    // matched against every later free one, so each pairing appears once
    struct Enumerator {
        int n;
        const int8_t* sigma;
        int8_t match[64];
        std::uint64_t counts[40];

        void run(int hint) {
            int first = hint;
            while (first < n && match[first] >= 0) ++first;
            if (first >= n) {
                std::uint32_t visited = 0;
                int loops = 0;
                for (int i = 0; i < n; ++i) {
                    if (visited & (1u << i)) continue;
                    ++loops;
                    int j = i;
                    do {
                        visited |= 1u << j;
                        j = sigma[match[j]];
                    } while (j != i);
                }
                ++counts[loops];
                return;
            }
            for (int j = first + 1; j < n; ++j) {
                if (match[j] >= 0) continue;
                match[first] = static_cast<int8_t>(j);
                match[j] = static_cast<int8_t>(first);
                run(first + 1);
                match[j] = -1;
            }
            match[first] = -1;
        }
    };
    Enumerator en;
    en.n = n;
    en.sigma = sigma.data();
    std::fill(std::begin(en.match), std::end(en.match), static_cast<int8_t>(-1));
    std::fill(std::begin(en.counts), std::end(en.counts), 0ull);
    en.run(0);
    const auto& counts = en.counts;

    const int P = n / 2;
    NLaurent out;
    for (int L = 1; L < 40; ++L)
        if (counts[L]) out.add_term(L - P, P, BigRational(mpq_class(mpz_class(static_cast<unsigned long>(counts[L])))));
    return out;
}

// Coupling monomial: exponent per compiled weight, sparse and sorted.
using CouplingMonomial = std::vector<std::pair<int, int>>;

inline std::string monomial_name(const CouplingMonomial& m, const std::vector<CellWeight>& ws) {
    if (m.empty()) return "1";
    std::ostringstream os;
    for (size_t i = 0; i < m.size(); ++i) {
        if (i) os << "*";
        os << ws[m[i].first].name();
        if (m[i].second > 1) os << "^" << m[i].second;
    }
    return os.str();
}

// Formal series in the compiled Boltzmann weights, exact in N and t,
// truncated at a declared total coupling order.
struct CouplingSeries {
    int order = 0;
    std::map<CouplingMonomial, NLaurent> terms;

    void add(const CouplingMonomial& m, const NLaurent& v) {
        if (v.is_zero()) return;
        auto& slot = terms[m];
        slot += v;
        if (slot.is_zero()) terms.erase(m);
    }

    static int degree(const CouplingMonomial& m) {
        int d = 0;
        for (auto& [i, e] : m) d += e;
        return d;
    }

    friend CouplingSeries operator+(const CouplingSeries& a, const CouplingSeries& b) {
        CouplingSeries r = a;
        r.order = std::min(a.order, b.order);
        for (const auto& [m, v] : b.terms) r.add(m, v);
        return r;
    }

    friend CouplingSeries operator*(const CouplingSeries& a, const CouplingSeries& b) {
        CouplingSeries r;
        r.order = std::min(a.order, b.order);
        for (const auto& [ma, va] : a.terms)
            for (const auto& [mb, vb] : b.terms) {
                if (degree(ma) + degree(mb) > r.order) continue;
                std::map<int, int> merged;
                for (auto& [i, e] : ma) merged[i] += e;
                for (auto& [i, e] : mb) merged[i] += e;
                CouplingMonomial m(merged.begin(), merged.end());
                r.add(m, va * vb);
            }
        return r;
    }

    CouplingSeries scaled(const NLaurent& f) const {
        CouplingSeries r;
        r.order = order;
        for (const auto& [m, v] : terms) r.add(m, v * f);
        return r;
    }

    // multiplicative inverse assuming unit constant term
    CouplingSeries inverse() const {
        CouplingSeries rest = *this;
        rest.terms.erase(CouplingMonomial{});
        CouplingSeries acc;
        acc.order = order;
        acc.add({}, NLaurent::one());
        CouplingSeries power = acc;
        for (int j = 1; j <= order; ++j) {
            power = power * rest;
            bool empty = power.terms.empty();
            CouplingSeries signedp = power;
            if (j % 2 == 1)
                for (auto& [m, v] : signedp.terms) v = v.negated();
            acc = acc + signedp;
            if (empty) break;
        }
        return acc;
    }

    double eval(const std::vector<CellWeight>& ws, double N, double t) const {
        double acc = 0.0;
        for (const auto& [m, v] : terms) {
            double mono = 1.0;
            for (auto& [i, e] : m) mono *= std::pow(ws[i].value, e);
            acc += mono * v.eval(N, t);
        }
        return acc;
    }

    BigRational eval_exact(const std::vector<CellWeight>& ws, const BigRational& N,
                           const BigRational& t) const {
        BigRational acc(0);
        for (const auto& [m, v] : terms) {
            BigRational mono(1);
            for (auto& [i, e] : m) mono *= ws[i].exact.pow(e);
            acc += mono * v.eval_exact(N, t);
        }
        return acc;
    }
};

// Exact perturbative expansion machinery around the Gaussian measure.
// Immutable after construction apart from the moment memo.
class WickOracle {
public:
    WickOracle(const ModelSpec& spec, int order, int budget = kDefaultWickBudget)
        : spec_(spec), weights_(compile_weights(spec)), order_(order), budget_(budget) {}

    WickOracle(const ModelSpec& spec, std::vector<CellWeight> weights, int order,
               int budget = kDefaultWickBudget)
        : spec_(spec), weights_(std::move(weights)), order_(order), budget_(budget) {}

    const std::vector<CellWeight>& weights() const { return weights_; }
    int order() const { return order_; }

    const NLaurent& moment(std::vector<int> powers) const {
        std::sort(powers.begin(), powers.end());
        auto it = memo_.find(powers);
        if (it != memo_.end()) return it->second;
        return memo_.emplace(powers, gaussian_moment(powers, budget_)).first->second;
    }

    // Z_N-normalized disconnected correlator of the given trace insertions:
    // every vertex carries (N/t)^chi / beta0! and the weight split over the
    // perimeter factors; normalization is exact series division.
    CouplingSeries perturbative_correlator(const std::vector<int>& insertions) const {
        CouplingSeries raw = raw_series(insertions);
        return (raw * partition_function().inverse());
    }

    CouplingSeries partition_function() const {
        if (!zn_) zn_ = raw_series({});
        return *zn_;
    }

    // joint cumulant over the insertion slots
    CouplingSeries connected(const std::vector<int>& insertions) const {
        const int n = static_cast<int>(insertions.size());
        std::map<unsigned, CouplingSeries> family;
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            std::vector<int> sub;
            for (int i = 0; i < n; ++i)
                if (mask & (1u << i)) sub.push_back(insertions[i]);
            family[mask] = perturbative_correlator(sub);
        }
        return connected_from_family(family, n, order_);
    }

    CouplingSeries genus(const std::vector<int>& insertions, int g) const {
        return extract_genus(connected(insertions), g, static_cast<int>(insertions.size()));
    }

    // numeric stuffed-map generating value Q_{g; perims}
    double q_value(int g, const std::vector<int>& perims) const {
        return genus(perims, g).eval(weights_, 1.0, spec_.t_d());
    }

    BigRational q_value_exact(int g, const std::vector<int>& perims) const {
        return genus(perims, g).eval_exact(weights_, BigRational(1), spec_.t);
    }

    // Coefficient of N^{2-2g-n} with the matching t-power folded in, per the
    // topological expansion W_n = sum_g (N/t)^{2-2g-n} W_{g,n}.
    static CouplingSeries extract_genus(const CouplingSeries& s, int g, int n) {
        CouplingSeries out;
        out.order = s.order;
        const int want = 2 - 2 * g - n;
        for (const auto& [m, v] : s.terms) {
            NLaurent picked;
            for (const auto& [k, c] : v.terms) {
                const int ne = k.first;
                if (ne > 2 - n || ((2 - n - ne) % 2) != 0) {
                    std::ostringstream os;
                    os << "monomial " << CouplingSeries::degree(m) << " has stray N-exponent " << ne;
                    throw Error("parity violation", os.str());
                }
                if (ne == want) picked.add_term(0, k.second + ne, c);
            }
            out.add(m, picked);
        }
        return out;
    }

    // Moebius/cumulant combination over set partitions of the slots; the
    // family maps subset bitmasks to disconnected correlators.
    static CouplingSeries connected_from_family(const std::map<unsigned, CouplingSeries>& family,
                                                int n, int order) {
        std::vector<std::vector<unsigned>> partitions;
        std::vector<unsigned> current;
        std::function<void(unsigned)> split = [&](unsigned rest) {
            if (!rest) {
                partitions.push_back(current);
                return;
            }
            unsigned low = rest & (~rest + 1u);
            unsigned others = rest & ~low;
            // iterate subsets of `others` joined with the lowest element
            unsigned sub = 0;
            while (true) {
                unsigned block = low | sub;
                current.push_back(block);
                split(rest & ~block);
                current.pop_back();
                if (sub == others) break;
                sub = (sub - others) & others;
            }
        };
        split((1u << n) - 1u);

        CouplingSeries acc;
        acc.order = order;
        for (const auto& part : partitions) {
            CouplingSeries prod;
            prod.order = order;
            prod.add({}, NLaurent::one());
            for (unsigned block : part) {
                auto it = family.find(block);
                require(it != family.end(), "missing sub-correlator",
                        "cumulant combination needs every subset correlator");
                prod = prod * it->second;
            }
            long sign_fact = 1;
            for (size_t j = 2; j < part.size(); ++j) sign_fact *= static_cast<long>(j);
            if (part.size() % 2 == 0) sign_fact = -sign_fact;
            NLaurent f;
            f.terms[{0, 0}] = BigRational(sign_fact);
            acc = acc + prod.scaled(f);
        }
        return acc;
    }

    // moment-from-cumulant recombination, used to invert `connected`
    static CouplingSeries disconnected_from_connected(
        const std::map<unsigned, CouplingSeries>& connected_family, int n, int order) {
        std::vector<std::vector<unsigned>> partitions;
        std::vector<unsigned> current;
        std::function<void(unsigned)> split = [&](unsigned rest) {
            if (!rest) {
                partitions.push_back(current);
                return;
            }
            unsigned low = rest & (~rest + 1u);
            unsigned others = rest & ~low;
            unsigned sub = 0;
            while (true) {
                unsigned block = low | sub;
                current.push_back(block);
                split(rest & ~block);
                current.pop_back();
                if (sub == others) break;
                sub = (sub - others) & others;
            }
        };
        split((1u << n) - 1u);
        CouplingSeries acc;
        acc.order = order;
        for (const auto& part : partitions) {
            CouplingSeries prod;
            prod.order = order;
            prod.add({}, NLaurent::one());
            for (unsigned block : part) prod = prod * connected_family.at(block);
            acc = acc + prod;
        }
        return acc;
    }

private:
    CouplingSeries raw_series(const std::vector<int>& insertions) const {
        CouplingSeries out;
        out.order = order_;
        std::vector<int> exps(weights_.size(), 0);
        descend_monomials(insertions, 0, 0, exps, out);
        return out;
    }

    void descend_monomials(const std::vector<int>& insertions, size_t wi, int used,
                           std::vector<int>& exps, CouplingSeries& out) const {
        if (wi == weights_.size()) {
            emit_monomial(insertions, exps, out);
            return;
        }
        for (int e = 0; used + e <= order_; ++e) {
            exps[wi] = e;
            descend_monomials(insertions, wi + 1, used + e, exps, out);
        }
        exps[wi] = 0;
    }

    void emit_monomial(const std::vector<int>& insertions, const std::vector<int>& exps,
                       CouplingSeries& out) const {
        std::vector<int> powers = insertions;
        NLaurent pref = NLaurent::one();
        CouplingMonomial mono;
        for (size_t i = 0; i < weights_.size(); ++i) {
            if (exps[i] == 0) continue;
            const CellWeight& w = weights_[i];
            mono.push_back({static_cast<int>(i), exps[i]});
            BigRational base(1);
            for (int l : w.perims) base /= BigRational(l);
            base /= detail::factorial_q(w.boundaries());
            BigRational coeff(1);
            for (int e = 0; e < exps[i]; ++e) {
                coeff *= base;
                for (int l : w.perims) powers.push_back(l);
            }
            coeff /= detail::factorial_q(exps[i]);
            NLaurent f;
            f.terms[{w.chi() * exps[i], -w.chi() * exps[i]}] = coeff;
            pref = pref * f;
        }
        int total = std::accumulate(powers.begin(), powers.end(), 0);
        if (total % 2 == 1) return;  // vanishes, skip the budget gate
        if (total > budget_) {
            std::ostringstream os;
            os << "monomial " << monomial_name(mono, weights_) << " needs Gaussian degree " << total
               << " over budget " << budget_;
            throw Error("budget", os.str());
        }
        const NLaurent& mom = moment(powers);
        out.add(mono, pref * mom);
    }

    ModelSpec spec_;
    std::vector<CellWeight> weights_;
    int order_;
    int budget_;
    mutable std::map<std::vector<int>, NLaurent> memo_;
    mutable std::optional<CouplingSeries> zn_;
};

}  // namespace btrengine
