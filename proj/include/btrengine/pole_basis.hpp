#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "btrengine/rational_function.hpp"

namespace btrengine {

// One factor dz/(z - pole)^order with pole in {-1, 0, +1}.
struct PoleKey {
    int8_t pole = 0;
    int16_t order = 1;

    friend bool operator<(const PoleKey& a, const PoleKey& b) {
        if (a.pole != b.pole) return a.pole < b.pole;
        return a.order < b.order;
    }
    friend bool operator==(const PoleKey& a, const PoleKey& b) {
        return a.pole == b.pole && a.order == b.order;
    }
};

using MultiIndex = std::vector<PoleKey>;

// Meromorphic n-form sum_m c_m prod_i dz_i/(z_i - p_i)^{o_i} with poles on
// the basis set only. Every basis element decays at z_i -> infinity, which
// encodes the admissible behavior of the stable correlator forms.
class PoleBasisForm {
public:
    PoleBasisForm() : arity_(0) {}
    explicit PoleBasisForm(int arity) : arity_(arity) {}

    int arity() const { return arity_; }
    const std::map<MultiIndex, double>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    void add_term(const MultiIndex& idx, double c) {
        require(static_cast<int>(idx.size()) == arity_, "arity mismatch", "pole-basis term");
        for (const auto& k : idx)
            require(k.pole == -1 || k.pole == 0 || k.pole == 1, "pole outside basis",
                    "pole-basis term with pole not in {-1,0,+1}");
        double& slot = terms_[idx];
        slot += c;
        if (std::fabs(slot) < 1e-300) terms_.erase(idx);
    }

    void add(const PoleBasisForm& other, double scale = 1.0) {
        require(other.arity_ == arity_, "arity mismatch", "pole-basis add");
        for (const auto& [idx, c] : other.terms_) add_term(idx, c * scale);
    }

    void scale(double s) {
        for (auto& [idx, c] : terms_) c *= s;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& [idx, c] : terms_) m = std::max(m, std::fabs(c));
        return m;
    }

    void prune(double abs_tol) {
        for (auto it = terms_.begin(); it != terms_.end();) {
            if (std::fabs(it->second) <= abs_tol) it = terms_.erase(it);
            else ++it;
        }
    }

    template <typename S>
    S eval_density(const std::vector<S>& z) const {
        require(static_cast<int>(z.size()) == arity_, "arity mismatch", "pole-basis eval");
        S acc = S(0);
        for (const auto& [idx, c] : terms_) {
            S t = S(c);
            for (int i = 0; i < arity_; ++i)
                t /= std::pow(z[i] - S(static_cast<double>(idx[i].pole)), idx[i].order);
            acc += t;
        }
        return acc;
    }

    PoleBasisForm permuted(const std::vector<int>& perm) const {
        PoleBasisForm r(arity_);
        for (const auto& [idx, c] : terms_) {
            MultiIndex m(arity_);
            for (int i = 0; i < arity_; ++i) m[perm[i]] = idx[i];
            r.add_term(m, c);
        }
        return r;
    }

    // Largest coefficient deviation from full S_n-invariance.
    double symmetry_defect() const {
        if (arity_ <= 1) return 0.0;
        std::vector<int> perm(arity_);
        for (int i = 0; i < arity_; ++i) perm[i] = i;
        double defect = 0.0;
        while (std::next_permutation(perm.begin(), perm.end())) {
            PoleBasisForm p = permuted(perm);
            std::map<MultiIndex, double> diff = terms_;
            for (const auto& [idx, c] : p.terms_) diff[idx] -= c;
            for (const auto& [idx, d] : diff) defect = std::max(defect, std::fabs(d));
        }
        return defect;
    }

    // Univariate rational slice in the given variable with every basis factor
    // of the other variables evaluated at fixed complex points. Returned as
    // coefficient map (p,o) -> complex weight.
    std::map<std::pair<int, int>, Complex> slice(int var, const std::vector<Complex>& others) const {
        std::map<std::pair<int, int>, Complex> out;
        for (const auto& [idx, c] : terms_) {
            Complex w = c;
            int oi = 0;
            for (int i = 0; i < arity_; ++i) {
                if (i == var) continue;
                w /= std::pow(others[oi] - static_cast<double>(idx[i].pole), idx[i].order);
                ++oi;
            }
            out[{idx[var].pole, idx[var].order}] += w;
        }
        return out;
    }

private:
    int arity_;
    std::map<MultiIndex, double> terms_;
};

// Pullback of the form under z_i -> 1/z_i including the Jacobian d(1/z) =
// -dz/z^2, re-expanded over the pole basis. A 0-pole of order >= 2 cannot be
// re-expressed (its image grows at infinity) and is rejected.
inline PoleBasisForm involution_pullback(const PoleBasisForm& f, int var) {
    PoleBasisForm r(f.arity());
    for (const auto& [idx, c] : f.terms()) {
        const PoleKey k = idx[var];
        std::vector<std::pair<PoleKey, double>> expansion;
        if (k.pole == 0) {
            require(k.order == 1, "pole outside basis",
                    "involution pullback of 1/z^o dz with o >= 2 leaves the pole basis");
            expansion.push_back({PoleKey{0, 1}, -1.0});
        } else {
            const double p = k.pole;
            const int o = k.order;
            // 1/(1/z - p)^o * (-1/z^2) = -(-p)^o z^{o-2}/(z-p)^o
            double mp = 1.0;
            for (int i = 0; i < o; ++i) mp *= -p;
            if (o == 1) {
                // z^{-1}/(z-p) = (1/p)(1/(z-p) - 1/z)
                expansion.push_back({PoleKey{k.pole, 1}, -mp / p});
                expansion.push_back({PoleKey{0, 1}, mp / p});
            } else {
                // z^{o-2} = sum_j C(o-2,j) p^{o-2-j} (z-p)^j
                double binom = 1.0;
                for (int j = 0; j <= o - 2; ++j) {
                    double pp = 1.0;
                    for (int i = 0; i < o - 2 - j; ++i) pp *= p;
                    expansion.push_back({PoleKey{k.pole, static_cast<int16_t>(o - j)}, -mp * binom * pp});
                    binom = binom * (o - 2 - j) / (j + 1);
                }
            }
        }
        for (const auto& [nk, w] : expansion) {
            MultiIndex m = idx;
            m[var] = nk;
            r.add_term(m, c * w);
        }
    }
    return r;
}

// Involution pullback on functions: f(z) -> f(1/z).
inline RationalFunction involution_pullback(const RationalFunction& f) {
    return f.reciprocal_argument();
}

}  // namespace btrengine
