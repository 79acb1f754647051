#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "btrengine/model.hpp"
#include "btrengine/rational_function.hpp"

namespace btrengine {

// Symmetric-friendly Laurent polynomial helper: coefficients over exponents
// [-half, half] stored densely, used for expansions in the Joukowski variable.
struct ZLaurent {
    int half = 0;
    std::vector<double> c;  // index e + half

    explicit ZLaurent(int h = 0) : half(h), c(static_cast<size_t>(2 * h + 1), 0.0) {}
    double& at(int e) { return c[static_cast<size_t>(e + half)]; }
    double get(int e) const {
        if (e < -half || e > half) return 0.0;
        return c[static_cast<size_t>(e + half)];
    }
    friend ZLaurent zmul(const ZLaurent& a, const ZLaurent& b) {
        ZLaurent r(a.half + b.half);
        for (int i = -a.half; i <= a.half; ++i) {
            if (a.get(i) == 0.0) continue;
            for (int j = -b.half; j <= b.half; ++j) r.at(i + j) += a.get(i) * b.get(j);
        }
        return r;
    }
};

struct CurveOptions {
    double tol_endpoints = 1e-12;
    double tol_moments = 1e-11;
    double damping = 0.5;
    int max_iter = 500;
    std::optional<std::pair<double, double>> initial_endpoints;
    std::optional<std::vector<double>> initial_moments;  // m_1 .. m_{d-1}
};

// One-cut large-N data: support, moments, and the Laurent coefficients of
// W_{0,1}(x(z)) = sum_k u_k z^{-k} on the exterior chart.
struct SpectralData {
    double t = 1.0;
    double a = -2.0, b = 2.0;
    double center = 0.0, gamma = 1.0;
    std::vector<double> moments;  // m_0 = t, m_1 .. m_{d-1} from the solve
    std::vector<double> u;        // u[k], k = 1..D; u[0] unused
    Poly Q, P;                    // quadratic-equation polynomials at the fixed point
    double residual = 0.0;        // max quadratic defect over probe points
    int iterations = 0;

    bool symmetric(double tol = 1e-10) const { return std::fabs(a + b) <= tol * std::max(1.0, b - a); }

    Complex x_of_z(Complex z) const { return center + gamma * (z + 1.0 / z); }
    Complex dx_of_z(Complex z) const { return gamma * (1.0 - 1.0 / (z * z)); }

    Complex w01_z(Complex z) const {  // W_{0,1}(x(z)) on the exterior chart
        Complex acc = 0.0, zi = 1.0 / z;
        for (size_t k = u.size(); k-- > 1;) acc = (acc + u[k]) * zi;
        return acc;
    }

    RationalFunction w01_rational() const {
        RationalFunction acc = RationalFunction::constant(0.0);
        for (size_t k = 1; k < u.size(); ++k)
            acc = acc + RationalFunction::monomial(-static_cast<int>(k), u[k]);
        return acc;
    }

    // exact z-residue extraction of m_l = (1/2pi i) oint x^l W_{0,1} dx
    double moment(int l) const {
        ZLaurent x(1);
        x.at(-1) = gamma;
        x.at(0) = center;
        x.at(1) = gamma;
        ZLaurent acc(0);
        acc.at(0) = 1.0;
        for (int j = 0; j < l; ++j) acc = zmul(acc, x);
        ZLaurent xp(2);
        xp.at(0) = gamma;
        xp.at(-2) = -gamma;
        acc = zmul(acc, xp);
        ZLaurent w(static_cast<int>(u.size()));
        for (size_t k = 1; k < u.size(); ++k) w.at(-static_cast<int>(k)) = u[k];
        acc = zmul(acc, w);
        return acc.get(-1);
    }
};

// Q(xi) = -xi + sum_disk t^(0)_l xi^{l-1}
//             + (1/2) sum_cyl t^(0)_{l1,l2} [ (m_{l2}/l2) xi^{l1-1} + (m_{l1}/l1) xi^{l2-1} ]
inline Poly effective_Q(const std::vector<CellWeight>& weights, const std::vector<double>& moments) {
    int deg = 1;
    for (const auto& w : weights)
        if (w.g == 0)
            for (int l : w.perims) deg = std::max(deg, l - 1);
    Poly Q(static_cast<size_t>(deg + 1), 0.0);
    Q[1] = -1.0;
    for (const auto& w : weights) {
        if (w.g != 0) continue;
        if (w.boundaries() == 1) {
            Q[w.perims[0] - 1] += w.value;
        } else if (w.boundaries() == 2) {
            const int l1 = w.perims[0], l2 = w.perims[1];
            require(l2 - 1 < static_cast<int>(moments.size()), "invalid spec",
                    "effective_Q needs moments up to d-1");
            Q[l1 - 1] += 0.5 * w.value * moments[l2] / l2;
            Q[l2 - 1] += 0.5 * w.value * moments[l1] / l1;
        }
    }
    poly_trim(Q);
    return Q;
}

// P(x) = -sum_j q_j sum_{n=0}^{j-1} m_{j-1-n} x^n with m_0 = t.
inline Poly effective_P(const Poly& Q, const std::vector<double>& moments) {
    Poly P{0.0};
    for (int j = 1; j < static_cast<int>(Q.size()); ++j) {
        if (Q[j] == 0.0) continue;
        Poly part(static_cast<size_t>(j), 0.0);
        for (int n = 0; n <= j - 1; ++n) part[n] = moments[static_cast<size_t>(j - 1 - n)];
        P = poly_sub(P, poly_scale_by(part, Q[j]));
    }
    return P;
}

namespace detail {

// -Q(x(z)) as a symmetric Laurent polynomial c_0 + sum c_k (z^k + z^-k)
inline std::vector<double> minus_q_coeffs(const Poly& Q, double center, double gamma) {
    const int deg = poly_degree(Q);
    ZLaurent x(1);
    x.at(-1) = gamma;
    x.at(0) = center;
    x.at(1) = gamma;
    ZLaurent acc(0);
    acc.at(0) = -Q[0];
    ZLaurent xp(0);
    xp.at(0) = 1.0;
    for (int j = 1; j <= deg; ++j) {
        xp = zmul(xp, x);
        ZLaurent t(std::max(acc.half, xp.half));
        for (int e = -t.half; e <= t.half; ++e) t.at(e) = acc.get(e) - Q[j] * xp.get(e);
        acc = t;
    }
    std::vector<double> c(static_cast<size_t>(acc.half + 1), 0.0);
    for (int k = 0; k <= acc.half; ++k) c[static_cast<size_t>(k)] = acc.get(k);
    return c;  // uses only the z^{+k} side; exact symmetry is checked by caller
}

}  // namespace detail

// Self-consistent one-cut solve: damped outer iteration on the moments with
// an inner Newton step on the endpoints imposing the vanishing z-constant
// obstruction and u_1 = t/gamma.
inline SpectralData solve_one_cut(const ModelSpec& spec, const std::vector<CellWeight>& weights,
                                  const CurveOptions& opt = {}) {
    const double t = spec.t_d();
    const int nm = std::max(1, spec.d - 1);

    std::vector<double> m(static_cast<size_t>(nm + 1), 0.0);
    m[0] = t;
    for (int l = 2; l <= nm; l += 2) {
        // Gaussian moments Cat_{l/2} t^{l/2+1} as the default initial guess
        double cat = 1.0;
        for (int i = 0; i < l / 2; ++i) cat = cat * 2.0 * (2 * i + 1) / (i + 2);
        m[static_cast<size_t>(l)] = cat * std::pow(t, l / 2 + 1);
    }
    if (opt.initial_moments) {
        require(static_cast<int>(opt.initial_moments->size()) == nm, "invalid spec",
                "initial moments must cover 1..d-1");
        for (int l = 1; l <= nm; ++l) m[static_cast<size_t>(l)] = (*opt.initial_moments)[l - 1];
    }
    double a = opt.initial_endpoints ? opt.initial_endpoints->first : -2.0 * std::sqrt(t);
    double b = opt.initial_endpoints ? opt.initial_endpoints->second : 2.0 * std::sqrt(t);

    Poly Q;
    std::vector<double> cks;
    auto conditions = [&](double aa, double bb, const Poly& q) -> std::pair<double, double> {
        const double cen = 0.5 * (aa + bb), gam = 0.25 * (bb - aa);
        auto c = detail::minus_q_coeffs(q, cen, gam);
        const double c1 = (c.size() > 1) ? c[1] : 0.0;
        return {c[0], c1 - t / gam};
    };

    int iter = 0;
    for (; iter < opt.max_iter; ++iter) {
        Q = effective_Q(weights, m);

        // inner Newton on (a, b)
        bool newton_ok = false;
        for (int step = 0; step < 80; ++step) {
            auto [f1, f2] = conditions(a, b, Q);
            double fn = std::max(std::fabs(f1), std::fabs(f2));
            if (fn <= opt.tol_endpoints * std::max(1.0, t)) {
                newton_ok = true;
                break;
            }
            const double h = 1e-7 * std::max(1.0, b - a);
            auto [f1a, f2a] = conditions(a + h, b, Q);
            auto [f1b, f2b] = conditions(a, b + h, Q);
            const double j11 = (f1a - f1) / h, j12 = (f1b - f1) / h;
            const double j21 = (f2a - f2) / h, j22 = (f2b - f2) / h;
            const double det = j11 * j22 - j12 * j21;
            require(std::fabs(det) > 1e-14, "no convergence", "endpoint Newton hit a singular Jacobian");
            double da = -(f1 * j22 - f2 * j12) / det;
            double db = -(j11 * f2 - j21 * f1) / det;
            double lam = 1.0;
            for (int back = 0; back < 30; ++back) {
                double an = a + lam * da, bn = b + lam * db;
                if (bn - an > 1e-8) {
                    auto [g1, g2] = conditions(an, bn, Q);
                    if (std::max(std::fabs(g1), std::fabs(g2)) < fn || lam < 1e-6) {
                        a = an;
                        b = bn;
                        break;
                    }
                }
                lam *= 0.5;
            }
        }
        require(newton_ok, "no convergence", "endpoint Newton did not converge");

        // recompute moments from the solved disk function
        const double cen = 0.5 * (a + b), gam = 0.25 * (b - a);
        cks = detail::minus_q_coeffs(Q, cen, gam);
        SpectralData tmp;
        tmp.t = t;
        tmp.a = a;
        tmp.b = b;
        tmp.center = cen;
        tmp.gamma = gam;
        tmp.u.assign(cks.size(), 0.0);
        for (size_t k = 1; k < cks.size(); ++k) tmp.u[k] = cks[k];
        double delta = 0.0;
        std::vector<double> mn = m;
        for (int l = 1; l <= nm; ++l) {
            mn[static_cast<size_t>(l)] = tmp.moment(l);
            delta = std::max(delta, std::fabs(mn[static_cast<size_t>(l)] - m[static_cast<size_t>(l)]));
        }
        if (delta <= opt.tol_moments * std::max(1.0, t)) {
            m = mn;
            ++iter;
            break;
        }
        for (int l = 1; l <= nm; ++l)
            m[static_cast<size_t>(l)] =
                opt.damping * m[static_cast<size_t>(l)] + (1.0 - opt.damping) * mn[static_cast<size_t>(l)];
        require(iter + 1 < opt.max_iter, "no convergence", "moment iteration exhausted max_iter");
    }

    SpectralData out;
    out.t = t;
    out.a = a;
    out.b = b;
    out.center = 0.5 * (a + b);
    out.gamma = 0.25 * (b - a);
    out.moments = m;
    Q = effective_Q(weights, m);
    cks = detail::minus_q_coeffs(Q, out.center, out.gamma);
    out.u.assign(cks.size(), 0.0);
    for (size_t k = 1; k < cks.size(); ++k) out.u[k] = cks[k];
    out.Q = Q;
    out.P = effective_P(Q, m);
    out.iterations = iter;

    // quadratic identity W^2 + Q W + P = 0 off the cut
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        double th = 0.13 + 6.0 * i / 50.0;
        Complex z = std::polar(1.45 + 0.02 * i, th);
        Complex x = out.x_of_z(z), w = out.w01_z(z);
        Complex defect = w * w + poly_eval<Complex>(Q, x) * w + poly_eval<Complex>(out.P, x);
        worst = std::max(worst, std::abs(defect));
    }
    out.residual = worst;

    // one-cut positivity of the density on the interior
    for (int i = 1; i < 400; ++i) {
        double th = M_PI * i / 400.0;
        double phi = 0.0;
        for (size_t k = 1; k < out.u.size(); ++k) phi += out.u[k] * std::sin(k * th);
        phi /= M_PI;
        require(phi >= -1e-10, "density negative", "one-cut assumption violated on the support");
    }
    return out;
}

inline SpectralData solve_one_cut(const ModelSpec& spec, const CurveOptions& opt = {}) {
    return solve_one_cut(spec, compile_weights(spec), opt);
}

// phi(s) from the jump of W_{0,1} across the cut.
inline double density(const SpectralData& data, double s) {
    require(s > data.a && s < data.b, "outside support", "density argument must lie in (a, b)");
    const double th = std::acos((s - data.center) / (2.0 * data.gamma));
    double phi = 0.0;
    for (size_t k = 1; k < data.u.size(); ++k) phi += data.u[k] * std::sin(k * th);
    return phi / M_PI;
}

inline Complex joukowski(const SpectralData& data, Complex z) { return data.x_of_z(z); }

// Exterior branch |z| > 1 by default. Points on the open cut have |z| = 1
// and are rejected when a strict branch is demanded.
inline Complex inverse_joukowski(const SpectralData& data, Complex x, bool strict_exterior = true) {
    const Complex X = (x - data.center) / data.gamma;
    Complex disc = std::sqrt(X * X - 4.0);
    Complex z1 = 0.5 * (X + disc);
    Complex z2 = 0.5 * (X - disc);
    Complex z = (std::abs(z1) >= std::abs(z2)) ? z1 : z2;
    if (strict_exterior)
        require(std::abs(z) > 1.0 + 1e-12, "branch point",
                "inverse Joukowski hit the cut; no strict exterior branch");
    return z;
}

}  // namespace btrengine
