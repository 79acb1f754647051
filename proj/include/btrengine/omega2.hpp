#pragma once

#include <vector>

#include "btrengine/curve.hpp"
#include "btrengine/linsolve.hpp"
#include "btrengine/quadrature.hpp"

namespace btrengine {

// c_{k,r} = ((2r-k)/k) C(k,r), the principal-part coefficients of the
// Laurent polynomial (1 - 1/z^2)(z + 1/z)^{k-1} at the origin.
inline double c_table(int k, int r) {
    return (2.0 * r - k) / k * detail::binom(k, r);
}

// Model-dependent fundamental bidifferential on the symmetric one-cut curve:
//   F(z,zeta) = Q1 + Q2,  Q1 = 1/(zeta z - 1)^2,
//   Q2(z,zeta) = - sum_k S_k(z) b_k(zeta),  S_k(z) = sum_r c_{k,r} z^{2r-k-1},
//   b_k(zeta)  = sum_i beta[k][i] zeta^{-i-1},
// with the Fourier data fixed by the linear system C x = i/zeta^{i+1}.
struct Omega02 {
    double b = 2.0;       // support half-width
    double gamma = 1.0;   // b/2
    double t = 1.0;
    int dim = 1;          // d - 1
    std::vector<std::vector<double>> C, Cinv;
    std::map<std::pair<int, int>, double> nu;        // nu_{k,m}
    std::vector<std::vector<double>> beta;           // beta[k][i], 1-based in both
    double condition = 0.0;

    Complex x_of_z(Complex z) const { return gamma * (z + 1.0 / z); }
    Complex dx_of_z(Complex z) const { return gamma * (1.0 - 1.0 / (z * z)); }

    // Laurent coefficient [z^e] x(z)^m
    double x_power_coeff(int m, int e) const {
        if (std::abs(e) > m || ((m - e) % 2) != 0) return 0.0;
        return std::pow(gamma, m) * detail::binom(m, (m - e) / 2);
    }

    Complex b_k(int k, Complex zeta) const {
        Complex acc = 0.0;
        for (int i = 1; i <= dim; ++i) acc += beta[k][i] * std::pow(zeta, -i - 1);
        return acc;
    }

    Complex q1(Complex z, Complex zeta) const {
        Complex d = zeta * z - 1.0;
        return 1.0 / (d * d);
    }

    Complex q2(Complex z, Complex zeta) const {
        Complex acc = 0.0;
        for (int k = 1; k <= dim; ++k) {
            Complex sk = 0.0;
            for (int r = 0; 2 * r <= k - 1; ++r) sk += c_table(k, r) * std::pow(z, 2 * r - k - 1);
            acc -= sk * b_k(k, zeta);
        }
        return acc;
    }

    Complex F(Complex z, Complex zeta) const { return q1(z, zeta) + q2(z, zeta); }

    Complex bhat0(Complex z, Complex zeta) const {
        Complex dx = x_of_z(z) - x_of_z(zeta);
        return dx_of_z(z) * dx_of_z(zeta) / (dx * dx);
    }

    // Coefficient of z^{-a-1} zeta^{-i-1} in Q2; symmetry of this matrix is
    // the operational form of the F-symmetry.
    double q2_coeff(int a, int i) const {
        double acc = 0.0;
        for (int r = 0; a + 2 * r <= dim; ++r) {
            int k = a + 2 * r;
            if (k < 1) continue;
            acc -= c_table(k, r) * beta[k][i];
        }
        return acc;
    }
};

// C_{ij} = delta_ij + sum_{r >= 0, k = i + 2r <= d-1} c_{k,r} B_{k,j}, where
// B_{k,q} collects the (b/2)^{k+m} nu_{k,m} binomial pairings of the Fourier
// modes. Depends only on the support half-width and the cylinder weights.
inline std::vector<std::vector<double>> build_C(const std::map<std::pair<int, int>, double>& nu,
                                                double support_b, int d) {
    const int n = d - 1;
    require(n >= 1, "invalid spec", "build_C needs d >= 2");
    const double half = support_b / 2.0;

    // B[k][q]
    std::vector<std::vector<double>> B(n + 1, std::vector<double>(n + 1, 0.0));
    for (int k = 1; k <= n; ++k)
        for (int q = 1; q <= n; ++q) {
            double acc = 0.0;
            for (int m = q; m <= d - k; m += 2) {
                auto it = nu.find({k, m});
                if (it == nu.end()) continue;
                acc += it->second * std::pow(half, k + m) * detail::binom(m, (m - q) / 2);
            }
            B[k][q] = k * acc;
        }

    std::vector<std::vector<double>> C(n, std::vector<double>(n, 0.0));
    for (int i = 1; i <= n; ++i) {
        C[i - 1][i - 1] += 1.0;
        for (int r = 0; i + 2 * r <= n; ++r) {
            int k = i + 2 * r;
            for (int j = 1; j <= n; ++j) C[i - 1][j - 1] += c_table(k, r) * B[k][j];
        }
    }
    return C;
}

// Kernel dimension of C; zero means Hypothesis 2 holds and the blobbed
// recursion is well posed.
inline int check_hypothesis2(const std::vector<std::vector<double>>& C) {
    return static_cast<int>(C.size()) - matrix_rank(C);
}

// Assembles F from the curve data. Symmetric support is required; the
// Fourier identities behind the assembly are re-verified numerically at
// build time rather than trusted.
inline Omega02 solve_F(const ModelSpec& spec, const std::vector<CellWeight>& weights,
                       const SpectralData& curve, double contour_eps = 0.1) {
    require(curve.symmetric(), "hypothesis 1(ii) violated",
            "omega_{0,2} assembly needs a symmetric support [-b, b]");
    Omega02 om;
    om.b = curve.b;
    om.gamma = curve.gamma;
    om.t = curve.t;
    om.dim = std::max(1, spec.d - 1);

    auto tk = interactions(spec, weights);
    if (tk.count({0, 2})) om.nu = nu_table(tk[{0, 2}]);

    om.C = build_C(om.nu, om.b, om.dim + 1);
    const int n = om.dim;
    int kdim = check_hypothesis2(om.C);
    require(kdim == 0, "hypothesis 2 violated", "kernel of the C matrix is nontrivial");

    // invert column by column through the guarded solver
    om.Cinv.assign(n, std::vector<double>(n, 0.0));
    double cond = 0.0;
    for (int col = 0; col < n; ++col) {
        std::vector<double> e(n, 0.0);
        e[col] = 1.0;
        auto sol = linsolve(om.C, e);
        cond = std::max(cond, sol.condition_estimate);
        for (int row = 0; row < n; ++row) om.Cinv[row][col] = sol.x[row];
    }
    om.condition = cond;

    // beta[k][i] = sum_q B_{k,q} (C^{-1})_{q,i} * i
    std::vector<std::vector<double>> B(n + 1, std::vector<double>(n + 1, 0.0));
    const double half = om.b / 2.0;
    for (int k = 1; k <= n; ++k)
        for (int q = 1; q <= n; ++q) {
            double acc = 0.0;
            for (int m = q; m <= n + 1 - k; m += 2) {
                auto it = om.nu.find({k, m});
                if (it == om.nu.end()) continue;
                acc += it->second * std::pow(half, k + m) * detail::binom(m, (m - q) / 2);
            }
            B[k][q] = k * acc;
        }
    om.beta.assign(n + 1, std::vector<double>(n + 1, 0.0));
    for (int k = 1; k <= n; ++k)
        for (int i = 1; i <= n; ++i) {
            double acc = 0.0;
            for (int q = 1; q <= n; ++q) acc += B[k][q] * om.Cinv[q - 1][i - 1] * i;
            om.beta[k][i] = acc;
        }

    // Build-time assertions on the subtle Fourier steps.
    const double radius = 1.0 + contour_eps;
    const Complex zetas[] = {{2.3, 0.4}, {-1.9, 1.1}};
    for (Complex zeta : zetas) {
        for (int i = 1; i <= n; ++i) {
            // RHS identity: (1/2pi i) oint z^i Q1 dz = i/zeta^{i+1}
            Complex got = contour_integral(
                [&](Complex z) { return std::pow(z, i) * om.q1(z, zeta); }, radius, 2048);
            Complex want = static_cast<double>(i) * std::pow(zeta, -i - 1);
            require(std::abs(got - want) <= 1e-9 * (1.0 + std::abs(want)), "assembly check",
                    "rhs identity oint z^i Q1 = i/zeta^{i+1} failed");
        }
        for (int qexp = 0; qexp >= -2; --qexp) {
            // vanishing nonpositive Fourier modes of the assembled F
            Complex got = contour_integral(
                [&](Complex z) { return std::pow(z, qexp) * om.F(z, zeta); }, radius, 2048);
            require(std::abs(got) <= 1e-9, "assembly check",
                    "nonpositive Fourier mode of F does not vanish");
        }
        for (int i = 1; i <= n; ++i) {
            // defining equation of the Fourier coefficients
            Complex got = contour_integral(
                [&](Complex z) { return std::pow(z, i) * om.F(z, zeta); }, radius, 2048);
            Complex want = 0.0;
            for (int j = 1; j <= n; ++j)
                want += om.Cinv[i - 1][j - 1] * static_cast<double>(j) * std::pow(zeta, -j - 1);
            require(std::abs(got - want) <= 1e-9 * (1.0 + std::abs(want)), "assembly check",
                    "Fourier coefficient of F disagrees with the linear solve");
        }
    }
    return om;
}

inline Omega02 solve_F(const ModelSpec& spec, const SpectralData& curve, double contour_eps = 0.1) {
    return solve_F(spec, compile_weights(spec), curve, contour_eps);
}

// omega_{0,2} density (coefficient of dz dzeta) = F + Bhat_0. Equals
// 1/(z-zeta)^2 + Q2(z,zeta) identically.
inline Complex omega02_eval(const Omega02& om, Complex z, Complex zeta) {
    require(std::abs(z - zeta) > 1e-12, "diagonal", "omega_{0,2} evaluated on the diagonal");
    return om.F(z, zeta) + om.bhat0(z, zeta);
}

// Max residual of the functional equation satisfied by F on the contour.
// The b_k are recomputed from F itself by contour integration, so the check
// probes the self-consistency of the linear solve rather than an algebraic
// identity of the stored table.
inline double functional_residual(const Omega02& om, const std::vector<Complex>& points,
                                  double contour_radius = 1.1) {
    double worst = 0.0;
    for (Complex zeta : {Complex{2.1, 0.7}, Complex{-2.6, 0.3}}) {
        std::vector<Complex> bq(static_cast<size_t>(om.dim) + 1, 0.0);
        for (int k = 1; k <= om.dim; ++k) {
            Complex acc = 0.0;
            for (int m = 1; m <= om.dim + 1 - k; ++m) {
                auto it = om.nu.find({k, m});
                if (it == om.nu.end()) continue;
                Complex mom = contour_integral(
                    [&](Complex tau) { return std::pow(tau + 1.0 / tau, m) * om.F(tau, zeta); },
                    contour_radius, 1024);
                acc += it->second * std::pow(om.b / 2.0, k + m) * mom;
            }
            bq[static_cast<size_t>(k)] = static_cast<double>(k) * acc;
        }
        for (Complex z : points) {
            Complex lhs = om.F(z, zeta) - om.F(1.0 / z, zeta) / (z * z);
            Complex sum = 0.0;
            for (int k = 1; k <= om.dim; ++k)
                sum += bq[static_cast<size_t>(k)] * std::pow(z + 1.0 / z, k - 1);
            lhs += (1.0 - 1.0 / (z * z)) * sum;
            lhs += om.bhat0(z, zeta);
            worst = std::max(worst, std::abs(lhs));
        }
    }
    return worst;
}

// Exact x-expansion coefficient of W_{0,2}: the Q_{0;(l1,l2)} table entry,
// extracted by double residue bookkeeping in the Joukowski variables.
inline double omega2_xmoment(const Omega02& om, int l1, int l2) {
    const int n = om.dim;
    // inner integral over z: eta_f = [zeta^{-f-1}] of oint x(z)^{l1} F dz
    std::vector<double> eta(static_cast<size_t>(std::max(l1, n)) + 2, 0.0);
    for (int e = 1; e <= l1; ++e) {
        double xc = om.x_power_coeff(l1, e);
        if (xc == 0.0) continue;
        if (e < static_cast<int>(eta.size())) eta[static_cast<size_t>(e)] += xc * e;  // Q1 part
        for (int i = 1; i <= n; ++i)
            if (e <= n) eta[static_cast<size_t>(i)] += xc * om.q2_coeff(e, i);
    }
    double q = 0.0;
    for (int f = 1; f < static_cast<int>(eta.size()); ++f) q += om.x_power_coeff(l2, f) * eta[static_cast<size_t>(f)];
    return q;
}

}  // namespace btrengine
