#pragma once

#include <complex>
#include <functional>

namespace btrengine {

// (1/2pi i) oint_{|z|=radius} f(z) dz by the trapezoid rule, which converges
// geometrically for integrands meromorphic off the circle. Used as the
// independent cross-check against exact residue bookkeeping and for the
// Schwinger-Dyson residual evaluations.
inline std::complex<double> contour_integral(
    const std::function<std::complex<double>(std::complex<double>)>& f, double radius,
    int samples = 1024) {
    std::complex<double> acc = 0.0;
    for (int k = 0; k < samples; ++k) {
        double th = 2.0 * M_PI * k / samples;
        std::complex<double> z = std::polar(radius, th);
        acc += f(z) * z;
    }
    return acc / static_cast<double>(samples);
}

}  // namespace btrengine
