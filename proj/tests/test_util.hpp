#pragma once

#include <random>

#include "btrengine/model.hpp"

namespace btrtest {

inline btrengine::HermitianMatrix random_hermitian(int N, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> G(0.0, scale);
    btrengine::HermitianMatrix A(N, N);
    for (int i = 0; i < N; ++i) {
        A(i, i) = G(rng);
        for (int j = i + 1; j < N; ++j) {
            A(i, j) = std::complex<double>(G(rng), G(rng)) / std::sqrt(2.0);
            A(j, i) = std::conj(A(i, j));
        }
    }
    return A;
}

inline btrengine::BigRational milli(long k) { return btrengine::BigRational(k, 1000); }

}  // namespace btrtest
