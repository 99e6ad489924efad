#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cmath>
#include <initializer_list>

#include "gmf/linalg.hpp"

namespace gmf {

/// Deterministic, platform-independent random streams. Stream keys are
/// derived from a root seed plus an integer path (trial, member, epoch, ...)
/// so parallel workers can draw independently in any execution order.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = seed ^ 0xd1b54a32d192ed03ULL;
    for (std::uint64_t p : path) {
        s ^= splitmix64(p) + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        (void)splitmix64(s);
        s = splitmix64(s);
    }
    return s;
}

}  // namespace rng

/// Counter-based generator (xoshiro-free: splitmix64 chain) with Box-Muller
/// normals. The standard library distributions are implementation-defined,
/// so draws here are produced from raw 64-bit words only.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t key) : state_(key) {
        // decorrelate trivially related keys
        next_u64();
        next_u64();
    }

    RandomStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
        : RandomStream(rng::derive(seed, path)) {}

    std::uint64_t next_u64() { return rng::splitmix64(state_); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    VectorXd normal_vector(Eigen::Index n) {
        VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    /// Draw from N(mean, L L^T) given the lower Cholesky factor L.
    VectorXd gaussian(const VectorXd& mean, const MatrixXd& chol_lower) {
        return mean + chol_lower * normal_vector(mean.size());
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace gmf
