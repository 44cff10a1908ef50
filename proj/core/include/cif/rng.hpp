#ifndef CIF_RNG_HPP
#define CIF_RNG_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace cif {

/// Seeded random source with implementation-independent draws. The standard
/// distributions are allowed to differ between standard libraries, so
/// uniform/gaussian sampling is derived from raw mt19937_64 output directly;
/// same seed gives the same stream everywhere.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    uint64_t uniform_index(uint64_t n) {
        // Rejection sampling keeps the draw exactly uniform.
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do { v = engine_(); } while (v >= limit);
        return v % n;
    }

    /// Standard normal via Box-Muller.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Uniformly random direction on the unit sphere in `dim` dimensions.
    Eigen::VectorXd unit_vector(int dim) {
        Eigen::VectorXd v(dim);
        double norm = 0.0;
        do {
            for (int i = 0; i < dim; ++i) v[i] = gaussian();
            norm = v.norm();
        } while (norm == 0.0);
        return v / norm;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cif

#endif
