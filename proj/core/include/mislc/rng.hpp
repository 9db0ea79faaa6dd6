#pragma once

#include <cmath>
#include <cstdint>

namespace mislc {

// Deterministic generator with a fixed cross-platform bit stream
// (std:: distributions are implementation-defined, so sampling is
// hand-rolled on top of splitmix64).
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, n), rejection-sampled so every index is equally likely
    uint64_t next_index(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // standard normal via Box-Muller on the deterministic stream
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        while (u == 0.0) u = next_double();
        const double v = next_double();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double a = 2.0 * 3.14159265358979323846 * v;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace mislc
