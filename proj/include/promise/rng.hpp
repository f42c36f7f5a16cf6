#pragma once

#include <cstdint>
#include <cmath>

namespace promise {

/**
 * Counter-based pseudo-random generator (splitmix64 mixing).
 *
 * Every stream is identified by a 64-bit key; child streams are derived
 * from the key alone, so `derive` is independent of how far the parent
 * has been consumed. All module-level randomness flows from one root
 * seed through derived streams.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x9E3779B97F4A7C15ull)) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ull); }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    /// Standard normal via Box-Muller; second draw is cached.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.28318530717958647692 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double next_lognormal(double log_mean, double log_sd) {
        return std::exp(log_mean + log_sd * next_normal());
    }

    /// Child stream keyed by tag; stable under parent consumption.
    Rng derive(std::uint64_t tag) const { return Rng(mix(key_ ^ mix(tag + 0xD1B54A32D192ED03ull))); }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace promise
