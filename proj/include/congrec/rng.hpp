#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace congrec {

// splitmix64 step; used only to derive stream seeds, never as the stream itself.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d49bb133111ebULL;
    return z ^ (z >> 31);
}

// Folds a base seed with a list of stream labels (method index, run index, ...)
// into an independent-looking seed. Same inputs always give the same output,
// so every run of every experiment has a reproducible generator.
inline std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t s = base ^ 0x6a09e667f3bcc908ULL;
    std::uint64_t out = splitmix64(s);
    for (std::uint64_t p : parts) {
        s ^= p + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        out ^= splitmix64(s);
    }
    return out;
}

// Deterministic random source. mt19937_64 output is fixed by the C++ standard,
// and the derived draws below avoid std::uniform_real_distribution /
// std::normal_distribution, whose outputs are implementation-defined. All
// reproducibility guarantees in this library rest on this class.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform double in (0, 1]; safe as a log() argument.
    double uniform_pos() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via the Box-Muller transform, one spare cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Uniform integer in [0, n); n must be positive. Debiased by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = -n % n;  // 2^64 mod n
        for (;;) {
            std::uint64_t x = engine_();
            if (x >= threshold) return x % n;
        }
    }

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace congrec
