#ifndef FAN_RANDOM_HPP
#define FAN_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace fan {

/// Deterministic PRNG (splitmix64 core) with its own distribution code so
/// that streams are byte-stable across standard library implementations.
/// All randomness in the toolkit flows from one root seed, fanned out to
/// named substreams via derive().
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    float uniform(float lo, float hi) {
        return lo + static_cast<float>(next_double()) * (hi - lo);
    }

    /// Standard normal via Box-Muller; one spare value cached.
    float normal(float mean = 0.0f, float stddev = 1.0f) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * static_cast<float>(spare_);
        }
        double u1, u2;
        do {
            u1 = next_double();
        } while (u1 <= 1e-12);
        u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + stddev * static_cast<float>(r * std::cos(theta));
    }

    /// Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
    }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = next_u64() % i;
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Derive a child seed for a named stream. FNV-1a over the label,
    /// mixed with the root seed through one splitmix round.
    static uint64_t derive(uint64_t root, std::string_view label) {
        uint64_t h = 0xcbf29ce484222325ull;
        for (char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        Rng mixer(root ^ h);
        return mixer.next_u64();
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace fan

#endif
