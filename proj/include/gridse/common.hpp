#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace gridse {

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

constexpr double kPi = 3.141592653589793238462643383279502884;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// SplitMix64 step; used to derive independent child seeds from (seed, index)
// so per-sample random streams are order-independent.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51ed2701ULL));
}

// All randomness in the library flows through this engine; every consumer
// receives an explicit instance seeded by the caller.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal(double mean, double std) {
        return std::normal_distribution<double>(mean, std)(engine_);
    }
    std::uint64_t next_u64() { return engine_(); }

    // Fisher-Yates shuffle with this engine (std::shuffle is unspecified
    // across standard library versions; this keeps artifacts reproducible).
    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::uniform_int_distribution<std::size_t> d(0, i - 1);
            std::swap(v[i - 1], v[d(engine_)]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace gridse
