#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace siphi {

// Seeded generator with platform-independent derived distributions.
// std::uniform_real_distribution and friends are implementation-defined, so
// everything here is built directly on the raw mt19937_64 stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform();                          // [0, 1)
    double uniform(double lo, double hi);      // [lo, hi)
    double normal();                           // N(0, 1), Box-Muller
    std::uint64_t index(std::uint64_t n);      // uniform in [0, n)

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Stable child seed for a named sub-task (run id, epoch, fold, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace siphi
