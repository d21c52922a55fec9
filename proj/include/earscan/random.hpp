#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace earscan {

std::uint64_t splitmix64(std::uint64_t x);

/// Independent stream seed from a base seed and up to two stream labels.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

/// FNV-1a, for deriving per-subject seeds from identifiers.
std::uint64_t hash_string(std::string_view text);

/// mt19937_64 with distribution code written out here so draws are identical
/// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// (0, 1).
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    /// Marsaglia polar method.
    double normal();

    /// Gamma(shape, 1) by Marsaglia and Tsang, with the u^(1/a) boost for shape < 1.
    double gamma(double shape);

    double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Random permutation distributed as successive draws without replacement with
/// probability proportional to the remaining weights. Zero-weight items follow
/// every positive-weight item, in uniform random order.
std::vector<std::size_t> weighted_order(std::span<const double> weights, Rng& rng);

}  // namespace earscan
