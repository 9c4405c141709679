#pragma once
// Deterministic random streams. A (seed, stream_id) pair fully determines the
// draw sequence, independent of platform and of any other stream, so sweep
// points can run concurrently and still reproduce bit-identically.

#include <cstdint>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "waveform.hpp"

namespace dmtsim {

namespace detail {

// splitmix64 step; used only to whiten (seed, stream_id) into an engine seed.
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

/// Seeded, stream-separated Gaussian/uniform source.
///
/// The underlying mt19937_64 sequence is fixed by the C++ standard and the
/// Gaussian transform is a hand-rolled Box-Muller, so draws are reproducible
/// across standard-library implementations, not just across runs.
class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {
        std::uint64_t s = seed;
        std::uint64_t a = detail::splitmix64(s);
        s ^= stream_id * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull;
        std::uint64_t b = detail::splitmix64(s);
        engine_.seed(a ^ (b + 0x165667B19E3779F9ull));
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform draw in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal draw (Box-Muller; pairs cached).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] keeps the log finite.
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double ang = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(ang);
        have_spare_ = true;
        return r * std::cos(ang);
    }

    /// Circularly-symmetric complex Gaussian with the given per-component
    /// (real/imag) variance.
    cplx complex_gaussian(double variance_per_component) {
        double sigma = std::sqrt(variance_per_component);
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double ang = 6.283185307179586476925286766559 * u2;
        return {sigma * r * std::cos(ang), sigma * r * std::sin(ang)};
    }

  private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// n circularly-symmetric complex Gaussian samples, E[|x|^2] = 2 * variance_per_component.
inline std::vector<cplx> gaussian_noise(RandomStream& stream, std::size_t n,
                                        double variance_per_component) {
    if (variance_per_component < 0.0)
        throw std::invalid_argument("gaussian_noise: negative variance");
    std::vector<cplx> out(n);
    if (variance_per_component == 0.0) return out;
    for (std::size_t i = 0; i < n; ++i)
        out[i] = stream.complex_gaussian(variance_per_component);
    return out;
}

} // namespace dmtsim
