#pragma once
// Unitary spectral transforms backed by FFTW3. Plans are cached per
// (length, direction) behind a mutex; execution is thread-safe, so concurrent
// sweep points can share the cache. FFTW_ESTIMATE keeps planning deterministic.

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "waveform.hpp"

namespace dmtsim {

namespace detail {

class FftEngine {
  public:
    static FftEngine& instance() {
        static FftEngine eng;
        return eng;
    }

    // Unnormalized out-of-place transform; sign = FFTW_FORWARD or FFTW_BACKWARD.
    void execute(const std::vector<cplx>& in, std::vector<cplx>& out, int sign) {
        const std::size_t n = in.size();
        out.resize(n);
        if (n == 0) return;
        if (n == 1) {
            out[0] = in[0];
            return;
        }
        fftw_plan plan = get_plan(n, sign);
        // std::complex<double> is layout-compatible with fftw_complex.
        fftw_execute_dft(plan,
                         reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                         reinterpret_cast<fftw_complex*>(out.data()));
    }

    FftEngine(const FftEngine&) = delete;
    FftEngine& operator=(const FftEngine&) = delete;

  private:
    FftEngine() = default;
    ~FftEngine() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get_plan(std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> a(n), b(n);
        fftw_plan plan = fftw_plan_dft_1d(
            static_cast<int>(n), reinterpret_cast<fftw_complex*>(a.data()),
            reinterpret_cast<fftw_complex*>(b.data()), sign,
            FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan) throw std::runtime_error("FFTW planning failed");
        plans_.emplace(key, plan);
        return plan;
    }

    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

// Unnormalized DFT helpers for internal block processing (any length).
inline std::vector<cplx> fft_raw(const std::vector<cplx>& x) {
    std::vector<cplx> out;
    FftEngine::instance().execute(x, out, FFTW_FORWARD);
    return out;
}

inline std::vector<cplx> ifft_raw(const std::vector<cplx>& X) {
    std::vector<cplx> out;
    FftEngine::instance().execute(X, out, FFTW_BACKWARD);
    return out;
}

inline bool is_power_of_two(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

} // namespace detail

/// Frequency (Hz) of DFT bin k for an n-point transform at the given sample
/// rate, with negative frequencies in the upper half of the bin range.
inline double bin_frequency(std::size_t k, std::size_t n, double sample_rate) {
    const double step = sample_rate / static_cast<double>(n);
    if (k <= n / 2) return static_cast<double>(k) * step;
    return (static_cast<double>(k) - static_cast<double>(n)) * step;
}

/// Unitary DFT (1/sqrt(N) scaling). Length must be a power of two.
inline std::vector<cplx> forward_transform(const std::vector<cplx>& x) {
    if (!detail::is_power_of_two(x.size()))
        throw std::invalid_argument("forward_transform: length must be a power of two");
    std::vector<cplx> out = detail::fft_raw(x);
    const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
    for (cplx& v : out) v *= scale;
    return out;
}

/// Unitary inverse DFT (1/sqrt(N) scaling). Length must be a power of two.
/// inverse_transform(forward_transform(x)) == x to numerical precision.
inline std::vector<cplx> inverse_transform(const std::vector<cplx>& X) {
    if (!detail::is_power_of_two(X.size()))
        throw std::invalid_argument("inverse_transform: length must be a power of two");
    std::vector<cplx> out = detail::ifft_raw(X);
    const double scale = 1.0 / std::sqrt(static_cast<double>(X.size()));
    for (cplx& v : out) v *= scale;
    return out;
}

} // namespace dmtsim
