#pragma once
// Band-limited rate conversion via frequency-domain zero padding / truncation.
// Intended for integer-related rate pairs (e.g. 56 <-> 224 GSa/s); the output
// length must land on an integer, otherwise the rate pair is rejected.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spectral.hpp"
#include "waveform.hpp"

namespace dmtsim {

namespace detail {

// Core spectral resampler: maps n_in samples onto n_out samples preserving
// amplitude. Operates on unnormalized DFTs; out-of-band bins are dropped
// (down) or exactly zero (up), so quantization of the rate grid is the only
// source of error for band-limited content.
inline std::vector<cplx> resample_bins(const std::vector<cplx>& x, std::size_t n_out) {
    const std::size_t n_in = x.size();
    if (n_out == n_in) return x;
    if (n_in < 2 || n_out < 2)
        throw std::invalid_argument("resample: waveform too short");

    std::vector<cplx> X = fft_raw(x);
    std::vector<cplx> Y(n_out, cplx{0.0, 0.0});

    if (n_out > n_in) {
        const std::size_t half = n_in / 2;
        for (std::size_t k = 0; k < half; ++k) Y[k] = X[k];
        for (std::size_t k = 1; k < half; ++k) Y[n_out - k] = X[n_in - k];
        if (n_in % 2 == 0) {
            // Split the old Nyquist bin symmetrically to keep real inputs real.
            Y[half] = 0.5 * X[half];
            Y[n_out - half] += 0.5 * X[half];
        } else {
            Y[half] = X[half];
            Y[n_out - half] = X[n_in - half];
        }
    } else {
        const std::size_t half = n_out / 2;
        for (std::size_t k = 0; k < half; ++k) Y[k] = X[k];
        for (std::size_t k = 1; k < half; ++k) Y[n_out - k] = X[n_in - k];
        if (n_out % 2 == 0) {
            // The two bins that fold onto the new Nyquist are conjugate for
            // real inputs; summing them keeps the output real.
            Y[half] = X[half] + X[n_in - half];
        } else {
            Y[half] = X[half];
            Y[n_out - half] = X[n_in - half];
        }
    }

    std::vector<cplx> y = ifft_raw(Y);
    const double scale = 1.0 / static_cast<double>(n_in);
    for (cplx& v : y) v *= scale;
    return y;
}

inline std::size_t resample_length(std::size_t n_in, double old_rate, double new_rate) {
    if (old_rate <= 0.0 || new_rate <= 0.0)
        throw std::invalid_argument("resample: rates must be positive");
    const double exact = static_cast<double>(n_in) * new_rate / old_rate;
    const double rounded = std::round(exact);
    if (rounded < 2.0)
        throw std::invalid_argument("resample: output would be shorter than 2 samples");
    if (std::abs(exact - rounded) > 1e-6)
        throw std::invalid_argument(
            "resample: rates are not integer-related over this length");
    return static_cast<std::size_t>(rounded);
}

} // namespace detail

/// Resample a complex envelope to new_rate (center frequency unchanged).
inline ComplexEnvelope resample(const ComplexEnvelope& in, double new_rate) {
    ComplexEnvelope out;
    out.sample_rate = new_rate;
    out.center_frequency = in.center_frequency;
    const std::size_t n_out =
        detail::resample_length(in.samples.size(), in.sample_rate, new_rate);
    out.samples = detail::resample_bins(in.samples, n_out);
    return out;
}

/// Resample a real waveform to new_rate. The spectral method preserves
/// realness exactly up to rounding; the imaginary residue is discarded.
inline RealWaveform resample(const RealWaveform& in, double new_rate) {
    const std::size_t n_out =
        detail::resample_length(in.samples.size(), in.sample_rate, new_rate);
    std::vector<cplx> x(in.samples.begin(), in.samples.end());
    std::vector<cplx> y = detail::resample_bins(x, n_out);
    RealWaveform out;
    out.sample_rate = new_rate;
    out.samples.resize(n_out);
    for (std::size_t i = 0; i < n_out; ++i) out.samples[i] = y[i].real();
    return out;
}

} // namespace dmtsim
