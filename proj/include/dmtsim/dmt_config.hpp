#pragma once
// DMT frame geometry and modem parameters.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dmtsim {

/// Multicarrier frame parameters. The defaults describe the 112 Gbit/s
/// operating point: 512-subcarrier grid over a 1024-point transform at
/// 56 GSa/s, 16-sample cyclic prefix, two fixed pilot bins.
struct DmtConfig {
    std::size_t n_subcarriers = 512;  ///< grid size; data occupies bins 1 .. n_subcarriers-1
    std::size_t cp_samples = 16;
    double dac_rate = 56e9;           ///< converter rate, Sa/s
    double clipping_ratio_db = 12.5;  ///< 20*log10(clip amplitude / rms)
    std::vector<std::size_t> pilot_bins = {255, 256};
    std::size_t n_training_frames = 64;
    int max_order_bits = 8;
    double target_rate_gbps = 112.0;  ///< gross line rate at full loading

    std::size_t fft_size() const { return 2 * n_subcarriers; }
    std::size_t frame_samples() const { return fft_size() + cp_samples; }

    /// Bins that can carry modulation: 1 .. n_subcarriers-1 (DC and the
    /// Nyquist bin of the real-valued transform are forced to zero).
    std::size_t data_bin_count() const { return n_subcarriers - 1; }
    std::size_t payload_bin_count() const { return data_bin_count() - pilot_bins.size(); }

    double symbol_rate() const {
        return dac_rate / static_cast<double>(frame_samples());
    }

    /// Bits per frame required to hit target_rate_gbps (2080 at defaults).
    std::size_t full_rate_bits() const {
        const double exact = target_rate_gbps * 1e9 / symbol_rate();
        const double rounded = std::round(exact);
        if (std::abs(exact - rounded) > 1e-6)
            throw std::runtime_error("DmtConfig: target rate is not an integer bits/frame");
        return static_cast<std::size_t>(rounded);
    }

    std::size_t half_rate_bits() const { return full_rate_bits() / 2; }

    bool is_pilot(std::size_t bin) const {
        return std::find(pilot_bins.begin(), pilot_bins.end(), bin) != pilot_bins.end();
    }

    /// Center frequency of data bin k (k in 1 .. n_subcarriers-1).
    double bin_frequency_hz(std::size_t bin) const {
        return static_cast<double>(bin) * dac_rate / static_cast<double>(fft_size());
    }

    void validate() const {
        if (n_subcarriers < 4 || (n_subcarriers & (n_subcarriers - 1)) != 0)
            throw std::invalid_argument("DmtConfig: n_subcarriers must be a power of two >= 4");
        if (dac_rate <= 0.0) throw std::invalid_argument("DmtConfig: dac_rate must be positive");
        if (n_training_frames < 2)
            throw std::invalid_argument("DmtConfig: need at least 2 training frames");
        if (max_order_bits < 1 || max_order_bits > 8)
            throw std::invalid_argument("DmtConfig: max_order_bits must be 1..8");
        for (std::size_t p : pilot_bins)
            if (p < 1 || p >= n_subcarriers)
                throw std::invalid_argument("DmtConfig: pilot bin outside data grid");
    }
};

} // namespace dmtsim
