#pragma once
// Link quality metrics: bit-error accounting with per-carrier attribution,
// required-OSNR readout from a measured curve, and rate estimates.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dmt_config.hpp"
#include "loading.hpp"

namespace dmtsim {

struct BerStats {
    std::uint64_t bit_errors = 0;
    std::uint64_t total_bits = 0;
    std::vector<std::uint64_t> errors_per_carrier; ///< indexed by data bin - 1
    std::vector<std::uint64_t> bits_per_carrier;

    double ber() const {
        return total_bits ? static_cast<double>(bit_errors) / static_cast<double>(total_bits)
                          : 0.0;
    }

    void merge(const BerStats& other) {
        bit_errors += other.bit_errors;
        total_bits += other.total_bits;
        if (errors_per_carrier.empty()) {
            errors_per_carrier = other.errors_per_carrier;
            bits_per_carrier = other.bits_per_carrier;
            return;
        }
        if (other.errors_per_carrier.size() != errors_per_carrier.size())
            throw std::invalid_argument("BerStats::merge: carrier count mismatch");
        for (std::size_t i = 0; i < errors_per_carrier.size(); ++i) {
            errors_per_carrier[i] += other.errors_per_carrier[i];
            bits_per_carrier[i] += other.bits_per_carrier[i];
        }
    }
};

/// Compare transmitted and received bit streams laid out in the modulator's
/// carrier walk (frame-major, ascending bins, pilots skipped) and attribute
/// errors to carriers. Streams must be equal length and a whole number of
/// frames under the table.
inline BerStats count_ber(const std::vector<std::uint8_t>& tx,
                          const std::vector<std::uint8_t>& rx, const LoadingTable& table,
                          const DmtConfig& cfg) {
    if (tx.size() != rx.size())
        throw std::invalid_argument("count_ber: stream length mismatch");
    if (table.bits.size() != cfg.data_bin_count())
        throw std::invalid_argument("count_ber: table size mismatch");
    std::size_t per_frame = 0;
    for (int b : table.bits) per_frame += static_cast<std::size_t>(b > 0 ? b : 0);
    if (per_frame == 0 || tx.size() % per_frame != 0)
        throw std::invalid_argument("count_ber: streams are not whole frames");
    BerStats stats;
    stats.errors_per_carrier.assign(cfg.data_bin_count(), 0);
    stats.bits_per_carrier.assign(cfg.data_bin_count(), 0);
    std::size_t pos = 0;
    const std::size_t n_frames = tx.size() / per_frame;
    for (std::size_t f = 0; f < n_frames; ++f) {
        for (std::size_t bin = 1; bin < cfg.fft_size() / 2; ++bin) {
            const std::size_t i = bin - 1;
            if (cfg.is_pilot(bin)) continue;
            const int b = table.bits[i];
            if (b <= 0) continue;
            for (int j = 0; j < b; ++j, ++pos) {
                const bool err = (tx[pos] ^ rx[pos]) & 1u;
                stats.bit_errors += err;
                stats.errors_per_carrier[i] += err;
            }
            stats.bits_per_carrier[i] += static_cast<std::size_t>(b);
        }
    }
    stats.total_bits = tx.size();
    return stats;
}

/// A measured BER-vs-OSNR characteristic, OSNR strictly ascending.
struct OsnrCurve {
    std::vector<double> osnr_db;
    std::vector<double> ber;
};

/// OSNR at which the curve crosses target_ber, interpolating linearly in
/// (osnr_db, log10 BER). When the curve wobbles, the highest-OSNR downward
/// crossing wins; zero-BER points are floored at 1e-12 for interpolation.
/// Returns the lowest measured OSNR when the whole curve is already below
/// target, and nullopt when the top of the curve never reaches it.
inline std::optional<double> required_osnr(const OsnrCurve& curve, double target_ber) {
    const std::size_t n = curve.osnr_db.size();
    if (n == 0 || curve.ber.size() != n)
        throw std::invalid_argument("required_osnr: malformed curve");
    if (!(target_ber > 0.0)) throw std::invalid_argument("required_osnr: target must be > 0");
    for (std::size_t i = 1; i < n; ++i)
        if (!(curve.osnr_db[i] > curve.osnr_db[i - 1]))
            throw std::invalid_argument("required_osnr: OSNR values must be ascending");
    const auto log_ber = [](double b) { return std::log10(std::max(b, 1e-12)); };
    if (curve.ber[n - 1] > target_ber) return std::nullopt;
    for (std::size_t i = n; i-- > 1;) {
        if (curve.ber[i] == target_ber) return curve.osnr_db[i];
        if (curve.ber[i] <= target_ber && curve.ber[i - 1] >= target_ber) {
            if (curve.ber[i - 1] == target_ber) return curve.osnr_db[i - 1];
            const double y0 = log_ber(curve.ber[i - 1]);
            const double y1 = log_ber(curve.ber[i]);
            const double yt = std::log10(target_ber);
            const double t = (yt - y0) / (y1 - y0);
            return curve.osnr_db[i - 1] + t * (curve.osnr_db[i] - curve.osnr_db[i - 1]);
        }
    }
    return curve.osnr_db.front();
}

/// Gross rate supported by a payload SNR profile at the gap thresholds:
/// each carrier contributes the largest order whose (margin-inflated)
/// threshold it clears, capped at cfg.max_order_bits.
inline double achievable_rate_bps(const SnrProfile& payload, const GapModel& gap,
                                  const DmtConfig& cfg) {
    const double margin_factor = std::pow(10.0, gap.margin_db() / 10.0);
    std::uint64_t bits = 0;
    for (double s : payload.snr) {
        for (int b = cfg.max_order_bits; b >= 1; --b) {
            if (s >= gap.threshold(b) * margin_factor) {
                bits += static_cast<std::uint64_t>(b);
                break;
            }
        }
    }
    return static_cast<double>(bits) * cfg.symbol_rate();
}

/// Aggregate C-band figure: n_channels WDM slots at per_channel_gbps each.
inline double cband_capacity_gbps(double per_channel_gbps = 112.0, int n_channels = 44) {
    if (n_channels < 0) throw std::invalid_argument("cband_capacity_gbps: negative channel count");
    return per_channel_gbps * static_cast<double>(n_channels);
}

} // namespace dmtsim
