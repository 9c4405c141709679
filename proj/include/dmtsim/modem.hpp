#pragma once
// DMT modulator and demodulator.
//
// Frames are built on a Hermitian-symmetric bin grid: an n_subcarriers-wide
// half-spectrum drives a 2*n_subcarriers real IFFT, a cyclic prefix is
// prepended, and the result is clipped at a fixed ratio above the frame RMS.
// The receive side recovers frame timing from a half-period-repeating sync
// frame (autocorrelation plateau plus template refinement), estimates the
// complex channel and per-bin SNR from known training frames, and equalizes
// with a one-tap divide per bin before hard demapping.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "constellation.hpp"
#include "dmt_config.hpp"
#include "loading.hpp"
#include "random.hpp"
#include "spectral.hpp"
#include "waveform.hpp"

namespace dmtsim {

namespace detail {

// Fixed seeds so both ends regenerate sync/training content from the config
// alone.
inline constexpr std::uint64_t kSyncSeed = 0x53594E43u;
inline constexpr std::uint64_t kTrainingSeed = 0x5452414Eu;

inline const Constellation& constellation_for(int order_bits) {
    static const std::array<Constellation, 8> bank = {
        Constellation(1), Constellation(2), Constellation(3), Constellation(4),
        Constellation(5), Constellation(6), Constellation(7), Constellation(8)};
    if (order_bits < 1 || order_bits > 8)
        throw std::invalid_argument("constellation_for: order must be 1..8");
    return bank[static_cast<std::size_t>(order_bits - 1)];
}

/// Clip samples to +/- (rms * 10^(ratio_db/20)). All-zero frames pass through.
inline void clip_to_ratio(std::vector<double>& x, double ratio_db) {
    const double rms = std::sqrt(mean_power(x));
    if (rms == 0.0) return;
    const double limit = rms * std::pow(10.0, ratio_db / 20.0);
    for (double& v : x) v = std::clamp(v, -limit, limit);
}

/// Assemble one frame (CP + core) from data-bin symbols for bins 1..n-1.
/// DC and Nyquist bins are forced to zero; the negative half mirrors the
/// conjugate so the core comes out real.
inline std::vector<double> frame_from_spectrum(const std::vector<cplx>& data_bins,
                                               const DmtConfig& cfg) {
    const std::size_t fft = cfg.fft_size();
    if (data_bins.size() != cfg.data_bin_count())
        throw std::invalid_argument("frame_from_spectrum: wrong data bin count");
    std::vector<cplx> spectrum(fft, cplx(0.0, 0.0));
    for (std::size_t k = 1; k < fft / 2; ++k) {
        spectrum[k] = data_bins[k - 1];
        spectrum[fft - k] = std::conj(data_bins[k - 1]);
    }
    const auto core_c = inverse_transform(spectrum);
    std::vector<double> core(fft);
    for (std::size_t i = 0; i < fft; ++i) core[i] = core_c[i].real();
    clip_to_ratio(core, cfg.clipping_ratio_db);
    std::vector<double> frame;
    frame.reserve(cfg.frame_samples());
    frame.insert(frame.end(), core.end() - static_cast<std::ptrdiff_t>(cfg.cp_samples),
                 core.end());
    frame.insert(frame.end(), core.begin(), core.end());
    return frame;
}

/// Sync-frame bin symbols: QPSK on even bins only (making the core repeat
/// with period fft/2), scaled so total frame power matches a full data frame.
inline std::vector<cplx> sync_frame_bins(const DmtConfig& cfg) {
    RandomStream rs(kSyncSeed, 0);
    std::vector<cplx> bins(cfg.data_bin_count(), cplx(0.0, 0.0));
    for (std::size_t bin = 2; bin < cfg.fft_size() / 2; bin += 2) {
        const double re = rs.uniform() < 0.5 ? -1.0 : 1.0;
        const double im = rs.uniform() < 0.5 ? -1.0 : 1.0;
        bins[bin - 1] = cplx(re, im); // |X|^2 = 2 compensates the idle odd bins
    }
    return bins;
}

} // namespace detail

/// Map one frame of payload bits onto bin symbols. Bits are consumed MSB
/// first per carrier, walking bins in ascending order and skipping pilots;
/// each symbol is scaled by sqrt(power). Pilot bins carry (1+j)/sqrt(2).
/// Returns the data-bin spectrum; exactly sum(table.bits) bits are consumed
/// starting at `offset`.
inline std::vector<cplx> map_frame_bits(const std::vector<std::uint8_t>& bits,
                                        std::size_t offset, const LoadingTable& table,
                                        const DmtConfig& cfg) {
    if (table.bits.size() != cfg.data_bin_count() ||
        table.power.size() != cfg.data_bin_count())
        throw std::invalid_argument("map_frame_bits: table size mismatch");
    std::vector<cplx> out(cfg.data_bin_count(), cplx(0.0, 0.0));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    std::size_t pos = offset;
    for (std::size_t bin = 1; bin < cfg.fft_size() / 2; ++bin) {
        const std::size_t i = bin - 1;
        if (cfg.is_pilot(bin)) {
            out[i] = cplx(inv_sqrt2, inv_sqrt2);
            continue;
        }
        const int b = table.bits[i];
        if (b <= 0) continue;
        if (pos + static_cast<std::size_t>(b) > bits.size())
            throw std::out_of_range("map_frame_bits: bit stream exhausted");
        unsigned pattern = 0;
        for (int j = 0; j < b; ++j) pattern = (pattern << 1) | (bits[pos++] & 1u);
        out[i] = detail::constellation_for(b).map_bits(pattern) * std::sqrt(table.power[i]);
    }
    return out;
}

/// Modulate a payload bit stream into concatenated frames at dac_rate.
/// bits.size() must be an exact multiple of the table's bits per frame.
inline RealWaveform modulate(const std::vector<std::uint8_t>& bits,
                             const LoadingTable& table, const DmtConfig& cfg) {
    std::size_t per_frame = 0;
    for (int b : table.bits) per_frame += static_cast<std::size_t>(b > 0 ? b : 0);
    if (per_frame == 0) throw std::invalid_argument("modulate: empty loading table");
    if (bits.size() % per_frame != 0)
        throw std::invalid_argument("modulate: bits not a whole number of frames");
    const std::size_t n_frames = bits.size() / per_frame;
    RealWaveform wf;
    wf.sample_rate = cfg.dac_rate;
    wf.samples.reserve(n_frames * cfg.frame_samples());
    for (std::size_t f = 0; f < n_frames; ++f) {
        const auto frame =
            detail::frame_from_spectrum(map_frame_bits(bits, f * per_frame, table, cfg), cfg);
        wf.samples.insert(wf.samples.end(), frame.begin(), frame.end());
    }
    return wf;
}

/// Known preamble: one sync frame followed by n_training_frames of QPSK on
/// every data bin at unit power. Deterministic given the config.
struct TrainingBurst {
    RealWaveform waveform;
    std::vector<cplx> sync_bins;               ///< data-bin spectrum of the sync frame
    std::vector<std::vector<cplx>> symbols;    ///< per training frame, bins 1..n-1
};

inline TrainingBurst training_preamble(const DmtConfig& cfg) {
    TrainingBurst burst;
    burst.waveform.sample_rate = cfg.dac_rate;
    burst.waveform.samples.reserve((1 + cfg.n_training_frames) * cfg.frame_samples());
    burst.sync_bins = detail::sync_frame_bins(cfg);
    const auto sync_frame = detail::frame_from_spectrum(burst.sync_bins, cfg);
    burst.waveform.samples.insert(burst.waveform.samples.end(), sync_frame.begin(),
                                  sync_frame.end());
    RandomStream rs(detail::kTrainingSeed, 0);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    burst.symbols.resize(cfg.n_training_frames);
    for (std::size_t f = 0; f < cfg.n_training_frames; ++f) {
        auto& syms = burst.symbols[f];
        syms.resize(cfg.data_bin_count());
        for (auto& s : syms) {
            const double re = rs.uniform() < 0.5 ? -inv_sqrt2 : inv_sqrt2;
            const double im = rs.uniform() < 0.5 ? -inv_sqrt2 : inv_sqrt2;
            s = cplx(re, im);
        }
        const auto frame = detail::frame_from_spectrum(syms, cfg);
        burst.waveform.samples.insert(burst.waveform.samples.end(), frame.begin(),
                                      frame.end());
    }
    return burst;
}

/// Locate the sync frame. Coarse stage: the sync core repeats with period
/// fft/2, so the half-lag correlation normalized by both half energies
/// plateaus near 1 across the frame; candidates below `threshold` are
/// rejected. Fine stage: slide
/// the known clipped sync core over a window around the coarse peak and pick
/// the best normalized cross-correlation. Returns the index of the first CP
/// sample of the sync frame, or nullopt when no plateau clears the threshold.
inline std::optional<std::size_t> frame_sync(const RealWaveform& rx, const DmtConfig& cfg,
                                             double threshold = 0.5) {
    const std::size_t fft = cfg.fft_size();
    const std::size_t half = fft / 2;
    const std::size_t len = rx.samples.size();
    if (len < fft + 1) return std::nullopt;
    const auto& r = rx.samples;

    // Coarse scan with running sums. Normalizing by both half-window
    // energies keeps the metric inside [0, 1] (Cauchy-Schwarz), so windows
    // straddling the burst edge cannot outscore the true plateau when the
    // trailing half holds almost no energy.
    double p = 0.0, e1 = 0.0, e2 = 0.0;
    for (std::size_t m = 0; m < half; ++m) {
        p += r[m] * r[m + half];
        e1 += r[m] * r[m];
        e2 += r[m + half] * r[m + half];
    }
    double best_metric = -1.0;
    std::size_t best_d = 0;
    for (std::size_t d = 0;; ++d) {
        const double metric = (e1 > 0.0 && e2 > 0.0) ? (p * p) / (e1 * e2) : 0.0;
        if (metric > best_metric) {
            best_metric = metric;
            best_d = d;
        }
        if (d + fft >= len) break;
        p += r[d + half] * r[d + fft] - r[d] * r[d + half];
        e1 += r[d + half] * r[d + half] - r[d] * r[d];
        e2 += r[d + fft] * r[d + fft] - r[d + half] * r[d + half];
    }
    if (best_metric < threshold * threshold) return std::nullopt;

    // Fine refinement against the regenerated sync core.
    const auto sync_frame = detail::frame_from_spectrum(detail::sync_frame_bins(cfg), cfg);
    const std::vector<double> core(sync_frame.begin() + static_cast<std::ptrdiff_t>(cfg.cp_samples),
                                   sync_frame.end());
    double core_energy = 0.0;
    for (double v : core) core_energy += v * v;

    const std::ptrdiff_t guess = static_cast<std::ptrdiff_t>(best_d) +
                                 static_cast<std::ptrdiff_t>(cfg.cp_samples);
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, guess - 32);
    const std::ptrdiff_t hi =
        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(len) - static_cast<std::ptrdiff_t>(fft),
                                 guess + 32);
    if (hi < lo) return std::nullopt;
    double best_corr = -1.0;
    std::ptrdiff_t best_q = lo;
    for (std::ptrdiff_t q = lo; q <= hi; ++q) {
        double acc = 0.0, rx_energy = 0.0;
        for (std::size_t m = 0; m < fft; ++m) {
            const double v = r[static_cast<std::size_t>(q) + m];
            acc += v * core[m];
            rx_energy += v * v;
        }
        const double denom = std::sqrt(rx_energy * core_energy);
        const double c = (denom > 0.0) ? std::abs(acc) / denom : 0.0;
        if (c > best_corr) {
            best_corr = c;
            best_q = q;
        }
    }
    if (best_q < static_cast<std::ptrdiff_t>(cfg.cp_samples)) return std::nullopt;
    return static_cast<std::size_t>(best_q) - cfg.cp_samples;
}

/// FFT of one frame core beginning at core_start; returns bins 1..n-1.
inline std::vector<cplx> frame_spectrum(const RealWaveform& rx, std::size_t core_start,
                                        const DmtConfig& cfg) {
    const std::size_t fft = cfg.fft_size();
    if (core_start + fft > rx.samples.size())
        throw std::out_of_range("frame_spectrum: frame core exceeds waveform");
    std::vector<cplx> in(fft);
    for (std::size_t i = 0; i < fft; ++i) in[i] = cplx(rx.samples[core_start + i], 0.0);
    const auto spec = forward_transform(in);
    return std::vector<cplx>(spec.begin() + 1, spec.begin() + static_cast<std::ptrdiff_t>(fft / 2));
}

/// One-tap channel estimate per data bin with an SNR estimate from the
/// spread of per-frame ratios. Needs at least two training frames; noiseless
/// bins are capped at snr_cap.
struct ChannelEstimate {
    std::vector<cplx> response; ///< bins 1..n-1
    std::vector<double> snr;    ///< linear, same indexing
};

inline ChannelEstimate estimate_channel(const std::vector<std::vector<cplx>>& rx_frames,
                                        const std::vector<std::vector<cplx>>& tx_frames,
                                        double snr_cap = 1e12) {
    if (rx_frames.size() != tx_frames.size() || rx_frames.size() < 2)
        throw std::invalid_argument("estimate_channel: need >= 2 matched training frames");
    const std::size_t n = tx_frames.front().size();
    const std::size_t frames = tx_frames.size();
    ChannelEstimate est;
    est.response.assign(n, cplx(0.0, 0.0));
    est.snr.assign(n, 0.0);
    std::vector<cplx> ratio(frames);
    for (std::size_t k = 0; k < n; ++k) {
        cplx mean(0.0, 0.0);
        for (std::size_t f = 0; f < frames; ++f) {
            if (rx_frames[f].size() != n || tx_frames[f].size() != n)
                throw std::invalid_argument("estimate_channel: frame size mismatch");
            ratio[f] = rx_frames[f][k] / tx_frames[f][k];
            mean += ratio[f];
        }
        mean /= static_cast<double>(frames);
        double var = 0.0;
        for (std::size_t f = 0; f < frames; ++f) var += std::norm(ratio[f] - mean);
        var /= static_cast<double>(frames - 1);
        est.response[k] = mean;
        const double h2 = std::norm(mean);
        est.snr[k] = (var > 0.0) ? std::min(h2 / var, snr_cap) : snr_cap;
    }
    return est;
}

/// Equalize and hard-demap n_frames of payload starting at the first CP
/// sample `start`. Emits bits frame-major in the map_frame_bits carrier walk.
inline std::vector<std::uint8_t> demodulate(const RealWaveform& rx, std::size_t start,
                                            std::size_t n_frames, const LoadingTable& table,
                                            const ChannelEstimate& est, const DmtConfig& cfg) {
    if (table.bits.size() != cfg.data_bin_count())
        throw std::invalid_argument("demodulate: table size mismatch");
    if (est.response.size() != cfg.data_bin_count())
        throw std::invalid_argument("demodulate: estimate size mismatch");
    if (start + n_frames * cfg.frame_samples() > rx.samples.size())
        throw std::out_of_range("demodulate: waveform shorter than requested frames");
    std::size_t per_frame = 0;
    for (int b : table.bits) per_frame += static_cast<std::size_t>(b > 0 ? b : 0);
    std::vector<std::uint8_t> bits;
    bits.reserve(per_frame * n_frames);
    for (std::size_t f = 0; f < n_frames; ++f) {
        const std::size_t core = start + f * cfg.frame_samples() + cfg.cp_samples;
        const auto spec = frame_spectrum(rx, core, cfg);
        for (std::size_t bin = 1; bin < cfg.fft_size() / 2; ++bin) {
            const std::size_t i = bin - 1;
            if (cfg.is_pilot(bin)) continue;
            const int b = table.bits[i];
            if (b <= 0) continue;
            const cplx z = spec[i] / est.response[i] / std::sqrt(table.power[i]);
            const unsigned label = detail::constellation_for(b).demap_hard(z);
            for (int j = b - 1; j >= 0; --j)
                bits.push_back(static_cast<std::uint8_t>((label >> j) & 1u));
        }
    }
    return bits;
}

} // namespace dmtsim
