#pragma once
// Scenario execution. One sweep point = train, sync, estimate, load, then
// pump random payload frames through the link until the error target or the
// frame cap is hit. Sweep points are independent and may run concurrently;
// every random draw comes from a stream keyed by (seed, point index, use),
// so results are bit-identical at any parallelism degree. Channel filtering
// is circular per burst, so bursts carry zero guard pads at both ends.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "channel.hpp"
#include "dmt_config.hpp"
#include "loading.hpp"
#include "metrics.hpp"
#include "modem.hpp"
#include "scenario.hpp"

namespace dmtsim {

enum class PointOutcome { ok, sync_failed, loading_infeasible };

inline const char* to_string(PointOutcome o) {
    switch (o) {
        case PointOutcome::ok: return "ok";
        case PointOutcome::sync_failed: return "sync-failed";
        default: return "loading-infeasible";
    }
}

/// Everything measured at one sweep point. wall_time_s is informational and
/// never reaches the emitted datasets.
struct RunRecord {
    std::string scenario;
    double osnr_db = 0.0;
    RateSelection rate = RateSelection::none;
    LoadingTable table; ///< bin space; all-zero on terminal outcomes
    SnrProfile snr;     ///< measured, bin space
    BerStats stats;
    double wall_time_s = 0.0;
    PointOutcome outcome = PointOutcome::ok;
    double full_margin_linear = 0.0;
    double half_margin_linear = 0.0;
    double rate_gbps = 0.0;
};

namespace detail {

inline constexpr std::size_t kGuardSamples = 512;   // absorbs circular-filter wrap
inline constexpr std::uint64_t kStreamsPerPoint = 4;
inline constexpr std::size_t kChunkFrames = 64;     // frames per channel burst

/// Smallest 7-smooth integer >= n (keeps every channel-block FFT on fast
/// mixed-radix paths; burst lengths are arbitrary otherwise).
inline std::size_t next_smooth(std::size_t n) {
    for (std::size_t m = n;; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

/// Zero padding: kGuardSamples ahead of the burst, and a tail that brings the
/// total length to a 7-smooth number (at least kGuardSamples of tail).
inline RealWaveform with_guards(const RealWaveform& wf, std::size_t guard) {
    RealWaveform out;
    out.sample_rate = wf.sample_rate;
    const std::size_t total = next_smooth(wf.samples.size() + 2 * guard);
    out.samples.reserve(total);
    out.samples.assign(guard, 0.0);
    out.samples.insert(out.samples.end(), wf.samples.begin(), wf.samples.end());
    out.samples.insert(out.samples.end(), total - guard - wf.samples.size(), 0.0);
    return out;
}

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

} // namespace detail

/// One sweep point with an explicit random-stream base (streams
/// [base, base + kStreamsPerPoint) belong to this point).
inline RunRecord run_point_streams(const Scenario& s, double osnr_db,
                                   std::uint64_t stream_base) {
    const auto t0 = std::chrono::steady_clock::now();
    const DmtConfig& cfg = s.dmt;
    const GapModel gap(s.target_ber, s.margin_db);

    RunRecord rec;
    rec.scenario = s.name;
    rec.osnr_db = osnr_db;
    rec.table.bits.assign(cfg.data_bin_count(), 0);
    rec.table.power.assign(cfg.data_bin_count(), 0.0);
    rec.snr.snr.assign(cfg.data_bin_count(), 0.0);
    const auto finish = [&]() {
        rec.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return rec;
    };

    RandomStream training_noise(s.seed, stream_base + 0);
    RandomStream payload_noise(s.seed, stream_base + 1);
    RandomStream payload_bits(s.seed, stream_base + 2);

    // Training phase: sync + channel/SNR estimation.
    const TrainingBurst tb = training_preamble(cfg);
    const RealWaveform rx_train = run_link(
        detail::with_guards(tb.waveform, detail::kGuardSamples), s.link, osnr_db,
        training_noise);
    const auto sync = frame_sync(rx_train, cfg);
    if (!sync) {
        rec.outcome = PointOutcome::sync_failed;
        return finish();
    }
    // The whole chain is zero-phase, so a correct lock sits at the guard
    // boundary give or take a few samples. Anything further out is a false
    // lock and would overrun the burst buffers downstream.
    const std::ptrdiff_t delta = static_cast<std::ptrdiff_t>(*sync) -
                                 static_cast<std::ptrdiff_t>(detail::kGuardSamples);
    if (delta < -64 || delta > 64) {
        rec.outcome = PointOutcome::sync_failed;
        return finish();
    }

    std::vector<std::vector<cplx>> rx_frames(cfg.n_training_frames);
    for (std::size_t f = 0; f < cfg.n_training_frames; ++f) {
        const std::size_t core = *sync + (1 + f) * cfg.frame_samples() + cfg.cp_samples;
        rx_frames[f] = frame_spectrum(rx_train, core, cfg);
    }
    const ChannelEstimate est = estimate_channel(rx_frames, tb.symbols);
    rec.snr.snr = est.snr;

    // Loading per point ("the chip adapts per link condition").
    const LoadingResult full = load_rate(rec.snr, cfg.full_rate_bits(), gap, cfg);
    const LoadingResult half = load_rate(rec.snr, cfg.half_rate_bits(), gap, cfg);
    rec.full_margin_linear = full.margin_linear;
    rec.half_margin_linear = half.margin_linear;
    const LoadingResult* chosen = nullptr;
    switch (s.rate_policy) {
        case RatePolicy::fixed_full:
            chosen = &full;
            rec.rate = RateSelection::full;
            break;
        case RatePolicy::fixed_half:
            chosen = &half;
            rec.rate = RateSelection::half;
            break;
        case RatePolicy::auto_fallback:
            if (full.feasible && full.margin_linear >= 1.0) {
                chosen = &full;
                rec.rate = RateSelection::full;
            } else if (half.feasible && half.margin_linear >= 1.0) {
                chosen = &half;
                rec.rate = RateSelection::half;
            }
            break;
    }
    std::size_t per_frame = 0;
    if (chosen)
        for (int b : chosen->table.bits) per_frame += static_cast<std::size_t>(b > 0 ? b : 0);
    if (!chosen || per_frame == 0) {
        rec.rate = RateSelection::none;
        rec.outcome = PointOutcome::loading_infeasible;
        return finish();
    }
    rec.table = chosen->table;
    rec.rate_gbps = static_cast<double>(per_frame) * cfg.symbol_rate() / 1e9;

    // Payload sweep in chunked bursts; noise/bit streams continue across
    // chunks so chunking never changes the data.
    std::size_t frames_done = 0;
    while (frames_done < s.payload_frames) {
        const std::size_t chunk =
            std::min<std::size_t>(detail::kChunkFrames, s.payload_frames - frames_done);
        std::vector<std::uint8_t> bits(chunk * per_frame);
        for (auto& b : bits) b = static_cast<std::uint8_t>(payload_bits.next_u64() & 1u);
        const RealWaveform rx =
            run_link(detail::with_guards(modulate(bits, rec.table, cfg), detail::kGuardSamples),
                     s.link, osnr_db, payload_noise);
        const std::size_t start =
            static_cast<std::size_t>(static_cast<std::ptrdiff_t>(detail::kGuardSamples) + delta);
        const auto rx_bits = demodulate(rx, start, chunk, rec.table, est, cfg);
        rec.stats.merge(count_ber(bits, rx_bits, rec.table, cfg));
        frames_done += chunk;
        if (rec.stats.bit_errors >= s.min_bit_errors) break;
    }
    return finish();
}

/// Public single-point entry: stream ids derive from the point's position in
/// the scenario sweep (an off-sweep OSNR gets the slot past the end).
inline RunRecord run_point(const Scenario& s, double osnr_db) {
    std::uint64_t index = s.osnr_sweep_db.size();
    for (std::size_t i = 0; i < s.osnr_sweep_db.size(); ++i)
        if (s.osnr_sweep_db[i] == osnr_db) {
            index = i;
            break;
        }
    return run_point_streams(s, osnr_db, index * detail::kStreamsPerPoint);
}

struct ScenarioResult {
    Scenario scenario;
    std::vector<RunRecord> records; ///< ordered by OSNR ascending
    std::optional<double> required_osnr_db;
    RateSelection selected_rate = RateSelection::none;
};

/// Run every sweep point (concurrently when jobs > 1), assemble the BER
/// curve, and read off the required OSNR at the scenario's FEC limit.
inline ScenarioResult run_scenario(const Scenario& s, unsigned jobs = 1) {
    s.validate();
    ScenarioResult result;
    result.scenario = s;
    result.records.resize(s.osnr_sweep_db.size());

    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(s.osnr_sweep_db.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= s.osnr_sweep_db.size()) return;
            result.records[i] = run_point_streams(s, s.osnr_sweep_db[i],
                                                  static_cast<std::uint64_t>(i) *
                                                      detail::kStreamsPerPoint);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    OsnrCurve curve;
    for (const auto& rec : result.records) {
        if (rec.outcome != PointOutcome::ok || rec.stats.total_bits == 0) continue;
        curve.osnr_db.push_back(rec.osnr_db);
        curve.ber.push_back(rec.stats.ber());
    }
    if (!curve.osnr_db.empty()) result.required_osnr_db = required_osnr(curve, s.target_ber);
    result.selected_rate = result.records.back().rate;
    return result;
}

/// Write the three datasets. Numeric formatting is pinned to snprintf with
/// fixed precision so identical runs produce byte-identical files.
/// ber_vs_osnr lists every point that carried payload; snr_profile describes
/// the highest-OSNR completed point of each scenario (pilot bins appear with
/// bits = 0 at their fixed unit power).
inline void emit_outputs(const std::vector<ScenarioResult>& results,
                         const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto open = [&](const char* fname) {
        std::ofstream f(out_dir / fname, std::ios::binary);
        if (!f) throw std::runtime_error(std::string("cannot write ") + fname);
        return f;
    };

    auto ber_csv = open("ber_vs_osnr.csv");
    ber_csv << "scenario,osnr_db,ber,total_bits,rate_gbps\n";
    for (const auto& res : results) {
        for (const auto& rec : res.records) {
            if (rec.outcome != PointOutcome::ok || rec.stats.total_bits == 0) continue;
            ber_csv << rec.scenario << ',' << detail::fmt("%.2f", rec.osnr_db) << ','
                    << detail::fmt("%.6e", rec.stats.ber()) << ',' << rec.stats.total_bits
                    << ',' << detail::fmt("%.3f", rec.rate_gbps) << '\n';
        }
    }

    auto snr_csv = open("snr_profile.csv");
    snr_csv << "scenario,subcarrier_index,frequency_ghz,snr_db,bits,power\n";
    for (const auto& res : results) {
        const RunRecord* best = nullptr;
        for (const auto& rec : res.records)
            if (rec.outcome == PointOutcome::ok) best = &rec;
        if (!best) continue;
        const DmtConfig& cfg = res.scenario.dmt;
        for (std::size_t bin = 1; bin < cfg.fft_size() / 2; ++bin) {
            const std::size_t i = bin - 1;
            const bool pilot = cfg.is_pilot(bin);
            const double snr_db = 10.0 * std::log10(std::max(best->snr.snr[i], 1e-12));
            snr_csv << best->scenario << ',' << bin << ','
                    << detail::fmt("%.6f", cfg.bin_frequency_hz(bin) / 1e9) << ','
                    << detail::fmt("%.3f", snr_db) << ','
                    << (pilot ? 0 : best->table.bits[i]) << ','
                    << detail::fmt("%.6f", pilot ? 1.0 : best->table.power[i]) << '\n';
        }
    }

    auto summary_csv = open("summary.csv");
    summary_csv << "scenario,required_osnr_db,selected_rate\n";
    for (const auto& res : results) {
        summary_csv << res.scenario.name << ',';
        if (res.required_osnr_db) summary_csv << detail::fmt("%.3f", *res.required_osnr_db);
        summary_csv << ',' << to_string(res.selected_rate) << '\n';
    }
}

} // namespace dmtsim
