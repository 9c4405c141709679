// Modulator/demodulator frame mechanics: Hermitian framing, cyclic prefix,
// clipping, synchronization, channel estimation, and a noiseless loopback.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <dmtsim/dmt_config.hpp>
#include <dmtsim/modem.hpp>
#include <dmtsim/random.hpp>

using dmtsim::cplx;
using dmtsim::DmtConfig;

namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed) {
    dmtsim::RandomStream rs(seed, 0);
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rs.next_u64() & 1u);
    return bits;
}

dmtsim::LoadingTable uniform_table(const DmtConfig& cfg, int bits) {
    dmtsim::LoadingTable t;
    t.bits.assign(cfg.data_bin_count(), 0);
    t.power.assign(cfg.data_bin_count(), 0.0);
    for (std::size_t bin = 1; bin <= cfg.data_bin_count(); ++bin) {
        if (cfg.is_pilot(bin)) continue;
        t.bits[bin - 1] = bits;
        t.power[bin - 1] = 1.0;
    }
    return t;
}

std::size_t bits_per_frame(const dmtsim::LoadingTable& t) {
    std::size_t n = 0;
    for (int b : t.bits) n += static_cast<std::size_t>(b);
    return n;
}

} // namespace

TEST_CASE("frame geometry: 1040 samples, cyclic prefix repeats the tail") {
    const DmtConfig cfg;
    CHECK(cfg.frame_samples() == 1040);
    CHECK(cfg.full_rate_bits() == 2080);
    CHECK(cfg.half_rate_bits() == 1040);

    const auto table = uniform_table(cfg, 4);
    const auto bits = random_bits(bits_per_frame(table), 99);
    const auto wf = dmtsim::modulate(bits, table, cfg);
    REQUIRE(wf.samples.size() == 1040);
    CHECK(wf.sample_rate == 56e9);
    // CP = last cp_samples of the 1024-point core, prepended.
    for (std::size_t i = 0; i < cfg.cp_samples; ++i)
        CHECK(wf.samples[i] == wf.samples[i + cfg.fft_size()]);
}

TEST_CASE("modulate consumes whole frames only") {
    const DmtConfig cfg;
    const auto table = uniform_table(cfg, 4);
    const std::size_t per_frame = bits_per_frame(table);
    const auto wf = dmtsim::modulate(random_bits(2 * per_frame, 7), table, cfg);
    CHECK(wf.samples.size() == 2 * cfg.frame_samples());
    // A partial frame's worth of bits must be rejected, not silently padded.
    CHECK_THROWS_AS(dmtsim::modulate(random_bits(2 * per_frame + 1, 3), table, cfg),
                    std::invalid_argument);

    dmtsim::LoadingTable dark;
    dark.bits.assign(cfg.data_bin_count(), 0);
    dark.power.assign(cfg.data_bin_count(), 0.0);
    CHECK_THROWS_AS(dmtsim::modulate({}, dark, cfg), std::invalid_argument);
}

TEST_CASE("clipping bounds the crest factor without moving the RMS") {
    const DmtConfig cfg; // 12.5 dB: clipping is rare by design
    const auto table = uniform_table(cfg, 2);
    const auto bits = random_bits(8 * bits_per_frame(table), 5);
    const auto soft = dmtsim::modulate(bits, table, cfg);

    DmtConfig open = cfg;
    open.clipping_ratio_db = 200.0; // effectively no clipping
    const auto raw = dmtsim::modulate(bits, table, open);
    const double rms = std::sqrt(dmtsim::mean_power(raw.samples));
    CHECK(std::sqrt(dmtsim::mean_power(soft.samples)) == Catch::Approx(rms).epsilon(0.02));

    // A 6 dB ratio clips visibly; the peak must respect the limit. QPSK
    // frames all carry identical energy, so one burst-level RMS is the
    // per-frame reference up to the cyclic-prefix contribution.
    DmtConfig tight = cfg;
    tight.clipping_ratio_db = 6.0;
    const auto hard = dmtsim::modulate(bits, table, tight);
    const double limit = rms * std::pow(10.0, 6.0 / 20.0);
    double peak = 0.0;
    bool touched = false;
    for (std::size_t i = 0; i < hard.samples.size(); ++i) {
        peak = std::max(peak, std::abs(hard.samples[i]));
        if (std::abs(raw.samples[i]) > std::abs(hard.samples[i]) + 1e-9) touched = true;
    }
    CHECK(touched);
    CHECK(peak <= limit * 1.02);
}

TEST_CASE("map_frame_bits places pilots and MSB-first labels") {
    const DmtConfig cfg;
    auto table = uniform_table(cfg, 0);
    table.bits[3 - 1] = 2; // QPSK on bin 3 only
    table.power[3 - 1] = 4.0;

    std::vector<std::uint8_t> bits = {1, 0}; // label 0b10 = 2 -> (-a, +a)
    const auto spec = dmtsim::map_frame_bits(bits, 0, table, cfg);
    REQUIRE(spec.size() == cfg.data_bin_count());
    const double a = 1.0 / std::sqrt(2.0);
    CHECK(spec[3 - 1].real() == Catch::Approx(-2.0 * a).margin(1e-12)); // sqrt(4)=2
    CHECK(spec[3 - 1].imag() == Catch::Approx(2.0 * a).margin(1e-12));
    for (std::size_t bin : cfg.pilot_bins) {
        CHECK(spec[bin - 1].real() == Catch::Approx(a).margin(1e-12));
        CHECK(spec[bin - 1].imag() == Catch::Approx(a).margin(1e-12));
    }
    // Unloaded bins stay dark.
    CHECK(std::abs(spec[10 - 1]) == 0.0);

    // Exhausting the bit stream mid-frame throws.
    CHECK_THROWS_AS(dmtsim::map_frame_bits(bits, 1, table, cfg), std::out_of_range);
}

TEST_CASE("training preamble is deterministic with the documented shape") {
    const DmtConfig cfg;
    const auto a = dmtsim::training_preamble(cfg);
    const auto b = dmtsim::training_preamble(cfg);
    REQUIRE(a.waveform.samples.size() == (1 + cfg.n_training_frames) * cfg.frame_samples());
    CHECK(a.waveform.samples == b.waveform.samples);
    REQUIRE(a.symbols.size() == cfg.n_training_frames);

    // Sync frame uses even bins only; training frames load every data bin
    // with unit-energy QPSK.
    const double amp = 1.0 / std::sqrt(2.0);
    for (std::size_t bin = 1; bin <= cfg.data_bin_count(); ++bin) {
        const cplx s = a.sync_bins[bin - 1];
        if (bin % 2 == 0)
            CHECK(std::norm(s) == Catch::Approx(2.0).epsilon(1e-12));
        else
            CHECK(std::abs(s) == 0.0);
        for (const auto& frame : a.symbols) {
            CHECK(std::abs(frame[bin - 1].real()) == Catch::Approx(amp).epsilon(1e-12));
            CHECK(std::abs(frame[bin - 1].imag()) == Catch::Approx(amp).epsilon(1e-12));
        }
    }

    // Even-bins-only spectrum makes the sync core repeat at half a period.
    const std::size_t half = cfg.fft_size() / 2;
    for (std::size_t i = 0; i < half; ++i)
        CHECK(a.waveform.samples[cfg.cp_samples + i] ==
              Catch::Approx(a.waveform.samples[cfg.cp_samples + half + i]).margin(1e-9));
}

TEST_CASE("frame_sync finds the burst start in clean and noisy captures") {
    const DmtConfig cfg;
    const auto tp = dmtsim::training_preamble(cfg);

    dmtsim::RealWaveform rx;
    rx.sample_rate = cfg.dac_rate;
    rx.samples.assign(300, 0.0);
    rx.samples.insert(rx.samples.end(), tp.waveform.samples.begin(), tp.waveform.samples.end());
    rx.samples.insert(rx.samples.end(), 400, 0.0);

    const auto hit = dmtsim::frame_sync(rx, cfg);
    REQUIRE(hit.has_value());
    CHECK(*hit == 300);

    dmtsim::RandomStream noise(2024, 0);
    auto noisy = rx;
    for (auto& s : noisy.samples) s += noise.gaussian() * 0.05;
    const auto hit2 = dmtsim::frame_sync(noisy, cfg);
    REQUIRE(hit2.has_value());
    CHECK(std::abs(static_cast<long>(*hit2) - 300L) <= 2);

    dmtsim::RealWaveform junk;
    junk.sample_rate = cfg.dac_rate;
    junk.samples.resize(8192);
    for (auto& s : junk.samples) s = noise.gaussian();
    CHECK_FALSE(dmtsim::frame_sync(junk, cfg).has_value());

    dmtsim::RealWaveform shorty;
    shorty.sample_rate = cfg.dac_rate;
    shorty.samples.assign(500, 0.0);
    CHECK_FALSE(dmtsim::frame_sync(shorty, cfg).has_value());
}

TEST_CASE("estimate_channel recovers a synthetic response") {
    const DmtConfig cfg;
    const auto tp = dmtsim::training_preamble(cfg);
    const std::size_t nbins = cfg.data_bin_count();

    // Apply H(k) = 0.8 e^{j phi k} plus light noise in the frequency domain.
    std::vector<cplx> h(nbins);
    for (std::size_t k = 0; k < nbins; ++k)
        h[k] = 0.8 * std::exp(cplx(0.0, 0.002 * static_cast<double>(k + 1)));

    dmtsim::RandomStream noise(77, 0);
    const double sigma2 = 1e-4;
    std::vector<std::vector<cplx>> rx(tp.symbols.size());
    for (std::size_t f = 0; f < tp.symbols.size(); ++f) {
        rx[f].resize(nbins);
        for (std::size_t k = 0; k < nbins; ++k)
            rx[f][k] = tp.symbols[f][k] * h[k] + noise.complex_gaussian(sigma2 / 2.0);
    }
    const auto est = dmtsim::estimate_channel(rx, tp.symbols);
    REQUIRE(est.response.size() == nbins);
    REQUIRE(est.snr.size() == nbins);
    const double expected_snr = std::norm(h[0]) / sigma2; // 0.64 / 1e-4
    for (std::size_t k = 0; k < nbins; ++k) {
        CHECK(std::abs(est.response[k] - h[k]) < 0.05);
        CHECK(est.snr[k] > expected_snr * 0.3);
        CHECK(est.snr[k] < expected_snr * 3.0);
    }

    // Noiseless estimate saturates at the SNR cap.
    std::vector<std::vector<cplx>> clean(4, std::vector<cplx>(nbins));
    for (std::size_t f = 0; f < 4; ++f)
        for (std::size_t k = 0; k < nbins; ++k) clean[f][k] = tp.symbols[f][k] * h[k];
    const auto perfect = dmtsim::estimate_channel(
        clean, {tp.symbols.begin(), tp.symbols.begin() + 4});
    for (std::size_t k = 0; k < nbins; ++k) CHECK(perfect.snr[k] == 1e12);

    CHECK_THROWS_AS(dmtsim::estimate_channel({rx[0]}, {tp.symbols[0]}),
                    std::invalid_argument);
    CHECK_THROWS_AS(dmtsim::estimate_channel({rx[0], rx[1]}, {tp.symbols[0]}),
                    std::invalid_argument);
}

TEST_CASE("noiseless loopback is bit-exact") {
    const DmtConfig cfg;
    const auto table = uniform_table(cfg, 4);
    const std::size_t frames = 6;
    const auto tx_bits = random_bits(frames * bits_per_frame(table), 4242);
    const auto wf = dmtsim::modulate(tx_bits, table, cfg);

    dmtsim::ChannelEstimate flat;
    flat.response.assign(cfg.data_bin_count(), cplx(1.0, 0.0));
    flat.snr.assign(cfg.data_bin_count(), 1e12);

    const auto rx_bits = dmtsim::demodulate(wf, 0, frames, table, flat, cfg);
    REQUIRE(rx_bits.size() == tx_bits.size());
    CHECK(rx_bits == tx_bits);

    // Mixed-order table (0..8 bits, uneven powers) stays bit-exact too.
    auto mixed = uniform_table(cfg, 0);
    dmtsim::RandomStream rs(11, 0);
    for (std::size_t bin = 1; bin <= cfg.data_bin_count(); ++bin) {
        if (cfg.is_pilot(bin)) continue;
        mixed.bits[bin - 1] = static_cast<int>(rs.next_u64() % 9);
        mixed.power[bin - 1] = mixed.bits[bin - 1] ? 0.5 + rs.uniform() : 0.0;
    }
    const auto tx2 = random_bits(3 * bits_per_frame(mixed), 86);
    const auto wf2 = dmtsim::modulate(tx2, mixed, cfg);
    const auto rx2 = dmtsim::demodulate(wf2, 0, 3, mixed, flat, cfg);
    CHECK(rx2 == tx2);

    // Asking for more samples than the capture holds throws.
    CHECK_THROWS_AS(dmtsim::demodulate(wf, 1, frames, table, flat, cfg),
                    std::out_of_range);
}
