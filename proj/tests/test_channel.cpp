// Optical link blocks: Bessel electrical filters, MZM transfer, dispersive
// fiber, super-Gaussian optical filtering, ASE loading, photodetection.
//
// Numerical anchors (dispersion nulls, filter attenuations) were frozen from
// closed-form evaluation: a chirp-free double-sideband tone at offset f fades
// as |cos(pi lambda^2 D f^2 / c)| after accumulated dispersion D, giving a
// first null at 19.156081 GHz for 170 ps/nm and 9.578040 GHz for 680 ps/nm
// at 193.4 THz.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include <dmtsim/channel.hpp>
#include <dmtsim/random.hpp>
#include <dmtsim/spectral.hpp>

using dmtsim::cplx;
using dmtsim::ComplexEnvelope;
using dmtsim::LinkConfig;
using dmtsim::RealWaveform;

namespace {

constexpr double kRate = 224e9;
constexpr std::size_t kN = 32768;

double bin_freq(std::size_t k) { return static_cast<double>(k) * kRate / kN; }

// Carrier plus AM sidebands at bin k: E = 1 + a cos(2 pi f t).
ComplexEnvelope am_probe(std::size_t k, double a, double center) {
    ComplexEnvelope e;
    e.sample_rate = kRate;
    e.center_frequency = center;
    e.samples.resize(kN);
    for (std::size_t n = 0; n < kN; ++n) {
        const double t = static_cast<double>(n) / kRate;
        e.samples[n] = 1.0 + a * std::cos(2.0 * M_PI * bin_freq(k) * t);
    }
    return e;
}

// Tone amplitude at bin k of a length-n real sequence.
double tone_amplitude(const std::vector<double>& x, std::size_t k) {
    cplx acc(0.0, 0.0);
    const double w = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(x.size());
    for (std::size_t n = 0; n < x.size(); ++n)
        acc += x[n] * std::exp(cplx(0.0, w * static_cast<double>(n)));
    return 2.0 * std::abs(acc) / static_cast<double>(x.size());
}

double intensity_tone(const ComplexEnvelope& e, std::size_t k) {
    std::vector<double> intensity(e.samples.size());
    for (std::size_t n = 0; n < e.samples.size(); ++n)
        intensity[n] = std::norm(e.samples[n]);
    return tone_amplitude(intensity, k);
}

double expected_fade(double d_s_per_m, double f_hz, double center_hz) {
    const double lambda = dmtsim::kSpeedOfLight / center_hz;
    return std::abs(std::cos(M_PI * lambda * lambda * d_s_per_m * f_hz * f_hz /
                             dmtsim::kSpeedOfLight));
}

} // namespace

TEST_CASE("fifth-order Bessel magnitude anchors") {
    using dmtsim::detail::bessel5_magnitude;
    CHECK(bessel5_magnitude(0.0) == 1.0);
    CHECK(bessel5_magnitude(dmtsim::detail::kBessel5X3db) ==
          Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    double prev = 1.0;
    for (double x = 0.1; x < 12.0; x += 0.1) {
        const double m = bessel5_magnitude(x);
        CHECK(m < prev);
        prev = m;
    }
}

TEST_CASE("electrical_lowpass is zero-phase with the Bessel magnitude") {
    RealWaveform wf;
    wf.sample_rate = 56e9;
    wf.samples.resize(4096);
    const std::size_t k = 731; // ~9.99 GHz
    const double f = static_cast<double>(k) * wf.sample_rate / 4096.0;
    for (std::size_t n = 0; n < wf.samples.size(); ++n)
        wf.samples[n] = 0.25 +
                        std::cos(2.0 * M_PI * f * static_cast<double>(n) / wf.sample_rate);
    const auto out = dmtsim::electrical_lowpass(wf, 27e9);
    REQUIRE(out.samples.size() == wf.samples.size());

    const double gain =
        dmtsim::detail::bessel5_magnitude(dmtsim::detail::kBessel5X3db * f / 27e9);
    // Zero-phase: the output is the DC term plus the same cosine, scaled.
    for (std::size_t n = 0; n < out.samples.size(); ++n) {
        const double want = 0.25 + gain * std::cos(2.0 * M_PI * f *
                                                   static_cast<double>(n) / wf.sample_rate);
        CHECK(out.samples[n] == Catch::Approx(want).margin(1e-9));
    }
}

TEST_CASE("MZM at quadrature: bias point, null, odd-only harmonics") {
    LinkConfig link;
    RealWaveform drive;
    drive.sample_rate = kRate;

    drive.samples.assign(64, 0.0);
    auto quiet = dmtsim::mzm_modulate(drive, link);
    CHECK(quiet.center_frequency == Catch::Approx(193.4e12));
    for (const auto& s : quiet.samples) {
        CHECK(s.real() == Catch::Approx(std::sqrt(0.5)).epsilon(1e-12));
        CHECK(s.imag() == 0.0);
    }

    drive.samples.assign(64, 0.5); // V_pi/2 above quadrature: transmission null
    auto dark = dmtsim::mzm_modulate(drive, link);
    for (const auto& s : dark.samples) CHECK(std::abs(s) < 1e-12);

    LinkConfig shifted = link;
    shifted.laser_offset_ghz = -33.0;
    auto off = dmtsim::mzm_modulate(drive, shifted);
    CHECK(off.center_frequency == Catch::Approx(193.4e12 - 33e9));

    // Sinusoidal drive at quadrature: intensity carries odd harmonics only.
    const std::size_t k = 512;
    drive.samples.resize(kN);
    for (std::size_t n = 0; n < kN; ++n)
        drive.samples[n] =
            0.3 * std::sin(2.0 * M_PI * bin_freq(k) * static_cast<double>(n) / kRate);
    const auto mod = dmtsim::mzm_modulate(drive, link);
    std::vector<double> intensity(kN);
    for (std::size_t n = 0; n < kN; ++n) intensity[n] = std::norm(mod.samples[n]);
    const double h1 = tone_amplitude(intensity, k);
    const double h2 = tone_amplitude(intensity, 2 * k);
    const double h3 = tone_amplitude(intensity, 3 * k);
    CHECK(h1 > 0.3);                  // ~J1(0.3 pi)
    CHECK(h2 < 1e-10 * h1);           // even harmonics cancel at quadrature
    CHECK(h3 / h1 == Catch::Approx(0.0389).margin(0.008)); // ~J3/J1
}

TEST_CASE("fiber: unitary, identity at zero dispersion, correct fading") {
    LinkConfig link;
    link.span_km = 10.0;

    auto probe = am_probe(1401, 0.02, 193.4e12); // ~9.578 GHz
    const double e_in = dmtsim::total_energy(probe.samples);
    const auto out = dmtsim::fiber_propagate(probe, link);
    CHECK(dmtsim::total_energy(out.samples) == Catch::Approx(e_in).epsilon(1e-12));

    LinkConfig b2b;
    b2b.span_km = 0.0;
    const auto same = dmtsim::fiber_propagate(probe, b2b);
    for (std::size_t n = 0; n < kN; ++n)
        CHECK(std::abs(same.samples[n] - probe.samples[n]) < 1e-9);
}

TEST_CASE("double-sideband fading matches the quadratic-phase model") {
    const double d10 = 10.0 * 17.0 * 1e-3; // 170 ps/nm in s/m
    LinkConfig link;
    link.span_km = 10.0;

    // Sweep a few probe bins including the cos(pi/8) anchor near 9.578 GHz.
    for (std::size_t k : {700u, 1401u, 2000u, 2500u}) {
        auto p = am_probe(k, 0.01, 193.4e12);
        const double ref = intensity_tone(p, k);
        const auto out = dmtsim::fiber_propagate(p, link);
        const double faded = intensity_tone(out, k);
        const double want = expected_fade(d10, bin_freq(k), 193.4e12);
        INFO("k=" << k << " f=" << bin_freq(k) / 1e9 << " GHz");
        CHECK(faded / ref == Catch::Approx(want).margin(2e-4));
    }
    // cos(pi/8) sanity at ~9.578 GHz.
    CHECK(expected_fade(d10, 9.578040e9, 193.4e12) ==
          Catch::Approx(std::cos(M_PI / 8.0)).epsilon(1e-4));

    // Deep null near 19.156 GHz: tone suppressed by >35 dB.
    {
        auto p = am_probe(2802, 0.01, 193.4e12);
        const double ref = intensity_tone(p, 2802);
        const auto out = dmtsim::fiber_propagate(p, link);
        CHECK(intensity_tone(out, 2802) / ref < std::pow(10.0, -35.0 / 20.0));
    }

    // 40 km: first null falls to ~9.578 GHz.
    {
        LinkConfig far;
        far.span_km = 40.0;
        auto p = am_probe(1401, 0.01, 193.4e12);
        const double ref = intensity_tone(p, 1401);
        const auto out = dmtsim::fiber_propagate(p, far);
        CHECK(intensity_tone(out, 1401) / ref < std::pow(10.0, -30.0 / 20.0));
        // ...and dispersion compensation undoes it.
        LinkConfig comp = far;
        comp.dcf_total_ps_nm = -40.0 * 17.0;
        const auto fixed = dmtsim::fiber_propagate(p, comp);
        CHECK(intensity_tone(fixed, 1401) / ref == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("single-sideband probes do not fade under dispersion") {
    LinkConfig link;
    link.span_km = 40.0;
    const std::size_t k = 1401; // DSB null frequency for this span

    ComplexEnvelope ssb;
    ssb.sample_rate = kRate;
    ssb.center_frequency = 193.4e12;
    ssb.samples.resize(kN);
    for (std::size_t n = 0; n < kN; ++n) {
        const double ph = 2.0 * M_PI * bin_freq(k) * static_cast<double>(n) / kRate;
        ssb.samples[n] = 1.0 + 0.01 * std::exp(cplx(0.0, ph));
    }
    const double ref = intensity_tone(ssb, k);
    const auto out = dmtsim::fiber_propagate(ssb, link);
    CHECK(intensity_tone(out, k) / ref == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("super-Gaussian filter attenuation anchors") {
    using dmtsim::detail::super_gaussian_field;
    const auto power_db = [](double field) { return -20.0 * std::log10(field); };
    CHECK(power_db(super_gaussian_field(31.5e9, 63e9, 3)) ==
          Catch::Approx(3.010300).epsilon(1e-6));
    CHECK(power_db(super_gaussian_field(33e9, 63e9, 3)) ==
          Catch::Approx(3.979514).epsilon(1e-6));
    CHECK(power_db(super_gaussian_field(53e9, 63e9, 3)) ==
          Catch::Approx(68.297006).epsilon(1e-6));
    CHECK(super_gaussian_field(0.0, 63e9, 3) == 1.0);
}

TEST_CASE("optical_filter acts on absolute frequency") {
    LinkConfig link; // filter centred at 193.4 THz, 63 GHz FWHM, order 3

    // Envelope centred 33 GHz below the filter: the carrier itself sees the
    // VSB edge attenuation.
    ComplexEnvelope e;
    e.sample_rate = kRate;
    e.center_frequency = 193.4e12 - 33e9;
    e.samples.assign(kN, cplx(1.0, 0.0));
    const auto out = dmtsim::optical_filter(e, link);
    const double want = dmtsim::detail::super_gaussian_field(33e9, 63e9, 3);
    for (std::size_t n = 0; n < 8; ++n)
        CHECK(std::abs(out.samples[n]) == Catch::Approx(want).epsilon(1e-9));

    // Centred envelope: carrier passes untouched, a 20 GHz tone is shaped.
    auto probe = am_probe(2926, 0.01, 193.4e12); // ~20.005 GHz
    const auto shaped = dmtsim::optical_filter(probe, link);
    std::vector<double> re(kN);
    for (std::size_t n = 0; n < kN; ++n) re[n] = shaped.samples[n].real();
    const double g = dmtsim::detail::super_gaussian_field(bin_freq(2926), 63e9, 3);
    CHECK(tone_amplitude(re, 2926) == Catch::Approx(0.01 * g).epsilon(1e-6));
}

TEST_CASE("load_ase hits the requested OSNR") {
    ComplexEnvelope sig;
    sig.sample_rate = kRate;
    sig.center_frequency = 193.4e12;
    sig.samples.resize(65536);
    for (std::size_t n = 0; n < sig.samples.size(); ++n) {
        const double t = static_cast<double>(n) / kRate;
        sig.samples[n] = 0.8 + 0.05 * std::cos(2.0 * M_PI * 7e9 * t);
    }
    const double p_sig = dmtsim::mean_power(sig.samples);

    for (double osnr : {20.0, 35.0, 50.0}) {
        dmtsim::RandomStream noise(999, static_cast<std::uint64_t>(osnr));
        const auto noisy = dmtsim::load_ase(sig, osnr, noise);
        double p_noise = 0.0;
        for (std::size_t n = 0; n < sig.samples.size(); ++n)
            p_noise += std::norm(noisy.samples[n] - sig.samples[n]);
        p_noise /= static_cast<double>(sig.samples.size());
        const double n0 = p_noise / sig.sample_rate;
        const double osnr_meas =
            10.0 * std::log10(p_sig / (n0 * dmtsim::kOsnrRefBandwidthHz));
        CHECK(osnr_meas == Catch::Approx(osnr).margin(0.1));
    }

    dmtsim::RandomStream unused(1, 0);
    const auto clean =
        dmtsim::load_ase(sig, std::numeric_limits<double>::infinity(), unused);
    CHECK(clean.samples == sig.samples);
    CHECK_THROWS_AS(dmtsim::load_ase(sig, std::numeric_limits<double>::quiet_NaN(), unused),
                    std::invalid_argument);
}

TEST_CASE("photodetect squares, filters, decimates, and strips DC") {
    LinkConfig link;

    ComplexEnvelope flat;
    flat.sample_rate = kRate;
    flat.center_frequency = 193.4e12;
    flat.samples.assign(4096, cplx(0.7, 0.0));
    const auto dark = dmtsim::photodetect(flat, link, 56e9);
    REQUIRE(dark.samples.size() == 1024);
    CHECK(dark.sample_rate == 56e9);
    for (double s : dark.samples) CHECK(std::abs(s) < 1e-12);

    // Carrier + SSB tone: intensity beat of 2*0.1 at ~10 GHz, shaped by the
    // 30 GHz receiver lowpass.
    const std::size_t k = 1463;
    ComplexEnvelope two;
    two.sample_rate = kRate;
    two.center_frequency = 193.4e12;
    two.samples.resize(kN);
    for (std::size_t n = 0; n < kN; ++n) {
        const double ph = 2.0 * M_PI * bin_freq(k) * static_cast<double>(n) / kRate;
        two.samples[n] = 1.0 + 0.1 * std::exp(cplx(0.0, ph));
    }
    const auto det = dmtsim::photodetect(two, link, 56e9);
    REQUIRE(det.samples.size() == kN / 4);
    const double g =
        dmtsim::detail::bessel5_magnitude(dmtsim::detail::kBessel5X3db * bin_freq(k) / 30e9);
    CHECK(tone_amplitude(det.samples, k) == Catch::Approx(0.2 * g).epsilon(1e-3));
}

TEST_CASE("run_link is deterministic and shape-preserving") {
    LinkConfig link;
    link.span_km = 10.0;

    dmtsim::RandomStream data(5150, 0);
    RealWaveform tx;
    tx.sample_rate = 56e9;
    tx.samples.resize(4160); // divisible by 4 for the 4x oversampling
    for (auto& s : tx.samples) s = data.gaussian();

    dmtsim::RandomStream n1(42, 7), n2(42, 7), n3(43, 7);
    const auto a = dmtsim::run_link(tx, link, 30.0, n1);
    const auto b = dmtsim::run_link(tx, link, 30.0, n2);
    const auto c = dmtsim::run_link(tx, link, 30.0, n3);
    REQUIRE(a.samples.size() == tx.samples.size());
    CHECK(a.sample_rate == 56e9);
    CHECK(a.samples == b.samples);   // bitwise reproducible
    CHECK(a.samples != c.samples);   // noise seed matters

    dmtsim::RandomStream n4(42, 7);
    const auto quiet =
        dmtsim::run_link(tx, link, std::numeric_limits<double>::infinity(), n4);
    // Mean is removed, and the chain is linear enough to keep energy finite.
    double acc = 0.0;
    for (double s : quiet.samples) acc += s;
    CHECK(std::abs(acc / static_cast<double>(quiet.samples.size())) < 1e-12);
}
