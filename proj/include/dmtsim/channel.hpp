#pragma once
// Intensity-modulation / direct-detection optical link.
//
// The transmit waveform drives a quadrature-biased Mach-Zehnder modulator
// whose field output rides on a laser that may be detuned from the mux/demux
// filter grid (vestigial-sideband operation). Propagation applies chromatic
// dispersion as an all-pass quadratic phase; amplifier noise is loaded as
// complex AWGN at a prescribed OSNR after the demux filter; detection is
// an ideal square-law photodiode followed by a receiver lowpass. Electrical
// filters use fifth-order Bessel magnitude responses applied with zero phase
// (delay-equalized drivers). All block filtering is circular, so callers
// should pad bursts with guard samples.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "random.hpp"
#include "resample.hpp"
#include "spectral.hpp"
#include "waveform.hpp"

namespace dmtsim {

inline constexpr double kSpeedOfLight = 299792458.0;      // m/s
inline constexpr double kOsnrRefBandwidthHz = 12.5e9;     // 0.1 nm at 1550 nm

struct LinkConfig {
    double span_km = 0.0;
    double dispersion_ps_nm_km = 17.0;
    double dcf_total_ps_nm = 0.0;     ///< compensation added to span dispersion (<= 0)
    double laser_freq_thz = 193.4;
    double laser_offset_ghz = 0.0;    ///< laser detuning from the nominal grid slot
    double filter_center_thz = 193.4; ///< mux/demux passband center
    double filter_fwhm_ghz = 63.0;
    int filter_order = 3;             ///< super-Gaussian order
    bool include_tx_filter = false;   ///< traverse a mux filter at the transmitter too
    double tx_bw_ghz = 27.0;          ///< driver/DAC lowpass, 3 dB
    double rx_bw_ghz = 30.0;          ///< PIN/TIA lowpass, 3 dB
    double vpi_volts = 1.0;
    double bias_fraction = 0.5;       ///< bias point in units of Vpi (0.5 = quadrature)
    double modulation_index = 0.06;   ///< drive volts per unit waveform amplitude, in Vpi
    int oversample = 4;               ///< analog-domain oversampling factor
};

namespace detail {

/// |H(jx)| of a 5th-order Bessel lowpass with x in normalized radian
/// frequency (x = kBessel5X3db at the 3 dB point).
inline double bessel5_magnitude(double x) {
    const double x2 = x * x;
    const double re = (15.0 * x2 - 420.0) * x2 + 945.0;
    const double im = x * ((x2 - 105.0) * x2 + 945.0);
    return 945.0 / std::hypot(re, im);
}

inline constexpr double kBessel5X3db = 2.427410702153;

/// Field transmission of a super-Gaussian filter at offset df from center.
inline double super_gaussian_field(double df_hz, double fwhm_hz, int order) {
    const double u = 2.0 * df_hz / fwhm_hz;
    const double p = std::pow(u * u, order);
    return std::exp(-0.5 * M_LN2 * p);
}

/// Multiply the spectrum of a complex block by response(f). Circular.
template <typename Fn>
inline void apply_response(std::vector<cplx>& samples, double rate, Fn&& response) {
    if (samples.empty()) return;
    auto spec = fft_raw(samples);
    const std::size_t n = spec.size();
    for (std::size_t k = 0; k < n; ++k) spec[k] *= response(bin_frequency(k, n, rate));
    const auto out = ifft_raw(spec);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) samples[i] = out[i] * scale;
}

/// Same for a real block with an even magnitude response.
template <typename Fn>
inline void apply_response_real(std::vector<double>& samples, double rate, Fn&& response) {
    if (samples.empty()) return;
    std::vector<cplx> x(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) x[i] = cplx(samples[i], 0.0);
    apply_response(x, rate, response);
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = x[i].real();
}

} // namespace detail

/// Zero-phase 5th-order Bessel lowpass (magnitude response only).
inline RealWaveform electrical_lowpass(RealWaveform wf, double bw_3db_hz) {
    if (!(bw_3db_hz > 0.0)) throw std::invalid_argument("electrical_lowpass: bandwidth must be > 0");
    detail::apply_response_real(wf.samples, wf.sample_rate, [&](double f) {
        return detail::bessel5_magnitude(detail::kBessel5X3db * std::abs(f) / bw_3db_hz);
    });
    return wf;
}

/// Drive a quadrature-biased MZM with a voltage waveform. Field output
/// E = cos((pi/2) * (v/Vpi + bias)); intensity follows the raised-sine curve
/// with no even-order distortion at quadrature.
inline ComplexEnvelope mzm_modulate(const RealWaveform& drive_volts, const LinkConfig& link) {
    if (!(link.vpi_volts > 0.0)) throw std::invalid_argument("mzm_modulate: Vpi must be > 0");
    ComplexEnvelope e;
    e.sample_rate = drive_volts.sample_rate;
    e.center_frequency = link.laser_freq_thz * 1e12 + link.laser_offset_ghz * 1e9;
    e.samples.resize(drive_volts.samples.size());
    const double half_pi = M_PI / 2.0;
    for (std::size_t i = 0; i < e.samples.size(); ++i) {
        const double arg = half_pi * (drive_volts.samples[i] / link.vpi_volts + link.bias_fraction);
        e.samples[i] = cplx(std::cos(arg), 0.0);
    }
    return e;
}

/// Chromatic dispersion of the whole link (span plus any compensation) as an
/// all-pass quadratic phase about the envelope center frequency.
inline ComplexEnvelope fiber_propagate(ComplexEnvelope e, const LinkConfig& link) {
    const double d_ps_nm = link.span_km * link.dispersion_ps_nm_km + link.dcf_total_ps_nm;
    if (d_ps_nm == 0.0) return e;
    const double d_s_per_m = d_ps_nm * 1e-3; // ps/nm -> s/m
    const double lambda = kSpeedOfLight / e.center_frequency;
    const double coef = M_PI * lambda * lambda * d_s_per_m / kSpeedOfLight;
    detail::apply_response(e.samples, e.sample_rate, [&](double f) {
        const double phase = coef * f * f;
        return cplx(std::cos(phase), std::sin(phase));
    });
    return e;
}

/// Super-Gaussian mux/demux filter centered on the grid slot; the laser
/// detuning in the envelope center makes the passband asymmetric about the
/// signal (vestigial-sideband filtering).
inline ComplexEnvelope optical_filter(ComplexEnvelope e, const LinkConfig& link) {
    const double fwhm_hz = link.filter_fwhm_ghz * 1e9;
    if (!(fwhm_hz > 0.0)) throw std::invalid_argument("optical_filter: FWHM must be > 0");
    const double center_hz = link.filter_center_thz * 1e12;
    detail::apply_response(e.samples, e.sample_rate, [&](double f) {
        const double df = e.center_frequency + f - center_hz;
        return detail::super_gaussian_field(df, fwhm_hz, link.filter_order);
    });
    return e;
}

/// Add amplifier noise at the given OSNR (0.1 nm reference bandwidth,
/// single polarization). +infinity passes the field through untouched.
inline ComplexEnvelope load_ase(ComplexEnvelope e, double osnr_db, RandomStream& noise) {
    if (std::isinf(osnr_db) && osnr_db > 0.0) return e;
    if (!std::isfinite(osnr_db)) throw std::invalid_argument("load_ase: bad OSNR");
    const double p_sig = mean_power(e.samples);
    const double n0 = p_sig / (std::pow(10.0, osnr_db / 10.0) * kOsnrRefBandwidthHz);
    const double var_per_component = 0.5 * n0 * e.sample_rate;
    for (auto& s : e.samples) s += noise.complex_gaussian(var_per_component);
    return e;
}

/// Square-law detection: intensity, receiver lowpass, decimation to
/// out_rate, and DC removal.
inline RealWaveform photodetect(const ComplexEnvelope& e, const LinkConfig& link,
                                double out_rate) {
    RealWaveform i;
    i.sample_rate = e.sample_rate;
    i.samples.resize(e.samples.size());
    for (std::size_t k = 0; k < e.samples.size(); ++k) i.samples[k] = std::norm(e.samples[k]);
    i = electrical_lowpass(std::move(i), link.rx_bw_ghz * 1e9);
    if (out_rate != i.sample_rate) i = resample(i, out_rate);
    const double mean = i.samples.empty()
                            ? 0.0
                            : std::accumulate(i.samples.begin(), i.samples.end(), 0.0) /
                                  static_cast<double>(i.samples.size());
    for (double& v : i.samples) v -= mean;
    return i;
}

/// Full link: driver lowpass, analog upsampling, MZM, optional transmit mux
/// filter, fiber, demux filter, ASE loading, photodetection back at the
/// input rate. Noise is loaded after the demux so the receiver sees white
/// ASE referenced to the filtered signal power.
inline RealWaveform run_link(const RealWaveform& tx, const LinkConfig& link, double osnr_db,
                             RandomStream& noise) {
    if (link.oversample < 1) throw std::invalid_argument("run_link: oversample must be >= 1");
    if (!(link.modulation_index > 0.0))
        throw std::invalid_argument("run_link: modulation index must be > 0");
    RealWaveform drive = electrical_lowpass(tx, link.tx_bw_ghz * 1e9);
    if (link.oversample > 1)
        drive = resample(drive, static_cast<double>(link.oversample) * tx.sample_rate);
    const double volts_per_unit = link.modulation_index * link.vpi_volts;
    for (double& v : drive.samples) v *= volts_per_unit;
    ComplexEnvelope e = mzm_modulate(drive, link);
    if (link.include_tx_filter) e = optical_filter(std::move(e), link);
    e = fiber_propagate(std::move(e), link);
    e = optical_filter(std::move(e), link);
    e = load_ase(std::move(e), osnr_db, noise);
    return photodetect(e, link, tx.sample_rate);
}

} // namespace dmtsim
