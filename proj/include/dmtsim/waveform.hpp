#pragma once
// Core sample-domain types shared by the modem and the optical channel.
// Amplitudes are dimensionless until the channel assigns physical units.

#include <complex>
#include <cstddef>
#include <vector>

namespace dmtsim {

using cplx = std::complex<double>;

/// Real-valued waveform sampled at a fixed rate (Sa/s).
struct RealWaveform {
    std::vector<double> samples;
    double sample_rate = 0.0;
};

/// Complex baseband envelope referenced to an absolute optical carrier
/// frequency (Hz). Sample index n corresponds to time n / sample_rate.
struct ComplexEnvelope {
    std::vector<cplx> samples;
    double sample_rate = 0.0;
    double center_frequency = 0.0;
};

inline double mean_power(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double s : v) acc += s * s;
    return acc / static_cast<double>(v.size());
}

inline double mean_power(const std::vector<cplx>& v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (const cplx& s : v) acc += std::norm(s);
    return acc / static_cast<double>(v.size());
}

inline double total_energy(const std::vector<double>& v) {
    double acc = 0.0;
    for (double s : v) acc += s * s;
    return acc;
}

inline double total_energy(const std::vector<cplx>& v) {
    double acc = 0.0;
    for (const cplx& s : v) acc += std::norm(s);
    return acc;
}

} // namespace dmtsim
