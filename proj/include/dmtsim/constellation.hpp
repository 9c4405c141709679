#pragma once
// Gray-labeled QAM constellations, orders 1..8 bits/symbol, unit mean energy.
//
// Even orders are square QAM. Odd orders >= 3 use rectangular grids
// (2^ceil(b/2) x 2^floor(b/2) points, e.g. 8-QAM = 4x2, 32-QAM = 8x4) with an
// independent Gray code per dimension; cross constellations are not used.
// b = 1 is BPSK on the real axis with bit 0 -> +1.
//
// analytic_ber() evaluates the exact bit error rate of these constellations
// under AWGN by enumerating per-dimension PAM decision regions, so it is valid
// for every supported order, not just square QAM.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "waveform.hpp"

namespace dmtsim {

namespace detail {

inline std::uint32_t gray_encode(std::uint32_t i) { return i ^ (i >> 1); }

inline std::uint32_t gray_decode(std::uint32_t g) {
    std::uint32_t i = g;
    while (g >>= 1) i ^= g;
    return i;
}

// Gray M-PAM with levels in descending order: position index i in [0, M)
// sits at level (M-1) - 2i and carries label gray_encode(i). Index 0 is the
// most positive level, so the all-zeros label maps to +max.
struct PamAxis {
    int bits = 0;
    std::vector<double> levels;        // by position index
    std::vector<std::uint32_t> labels; // by position index
    std::vector<std::uint32_t> index_of_label;

    explicit PamAxis(int nbits) : bits(nbits) {
        const std::uint32_t M = 1u << nbits;
        levels.resize(M);
        labels.resize(M);
        index_of_label.resize(M);
        for (std::uint32_t i = 0; i < M; ++i) {
            levels[i] = static_cast<double>(M - 1) - 2.0 * static_cast<double>(i);
            labels[i] = gray_encode(i);
            index_of_label[labels[i]] = i;
        }
    }
};

inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Exact average bit error probability of one Gray PAM axis with noise std
// sigma (levels +-1, +-3, ...). Enumerates all (sent, decided) pairs through
// the decision-region boundaries at level midpoints.
inline double pam_exact_ber(int nbits, double sigma) {
    const std::uint32_t M = 1u << nbits;
    if (M == 1) return 0.0;
    PamAxis axis(nbits);
    const double inf = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::uint32_t p = 0; p < M; ++p) {
        for (std::uint32_t q = 0; q < M; ++q) {
            if (p == q) continue;
            // Region of position q: (lower_bound, upper_bound) in amplitude,
            // with boundaries at midpoints between adjacent levels.
            const double hi = (q == 0) ? inf : 0.5 * (axis.levels[q - 1] + axis.levels[q]);
            const double lo = (q == M - 1) ? -inf : 0.5 * (axis.levels[q] + axis.levels[q + 1]);
            const double mean = axis.levels[p];
            const double pr_hi = std::isinf(hi) ? 0.0 : q_function((hi - mean) / sigma);
            const double pr_lo = std::isinf(lo) ? 1.0 : q_function((lo - mean) / sigma);
            const double pr = pr_lo - pr_hi; // P(land in region of q | sent p)
            total += pr * static_cast<double>(__builtin_popcount(axis.labels[p] ^ axis.labels[q]));
        }
    }
    return total / (static_cast<double>(M) * static_cast<double>(nbits));
}

} // namespace detail

/// Unit-mean-energy Gray QAM constellation of 1..8 bits per symbol.
class Constellation {
  public:
    explicit Constellation(int order_bits) : bits_(order_bits) {
        if (order_bits < 1 || order_bits > 8)
            throw std::invalid_argument("Constellation: order must be 1..8 bits");
        bits_i_ = (order_bits + 1) / 2;
        bits_q_ = order_bits / 2;
        detail::PamAxis axis_i(bits_i_);
        detail::PamAxis axis_q_storage(bits_q_ > 0 ? bits_q_ : 1);
        const std::uint32_t Mi = 1u << bits_i_;
        const std::uint32_t Mq = bits_q_ > 0 ? (1u << bits_q_) : 1u;

        double raw_energy = (static_cast<double>(Mi) * Mi - 1.0) / 3.0;
        if (bits_q_ > 0) raw_energy += (static_cast<double>(Mq) * Mq - 1.0) / 3.0;
        scale_ = 1.0 / std::sqrt(raw_energy);

        const std::uint32_t M = 1u << bits_;
        points_.resize(M);
        labels_.resize(M);
        point_of_label_.resize(M);
        for (std::uint32_t ii = 0; ii < Mi; ++ii) {
            for (std::uint32_t iq = 0; iq < Mq; ++iq) {
                const std::uint32_t idx = ii * Mq + iq;
                const double re = axis_i.levels[ii] * scale_;
                const double im = bits_q_ > 0 ? axis_q_storage.levels[iq] * scale_ : 0.0;
                std::uint32_t label = detail::gray_encode(ii);
                if (bits_q_ > 0)
                    label = (label << bits_q_) | detail::gray_encode(iq);
                points_[idx] = {re, im};
                labels_[idx] = label;
                point_of_label_[label] = idx;
            }
        }
    }

    int order_bits() const { return bits_; }
    std::size_t size() const { return points_.size(); }
    const std::vector<cplx>& points() const { return points_; }
    std::uint32_t label_of(std::size_t index) const { return labels_[index]; }

    /// Map a b-bit pattern (low bits of `pattern`) to its symbol.
    cplx map_bits(std::uint32_t pattern) const {
        if (pattern >= points_.size())
            throw std::invalid_argument("map_bits: pattern outside [0, 2^b)");
        return points_[point_of_label_[pattern]];
    }

    /// Nearest-point index; ties resolve to the lowest point index.
    std::size_t demap_index(cplx y) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const double d = std::norm(y - points_[i]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

    /// Hard-decision demap: bit pattern of the nearest point.
    std::uint32_t demap_hard(cplx y) const { return labels_[demap_index(y)]; }

  private:
    int bits_;
    int bits_i_;
    int bits_q_;
    double scale_;
    std::vector<cplx> points_;
    std::vector<std::uint32_t> labels_;
    std::vector<std::uint32_t> point_of_label_;
};

/// Exact AWGN bit error rate of the order-b constellation at symbol SNR
/// snr = Es/N0 (linear). Valid for all supported orders; snr = 0 gives 0.5.
inline double analytic_ber(int order_bits, double snr) {
    if (order_bits < 1 || order_bits > 8)
        throw std::invalid_argument("analytic_ber: order must be 1..8 bits");
    if (snr < 0.0) throw std::invalid_argument("analytic_ber: negative SNR");

    const int bi = (order_bits + 1) / 2;
    const int bq = order_bits / 2;
    const std::uint32_t Mi = 1u << bi;
    const std::uint32_t Mq = bq > 0 ? (1u << bq) : 1u;
    double raw_energy = (static_cast<double>(Mi) * Mi - 1.0) / 3.0;
    if (bq > 0) raw_energy += (static_cast<double>(Mq) * Mq - 1.0) / 3.0;

    // Per-dimension noise std in raw (+-1, +-3, ...) units.
    const double sigma = (snr == 0.0)
                             ? std::numeric_limits<double>::infinity()
                             : std::sqrt(raw_energy / (2.0 * snr));
    double errs = static_cast<double>(bi) * detail::pam_exact_ber(bi, sigma);
    if (bq > 0) errs += static_cast<double>(bq) * detail::pam_exact_ber(bq, sigma);
    return errs / static_cast<double>(order_bits);
}

} // namespace dmtsim
