#pragma once
// Margin-adaptive bit and power loading.
//
// The allocator places an exact total bit count across carriers, assigns
// equal-margin powers (every active carrier sits the same factor above its
// order threshold), renormalizes to unit mean power over active carriers, and
// maximizes the resulting minimum margin. With that normalization the margin
// of an allocation {b_k} with active count a is
//
//     margin = a / sum_k T(b_k) / snr_k
//
// where T(b) is the SNR threshold of order b at the target BER. Per-order
// thresholds are obtained by numerically inverting the exact constellation
// BER, which makes the increments T(b)-T(b-1) non-convex in b (odd orders are
// power-inefficient). Plain greedy bit-filling is therefore not sufficient:
// the allocator scans candidate active counts, fills bits greedily along the
// convex hull of the threshold table, repairs the one-bit boundary case, and
// polishes with single-bit exchanges until no move improves the margin.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "constellation.hpp"
#include "dmt_config.hpp"

namespace dmtsim {

/// Linear per-carrier SNR estimates.
struct SnrProfile {
    std::vector<double> snr;
};

/// Per-carrier modulation orders (bits) and linear transmit powers.
struct LoadingTable {
    std::vector<int> bits;
    std::vector<double> power;
};

/// SNR-gap model: a target BER shared by all orders plus a uniform extra
/// margin applied during loading. Thresholds are computed eagerly at
/// construction by bisecting analytic_ber, so instances are immutable and
/// safe to share across threads.
class GapModel {
  public:
    explicit GapModel(double target_ber = 3.3e-3, double margin_db = 0.0)
        : target_ber_(target_ber), margin_db_(margin_db) {
        if (!(target_ber > 0.0) || !(target_ber < 0.5))
            throw std::invalid_argument("GapModel: target BER must lie in (0, 0.5)");
        thresholds_[0] = 0.0;
        for (int b = 1; b <= 8; ++b) thresholds_[b] = invert_ber(b, target_ber);
        for (int b = 2; b <= 8; ++b)
            if (!(thresholds_[b] > thresholds_[b - 1]))
                throw std::runtime_error("GapModel: thresholds not increasing");
    }

    double target_ber() const { return target_ber_; }
    double margin_db() const { return margin_db_; }

    /// Minimum Es/N0 (linear) at which order b meets target_ber. No margin.
    double threshold(int order_bits) const {
        if (order_bits < 1 || order_bits > 8)
            throw std::invalid_argument("GapModel::threshold: order must be 1..8");
        return thresholds_[order_bits];
    }

  private:
    static double invert_ber(int order_bits, double target) {
        double hi = 1.0;
        while (analytic_ber(order_bits, hi) > target) {
            hi *= 2.0;
            if (hi > 1e30) throw std::runtime_error("GapModel: threshold search diverged");
        }
        double lo = 0.0;
        for (int it = 0; it < 200 && (hi - lo) > 1e-14 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (analytic_ber(order_bits, mid) > target ? lo : hi) = mid;
        }
        return hi;
    }

    double target_ber_;
    double margin_db_;
    std::array<double, 9> thresholds_{};
};

/// Free-function form of the per-order threshold lookup.
inline double min_snr_for_order(int order_bits, const GapModel& gap) {
    return gap.threshold(order_bits);
}

struct LoadingResult {
    LoadingTable table;
    /// Equal margin of active carriers relative to the margin_db-inflated
    /// thresholds; >= 1.0 means the target BER is met with the extra margin.
    double margin_linear = 0.0;
    bool feasible = false;
};

namespace detail {

struct HullStep {
    int bits = 0;      // step size along the hull (1 or 2 for supported tables)
    double dcost = 0.0; // threshold increase over the whole step
};

// Next hull step from each level, along the lower convex hull of
// (level, threshold) for levels 1..max_b. Levels off the hull get bits = 0.
inline std::array<HullStep, 9> build_hull(const std::array<double, 9>& T, int max_b) {
    std::array<HullStep, 9> next{};
    int l = 1;
    while (l < max_b) {
        int best = l + 1;
        double best_slope = std::numeric_limits<double>::infinity();
        for (int m = l + 1; m <= max_b; ++m) {
            const double slope = (T[m] - T[l]) / static_cast<double>(m - l);
            if (slope < best_slope - 1e-15 * std::abs(best_slope)) {
                best_slope = slope;
                best = m;
            }
        }
        next[l] = {best - l, T[best] - T[l]};
        l = best;
    }
    return next;
}

} // namespace detail

/// Allocate exactly target_bits across the profile, maximizing the minimum
/// margin at the gap's target BER. Carriers with zero SNR stay unloaded.
/// Infeasible when the bit total cannot be reached at max_order_bits over
/// usable carriers, or when an assigned power exceeds power_cap_db above the
/// active-carrier mean.
inline LoadingResult levin_campello(const SnrProfile& profile, int target_bits,
                                    const GapModel& gap, int max_order_bits,
                                    double power_cap_db = 20.0) {
    if (max_order_bits < 1 || max_order_bits > 8)
        throw std::invalid_argument("levin_campello: max_order_bits must be 1..8");
    if (target_bits < 0)
        throw std::invalid_argument("levin_campello: negative bit target");
    const std::size_t n = profile.snr.size();
    for (double s : profile.snr)
        if (!(s >= 0.0) || !std::isfinite(s))
            throw std::invalid_argument("levin_campello: SNR values must be finite and >= 0");

    LoadingResult result;
    result.table.bits.assign(n, 0);
    result.table.power.assign(n, 0.0);
    if (target_bits == 0) {
        result.margin_linear = std::numeric_limits<double>::infinity();
        result.feasible = true;
        return result;
    }

    // Effective thresholds including the uniform extra margin.
    const double margin_factor = std::pow(10.0, gap.margin_db() / 10.0);
    std::array<double, 9> T{};
    for (int b = 1; b <= max_order_bits; ++b) T[b] = gap.threshold(b) * margin_factor;

    // Usable carriers sorted by descending SNR (ascending weight), stable in index.
    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (profile.snr[i] > 0.0) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (profile.snr[a] != profile.snr[b]) return profile.snr[a] > profile.snr[b];
        return a < b;
    });

    const int B = target_bits;
    const std::size_t a_min =
        static_cast<std::size_t>((B + max_order_bits - 1) / max_order_bits);
    const std::size_t a_max = std::min<std::size_t>(order.size(), static_cast<std::size_t>(B));
    if (a_min > a_max) return result; // infeasible

    std::vector<double> w(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) w[i] = 1.0 / profile.snr[order[i]];

    const auto hull = detail::build_hull(T, max_order_bits);

    double best_margin = -1.0;
    std::size_t best_a = 0;
    std::vector<int> best_levels;

    std::vector<int> levels;
    // Heap entries: (per-bit cost, prefix position). Position breaks ties
    // deterministically.
    using HeapItem = std::pair<double, std::size_t>;
    std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<HeapItem>> heap;

    for (std::size_t a = a_min; a <= a_max; ++a) {
        const long long extra = static_cast<long long>(B) - static_cast<long long>(a);
        if (extra > static_cast<long long>(a) * (max_order_bits - 1)) continue;

        levels.assign(a, 1);
        double cost = 0.0;
        for (std::size_t i = 0; i < a; ++i) cost += w[i] * T[1];

        while (!heap.empty()) heap.pop();
        for (std::size_t i = 0; i < a; ++i)
            if (max_order_bits > 1)
                heap.emplace(w[i] * hull[1].dcost / hull[1].bits, i);

        long long remaining = extra;
        while (remaining > 0 && !heap.empty()) {
            const auto [perbit, i] = heap.top();
            const detail::HullStep step = hull[levels[i]];
            if (step.bits > remaining) break; // boundary falls inside a hull chunk
            heap.pop();
            cost += w[i] * step.dcost;
            levels[i] += step.bits;
            remaining -= step.bits;
            if (levels[i] < max_order_bits) {
                const detail::HullStep nxt = hull[levels[i]];
                heap.emplace(w[i] * nxt.dcost / nxt.bits, i);
            }
        }

        // With thresholds whose hull chunks exceed two bits the boundary can
        // stall more than one bit short; close it with cheapest unit steps
        // first (the exchange polish below then smooths the result).
        while (remaining > 1) {
            double c1 = std::numeric_limits<double>::infinity();
            std::size_t ci = 0;
            for (std::size_t i = 0; i < a; ++i) {
                if (levels[i] >= max_order_bits) continue;
                const double c = w[i] * (T[levels[i] + 1] - T[levels[i]]);
                if (c < c1) {
                    c1 = c;
                    ci = i;
                }
            }
            if (!std::isfinite(c1)) break;
            levels[ci] += 1;
            cost += c1;
            remaining -= 1;
        }

        if (remaining == 1) {
            // Repair: either one odd (off-hull) step up, or complete the
            // cheapest pending two-bit chunk and retire one loaded bit.
            double r1 = std::numeric_limits<double>::infinity();
            std::size_t r1_i = 0;
            for (std::size_t i = 0; i < a; ++i) {
                if (levels[i] >= max_order_bits) continue;
                const double c = w[i] * (T[levels[i] + 1] - T[levels[i]]);
                if (c < r1) {
                    r1 = c;
                    r1_i = i;
                }
            }
            // Top-two cheapest removals (one-bit decrements of loaded carriers).
            double rem1 = -1.0, rem2 = -1.0;
            std::size_t rem1_j = 0;
            for (std::size_t j = 0; j < a; ++j) {
                if (levels[j] < 2) continue;
                const double g = w[j] * (T[levels[j]] - T[levels[j] - 1]);
                if (g > rem1) {
                    rem2 = rem1;
                    rem1 = g;
                    rem1_j = j;
                } else if (g > rem2) {
                    rem2 = g;
                }
            }
            double r2 = std::numeric_limits<double>::infinity();
            std::size_t r2_i = 0, r2_j = 0;
            for (std::size_t i = 0; i < a; ++i) {
                const detail::HullStep step = hull[levels[i]];
                if (step.bits != 2) continue;
                const double gain = (rem1_j == i) ? rem2 : rem1;
                if (gain <= 0.0) continue;
                const double c = w[i] * step.dcost - gain;
                if (c < r2) {
                    r2 = c;
                    r2_i = i;
                    r2_j = (rem1_j == i) ? /* second-best holder */ a : rem1_j;
                }
            }
            // Recover the second-best removal index if needed.
            if (r2 < r1 && r2_j == a) {
                double g_best = -1.0;
                for (std::size_t j = 0; j < a; ++j) {
                    if (j == r2_i || levels[j] < 2) continue;
                    const double g = w[j] * (T[levels[j]] - T[levels[j] - 1]);
                    if (g > g_best) {
                        g_best = g;
                        r2_j = j;
                    }
                }
            }
            if (!std::isfinite(r1) && !std::isfinite(r2)) continue; // cannot place the bit
            if (r1 <= r2) {
                cost += r1;
                levels[r1_i] += 1;
            } else {
                cost += w[r2_i] * hull[levels[r2_i]].dcost - (w[r2_j] * (T[levels[r2_j]] - T[levels[r2_j] - 1]));
                levels[r2_i] += hull[levels[r2_i]].bits;
                levels[r2_j] -= 1;
            }
            remaining = 0;
        } else if (remaining > 0) {
            continue; // heap exhausted below target: not reachable at this a
        }

        // Polish: shift single bits while any exchange lowers total cost.
        const std::size_t max_passes = 4 * a + 16;
        for (std::size_t pass = 0; pass < max_passes; ++pass) {
            double up1 = std::numeric_limits<double>::infinity(), up2 = up1;
            std::size_t up1_i = 0;
            double dn1 = -1.0, dn2 = -1.0;
            std::size_t dn1_j = 0;
            for (std::size_t i = 0; i < a; ++i) {
                if (levels[i] < max_order_bits) {
                    const double c = w[i] * (T[levels[i] + 1] - T[levels[i]]);
                    if (c < up1) {
                        up2 = up1;
                        up1 = c;
                        up1_i = i;
                    } else if (c < up2) {
                        up2 = c;
                    }
                }
                if (levels[i] >= 2) {
                    const double g = w[i] * (T[levels[i]] - T[levels[i] - 1]);
                    if (g > dn1) {
                        dn2 = dn1;
                        dn1 = g;
                        dn1_j = i;
                    } else if (g > dn2) {
                        dn2 = g;
                    }
                }
            }
            double up = up1;
            std::size_t ui = up1_i, dj = dn1_j;
            double dn = dn1;
            if (up1_i == dn1_j) {
                // Same carrier on both sides: best cross pairing.
                const double alt1 = (dn2 > 0.0) ? up1 - dn2 : std::numeric_limits<double>::infinity();
                const double alt2 = std::isfinite(up2) ? up2 - dn1 : std::numeric_limits<double>::infinity();
                if (alt1 <= alt2) {
                    dn = -1.0; // recover argmax removal excluding ui
                    for (std::size_t j = 0; j < a; ++j) {
                        if (j == ui || levels[j] < 2) continue;
                        const double g = w[j] * (T[levels[j]] - T[levels[j] - 1]);
                        if (g > dn) {
                            dn = g;
                            dj = j;
                        }
                    }
                } else {
                    up = std::numeric_limits<double>::infinity(); // argmin addition excluding dj
                    for (std::size_t i = 0; i < a; ++i) {
                        if (i == dj || levels[i] >= max_order_bits) continue;
                        const double c = w[i] * (T[levels[i] + 1] - T[levels[i]]);
                        if (c < up) {
                            up = c;
                            ui = i;
                        }
                    }
                }
            }
            if (!(dn > 0.0) || !std::isfinite(up)) break;
            if (up < dn * (1.0 - 1e-12)) {
                levels[dj] -= 1;
                levels[ui] += 1;
                cost += up - dn;
            } else {
                break;
            }
        }

        const double margin = static_cast<double>(a) / cost;
        if (margin > best_margin || (margin == best_margin && a > best_a)) {
            best_margin = margin;
            best_a = a;
            best_levels = levels;
        }
    }

    if (best_a == 0) return result; // no feasible active count

    // Equal-margin powers, renormalized to unit mean over active carriers.
    double rsum = 0.0;
    std::vector<double> r(best_a);
    for (std::size_t i = 0; i < best_a; ++i) {
        r[i] = T[best_levels[i]] * w[i];
        rsum += r[i];
    }
    const double rmean = rsum / static_cast<double>(best_a);
    const double cap = std::pow(10.0, power_cap_db / 10.0);
    bool capped = false;
    for (std::size_t i = 0; i < best_a; ++i) {
        const std::size_t k = order[i];
        result.table.bits[k] = best_levels[i];
        result.table.power[k] = r[i] / rmean;
        if (result.table.power[k] > cap) capped = true;
    }
    result.margin_linear = 1.0 / rmean;
    result.feasible = !capped;
    return result;
}

/// Evaluate the minimum margin of a fixed table under a profile (diagnostic;
/// margin_k = snr_k * p_k / T_eff(b_k) over active carriers).
inline double evaluate_min_margin(const LoadingTable& table, const SnrProfile& profile,
                                  const GapModel& gap) {
    const double margin_factor = std::pow(10.0, gap.margin_db() / 10.0);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < table.bits.size(); ++k) {
        if (table.bits[k] <= 0) continue;
        const double t = gap.threshold(table.bits[k]) * margin_factor;
        m = std::min(m, profile.snr[k] * table.power[k] / t);
    }
    return m;
}

enum class RateSelection { full, half, none };

inline const char* to_string(RateSelection r) {
    switch (r) {
        case RateSelection::full: return "full";
        case RateSelection::half: return "half";
        default: return "none";
    }
}

struct RateDecision {
    RateSelection rate = RateSelection::none;
    LoadingResult loading;             ///< bin-space table for the selected rate
    double full_margin_linear = 0.0;   ///< diagnostics from the full-rate attempt
    double half_margin_linear = 0.0;
};

/// Run the allocator against a bin-space profile (data bins 1..n-1, index i
/// maps to bin i+1). Pilot bins are excluded from loading and come back with
/// bits = 0, power = 0; the result table is in bin space.
inline LoadingResult load_rate(const SnrProfile& bin_profile, std::size_t target_bits,
                               const GapModel& gap, const DmtConfig& cfg) {
    if (bin_profile.snr.size() != cfg.data_bin_count())
        throw std::invalid_argument("load_rate: profile size must match data bin count");
    SnrProfile payload;
    std::vector<std::size_t> payload_idx;
    payload.snr.reserve(cfg.payload_bin_count());
    for (std::size_t i = 0; i < bin_profile.snr.size(); ++i) {
        if (cfg.is_pilot(i + 1)) continue;
        payload.snr.push_back(bin_profile.snr[i]);
        payload_idx.push_back(i);
    }
    const auto r =
        levin_campello(payload, static_cast<int>(target_bits), gap, cfg.max_order_bits);
    LoadingResult out;
    out.feasible = r.feasible;
    out.margin_linear = r.margin_linear;
    out.table.bits.assign(cfg.data_bin_count(), 0);
    out.table.power.assign(cfg.data_bin_count(), 0.0);
    for (std::size_t j = 0; j < payload_idx.size(); ++j) {
        out.table.bits[payload_idx[j]] = r.table.bits[j];
        out.table.power[payload_idx[j]] = r.table.power[j];
    }
    return out;
}

/// Full-rate if the loader closes the full bit budget with margin >= 0 dB,
/// else half-rate under the same test, else none. Profiles and the returned
/// table are in bin space (see load_rate).
inline RateDecision select_rate(const SnrProfile& bin_profile, const GapModel& gap,
                                const DmtConfig& cfg) {
    RateDecision d;
    const auto full = load_rate(bin_profile, cfg.full_rate_bits(), gap, cfg);
    d.full_margin_linear = full.margin_linear;
    if (full.feasible && full.margin_linear >= 1.0) {
        d.rate = RateSelection::full;
        d.loading = full;
        return d;
    }
    const auto half = load_rate(bin_profile, cfg.half_rate_bits(), gap, cfg);
    d.half_margin_linear = half.margin_linear;
    if (half.feasible && half.margin_linear >= 1.0) {
        d.rate = RateSelection::half;
        d.loading = half;
        return d;
    }
    d.rate = RateSelection::none;
    d.loading.table.bits.assign(cfg.data_bin_count(), 0);
    d.loading.table.power.assign(cfg.data_bin_count(), 0.0);
    return d;
}

} // namespace dmtsim
