#pragma once
// Scenario files: one JSON document per experiment describing the modem
// configuration, the link, the OSNR sweep, and the runner policy. The schema
// is strict — unknown keys are rejected so typos fail loudly. See the README
// for the documented schema and the bundled scenarios under scenarios/.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "channel.hpp"
#include "dmt_config.hpp"

namespace dmtsim {

enum class RatePolicy { fixed_full, fixed_half, auto_fallback };

inline RatePolicy parse_rate_policy(const std::string& s) {
    if (s == "fixed-full") return RatePolicy::fixed_full;
    if (s == "fixed-half") return RatePolicy::fixed_half;
    if (s == "auto-fallback") return RatePolicy::auto_fallback;
    throw std::invalid_argument("unknown rate_policy: " + s);
}

inline const char* to_string(RatePolicy p) {
    switch (p) {
        case RatePolicy::fixed_full: return "fixed-full";
        case RatePolicy::fixed_half: return "fixed-half";
        default: return "auto-fallback";
    }
}

struct Scenario {
    std::string name;
    std::string description;
    DmtConfig dmt;
    LinkConfig link;
    std::vector<double> osnr_sweep_db;
    std::size_t payload_frames = 2000; ///< frame cap per sweep point
    std::uint64_t min_bit_errors = 100; ///< early-stop error count per point
    std::uint64_t seed = 1;
    RatePolicy rate_policy = RatePolicy::auto_fallback;
    double target_ber = 3.3e-3; ///< FEC limit used by loading and required-OSNR
    double margin_db = 0.0;     ///< extra loading margin

    void validate() const {
        if (name.empty()) throw std::invalid_argument("scenario: name is required");
        dmt.validate();
        if (osnr_sweep_db.empty())
            throw std::invalid_argument("scenario: osnr_sweep_db must be non-empty");
        for (std::size_t i = 1; i < osnr_sweep_db.size(); ++i)
            if (!(osnr_sweep_db[i] > osnr_sweep_db[i - 1]))
                throw std::invalid_argument("scenario: osnr_sweep_db must be strictly increasing");
        if (payload_frames < 1)
            throw std::invalid_argument("scenario: payload_frames must be >= 1");
        if (!(target_ber > 0.0) || !(target_ber < 0.5))
            throw std::invalid_argument("scenario: target_ber must lie in (0, 0.5)");
        if (link.oversample < 1 || !(link.vpi_volts > 0.0) ||
            !(link.modulation_index > 0.0) || !(link.filter_fwhm_ghz > 0.0) ||
            link.filter_order < 1 || !(link.tx_bw_ghz > 0.0) || !(link.rx_bw_ghz > 0.0))
            throw std::invalid_argument("scenario: bad link parameters");
    }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                       const char* ctx) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw std::invalid_argument(std::string("unknown key '") + it.key() + "' in " + ctx);
}

} // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
    detail::check_keys(j,
                       {"name", "description", "seed", "osnr_sweep_db", "payload_frames",
                        "min_bit_errors", "rate_policy", "target_ber", "margin_db", "dmt",
                        "link"},
                       "scenario");
    Scenario s;
    s.name = j.at("name").get<std::string>();
    s.description = j.value("description", std::string{});
    s.seed = j.value("seed", s.seed);
    s.osnr_sweep_db = j.at("osnr_sweep_db").get<std::vector<double>>();
    s.payload_frames = j.value("payload_frames", s.payload_frames);
    s.min_bit_errors = j.value("min_bit_errors", s.min_bit_errors);
    s.rate_policy = parse_rate_policy(j.value("rate_policy", std::string("auto-fallback")));
    s.target_ber = j.value("target_ber", s.target_ber);
    s.margin_db = j.value("margin_db", s.margin_db);

    if (j.contains("dmt")) {
        const auto& d = j.at("dmt");
        detail::check_keys(d,
                           {"n_subcarriers", "cp_samples", "dac_rate", "clipping_ratio_db",
                            "pilot_bins", "n_training_frames", "max_order_bits",
                            "target_rate_gbps"},
                           "dmt");
        s.dmt.n_subcarriers = d.value("n_subcarriers", s.dmt.n_subcarriers);
        s.dmt.cp_samples = d.value("cp_samples", s.dmt.cp_samples);
        s.dmt.dac_rate = d.value("dac_rate", s.dmt.dac_rate);
        s.dmt.clipping_ratio_db = d.value("clipping_ratio_db", s.dmt.clipping_ratio_db);
        if (d.contains("pilot_bins"))
            s.dmt.pilot_bins = d.at("pilot_bins").get<std::vector<std::size_t>>();
        s.dmt.n_training_frames = d.value("n_training_frames", s.dmt.n_training_frames);
        s.dmt.max_order_bits = d.value("max_order_bits", s.dmt.max_order_bits);
        s.dmt.target_rate_gbps = d.value("target_rate_gbps", s.dmt.target_rate_gbps);
    }

    if (j.contains("link")) {
        const auto& l = j.at("link");
        detail::check_keys(l,
                           {"span_km", "dispersion_ps_nm_km", "dcf_total_ps_nm",
                            "laser_freq_thz", "laser_offset_ghz", "filter_center_thz",
                            "filter_fwhm_ghz", "filter_order", "include_tx_filter",
                            "tx_bw_ghz", "rx_bw_ghz", "vpi_volts", "bias_fraction",
                            "modulation_index", "oversample"},
                           "link");
        s.link.span_km = l.value("span_km", s.link.span_km);
        s.link.dispersion_ps_nm_km = l.value("dispersion_ps_nm_km", s.link.dispersion_ps_nm_km);
        s.link.dcf_total_ps_nm = l.value("dcf_total_ps_nm", s.link.dcf_total_ps_nm);
        s.link.laser_freq_thz = l.value("laser_freq_thz", s.link.laser_freq_thz);
        s.link.laser_offset_ghz = l.value("laser_offset_ghz", s.link.laser_offset_ghz);
        s.link.filter_center_thz = l.value("filter_center_thz", s.link.filter_center_thz);
        s.link.filter_fwhm_ghz = l.value("filter_fwhm_ghz", s.link.filter_fwhm_ghz);
        s.link.filter_order = l.value("filter_order", s.link.filter_order);
        s.link.include_tx_filter = l.value("include_tx_filter", s.link.include_tx_filter);
        s.link.tx_bw_ghz = l.value("tx_bw_ghz", s.link.tx_bw_ghz);
        s.link.rx_bw_ghz = l.value("rx_bw_ghz", s.link.rx_bw_ghz);
        s.link.vpi_volts = l.value("vpi_volts", s.link.vpi_volts);
        s.link.bias_fraction = l.value("bias_fraction", s.link.bias_fraction);
        s.link.modulation_index = l.value("modulation_index", s.link.modulation_index);
        s.link.oversample = l.value("oversample", s.link.oversample);
    }
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    nlohmann::json j;
    in >> j;
    Scenario s = scenario_from_json(j);
    s.validate();
    return s;
}

} // namespace dmtsim
