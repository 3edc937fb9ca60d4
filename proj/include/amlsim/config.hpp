#pragma once

#include <string>

#include <json.hpp>

#include "amlsim/core.hpp"
#include "amlsim/digest.hpp"

namespace amlsim {

/// Every tunable of the simulator. Defaults reproduce the shipped datasets;
/// a JSON file may override any subset of fields.
struct SimConfig {
    // ---- transaction shape -------------------------------------------------
    std::size_t input_cap = 10;   // upper bound on sampled inputs per transaction
    std::size_t output_cap = 20;  // upper bound on outputs per transaction
    std::size_t single_use_side_max = 3;
    std::size_t coinjoin_min = 4;
    std::size_t coinjoin_max = 12;
    Satoshi availability_threshold = kAvailabilityThreshold;

    // ---- escrow / decentralized exchange -----------------------------------
    double escrow_fee_rate = 0.01;
    double escrow_deposit_rate = 0.10;
    Satoshi trade_min = 2e4;
    Satoshi trade_max = 1e8;
    // Smallest trade whose settlement keeps every output above dust.
    Satoshi p2p_min_trade = 3e5;

    // ---- crypto lending ------------------------------------------------------
    double lending_retain_rate = 0.05;
    double lending_interest_rate = 0.02;

    // ---- pool sizing -----------------------------------------------------------
    double pool_fraction = 0.05;
    std::size_t pool_min = 10;
    std::size_t pool_max = 5000;
    std::size_t single_use_expected_outputs = 2;

    // ---- outer-layer funding -------------------------------------------------
    double funding_factor = 1.5;
    Satoshi seed_value_min = 1e5;
    Satoshi seed_value_max = 1e8;
    std::size_t seed_outputs_min = 10;
    std::size_t seed_outputs_max = 40;
    int seed_window_min_days = 1;
    int seed_window_max_days = 90;

    // ---- ready-use entity simulators ----------------------------------------
    std::size_t service_rotation = 50;
    std::size_t nested_hops_min = 3;
    std::size_t nested_hops_max = 7;

    void validate() const {
        auto rate = [](double r, const char* name) {
            if (!(r >= 0.0 && r < 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1)");
        };
        rate(escrow_fee_rate, "escrow_fee_rate");
        rate(escrow_deposit_rate, "escrow_deposit_rate");
        rate(lending_retain_rate, "lending_retain_rate");
        rate(lending_interest_rate, "lending_interest_rate");
        if (input_cap < 1 || output_cap < 1) throw ConfigError("input/output caps must be positive");
        if (coinjoin_min < 2 || coinjoin_max < coinjoin_min) throw ConfigError("bad coinjoin participant range");
        if (single_use_side_max < 1) throw ConfigError("single_use_side_max must be positive");
        if (!(seed_value_min > kAvailabilityThreshold) || seed_value_max < seed_value_min)
            throw ConfigError("bad seed value range");
        if (seed_outputs_min < 1 || seed_outputs_max < seed_outputs_min) throw ConfigError("bad seed output range");
        if (seed_window_min_days < 1 || seed_window_max_days < seed_window_min_days)
            throw ConfigError("bad seed window");
        if (pool_min < 1 || pool_max < pool_min) throw ConfigError("bad pool size bounds");
        if (!(funding_factor >= 1.0)) throw ConfigError("funding_factor must be at least 1");
        if (service_rotation < 2) throw ConfigError("service_rotation must be at least 2");
        if (nested_hops_min < 2 || nested_hops_max < nested_hops_min) throw ConfigError("bad nested hop range");
        if (trade_min <= 0 || trade_max < trade_min) throw ConfigError("bad trade range");
    }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimConfig, input_cap, output_cap, single_use_side_max, coinjoin_min,
                                                coinjoin_max, availability_threshold, escrow_fee_rate,
                                                escrow_deposit_rate, trade_min, trade_max, p2p_min_trade,
                                                lending_retain_rate, lending_interest_rate, pool_fraction, pool_min,
                                                pool_max, single_use_expected_outputs, funding_factor, seed_value_min,
                                                seed_value_max, seed_outputs_min, seed_outputs_max,
                                                seed_window_min_days, seed_window_max_days, service_rotation,
                                                nested_hops_min, nested_hops_max)

inline SimConfig config_from_json(const nlohmann::json& j) {
    SimConfig c = j.get<SimConfig>();
    c.validate();
    return c;
}

inline std::string config_digest(const SimConfig& c) { return sha256_hex(nlohmann::json(c).dump()); }

}  // namespace amlsim
