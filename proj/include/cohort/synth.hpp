#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohort/amount.hpp"
#include "cohort/records.hpp"
#include "cohort/time.hpp"

namespace cohort::synth {

//! How live outputs get spent. The daily probability decays with age
//! (p / (1 + age_days / age_scale_days)), so old value mostly sits still,
//! while same-day chains pile mass into the shortest lifespan buckets.
struct SpendModel {
    double daily_prob = 0.05;
    double age_scale_days = 90.0;
    double same_day_chain_prob = 0.35;
    double two_child_prob = 0.25;  // a spend emits 2 outputs with this prob, else 1
    double fee_fraction = 0.0;     // in [0, 1); fees are re-minted via coinbase
};

//! Deterministic chain recipe. Block interval presets: 600 s (BTC/BCH),
//! 150 s (LTC/DASH), 60 s (DOGE), 75 s (ZEC); intervals must divide 86400.
struct ChainConfig {
    CivilDate genesis{2009, 1, 3};
    std::int64_t block_interval_s = 600;
    std::int64_t initial_subsidy_sat = 50 * kSatoshiPerCoin;
    std::int64_t halving_interval_blocks = 210'000;
    std::int64_t total_days = 0;
    SpendModel spend;
    std::uint64_t seed = 1;
};

ChainConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ChainConfig& config);
ChainConfig load_config(const std::filesystem::path& path);

//! Coinbase subsidy for a block height: initial >> (height / interval).
std::int64_t block_subsidy(const ChainConfig& config, std::int64_t height);

//! Generate the full derived table of a synthetic chain. Deterministic
//! for a fixed seed; value is conserved through every spend (children +
//! fee = parent, fee re-minted in the coinbase of the spend's own block),
//! so daily net new value equals the subsidy schedule exactly.
std::vector<OutputRecord> generate(const ChainConfig& config);

//! Split records into per-day append files (<YYYY-MM-DD>.csv under dir):
//! day d gets its births (spend field kept only for same-day spends) and
//! the spend events of older records dated d. Feeding these to append_day
//! in order reproduces the bulk-built store byte for byte.
void write_day_files(const std::filesystem::path& dir,
                     const std::vector<OutputRecord>& records, CivilDate genesis,
                     DayIndex last_day);

}  // namespace cohort::synth
