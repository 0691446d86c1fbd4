#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cohort/records.hpp"

namespace cohort::series {

//! Per-day created minus spent value. With value conserved through
//! transactions (fees re-minted via coinbase) this is the daily issuance,
//! i.e. the block-reward series.
std::vector<std::int64_t> net_new(const CohortTables& tables);

//! Running sum of net_new. Requires tables that start at genesis (day 0),
//! otherwise the cumulative sum would be missing history.
std::vector<std::int64_t> circulating_supply(const CohortTables& tables);

//! Trailing 30-day spent value divided by same-day supply. The window is
//! clipped at genesis for the first 29 days; days with zero supply yield
//! nullopt.
std::vector<std::optional<double>> velocity(const CohortTables& tables);

inline constexpr std::int64_t kVelocityWindowDays = 30;

}  // namespace cohort::series
