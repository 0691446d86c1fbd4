#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cohort/records.hpp"

namespace cohort::validate {

struct CheckFailure {
    std::string date;  // YYYY-MM-DD, or a description when no day applies
    std::string expected;
    std::string actual;
};

struct CheckReport {
    std::string check;
    bool pass = false;
    std::optional<CheckFailure> first_failure;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

//! For every day, the UtxoRow age buckets must sum to the cumulative net
//! new value. Exact; the first divergent day and its delta are reported.
CheckReport check_supply_consistency(const CohortTables& tables);

struct HalvingSchedule {
    std::int64_t initial_subsidy_sat = 0;
    std::int64_t halving_interval_blocks = 0;
    std::int64_t blocks_per_day = 0;
};

//! Daily net_new must match the schedule's expected subsidy (summed block
//! by block, so days straddling a halving are handled), within one block's
//! subsidy.
CheckReport check_halving(const CohortTables& tables, const HalvingSchedule& schedule);

//! Dates must be contiguous, unique, and identical across both tables.
CheckReport check_continuity(const CohortTables& tables);

}  // namespace cohort::validate
