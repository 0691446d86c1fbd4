#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "cohort/buckets.hpp"
#include "cohort/time.hpp"

namespace cohort {

//! Sentinel for "never spent" in both memory and segment files.
inline constexpr Timestamp kUnspent = std::numeric_limits<std::int64_t>::max();

//! One transaction output of the derived table: value, birth timestamp,
//! optional spend timestamp. spent >= born whenever present. Zero values
//! are legal and contribute nothing to any sum.
struct OutputRecord {
    std::int64_t value_sat = 0;
    Timestamp born = 0;
    Timestamp spent = kUnspent;

    bool is_spent() const noexcept { return spent != kUnspent; }
    std::int64_t lifespan_seconds() const noexcept { return spent - born; }

    friend bool operator==(const OutputRecord&, const OutputRecord&) = default;
};

// Canonical record order; segments are stored sorted by it so identical
// multisets serialize to identical bytes.
inline bool record_less(const OutputRecord& a, const OutputRecord& b) noexcept {
    if (a.born != b.born) return a.born < b.born;
    if (a.spent != b.spent) return a.spent < b.spent;
    return a.value_sat < b.value_sat;
}

//! One day of death-cohort statistics. Sum of lifespan buckets equals
//! dead_sat exactly; wal_seconds is absent iff dead_sat is zero.
struct StxoRow {
    DayIndex date = 0;
    std::int64_t newborn_sat = 0;
    std::int64_t dead_sat = 0;
    std::optional<double> wal_seconds;
    BucketSums lifespan_sat{};
};

//! One day of alive-set statistics: value still alive at the end of the
//! date, bucketed by age. Buckets sum to the circulating supply.
struct UtxoRow {
    DayIndex date = 0;
    BucketSums age_sat{};
};

//! Daily STXO/UTXO rows over a contiguous day range [first_day, first_day+n).
struct CohortTables {
    CivilDate genesis;
    DayIndex first_day = 0;
    std::vector<StxoRow> stxo;
    std::vector<UtxoRow> utxo;

    DayIndex last_day() const noexcept {
        return first_day + static_cast<DayIndex>(stxo.size()) - 1;
    }
};

}  // namespace cohort
