#pragma once

#include <cstdint>
#include <optional>

#include "cohort/buckets.hpp"
#include "cohort/records.hpp"
#include "cohort/store.hpp"

namespace cohort::engine {

//! Total satoshi created on day d.
std::int64_t newborn_total(const store::PartitionStore& store, DayIndex d);

//! Total satoshi spent on day d.
std::int64_t dead_total(const store::PartitionStore& store, DayIndex d);

//! Value-weighted mean lifespan (seconds) of day-d spends; nullopt when
//! the death cohort carries zero value. The satoshi*seconds numerator is
//! accumulated in 128-bit integers and divided exactly once.
std::optional<double> wal_seconds(const store::PartitionStore& store, DayIndex d);

//! Day-d spends bucketed by lifespan; sums to dead_total(d) exactly.
BucketSums lifespan_distribution(const store::PartitionStore& store, DayIndex d);

//! Value alive at end_of(d) bucketed by age = end_of(d) - born. A record
//! is alive at d iff born < end_of(d) and (unspent or spent >= end_of(d)).
BucketSums age_distribution(const store::PartitionStore& store, DayIndex d);

struct BuildOptions {
    DayIndex chunk_days = 180;  // alive-window width for age distributions
    int jobs = 1;
};

//! One StxoRow and one UtxoRow per day of [from, to]. Age distributions
//! are computed window-by-window over scan_alive_window so no more than
//! one chunk of the alive set is ever in flight. Output is bit-identical
//! for every chunk size and job count.
CohortTables build_tables(const store::PartitionStore& store, DayIndex from, DayIndex to,
                          const BuildOptions& options = {});

}  // namespace cohort::engine
