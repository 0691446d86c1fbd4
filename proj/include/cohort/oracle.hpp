#pragma once

#include <span>

#include "cohort/records.hpp"

namespace cohort::oracle {

//! Brute-force reference tables: a full O(records x days) scan that applies
//! the per-day definitions literally (sum the birth cohort, sum and bucket
//! the death cohort, weight lifespans by value, test the alive predicate
//! against end of day). It shares no logic with the partition store or the
//! cohort engine — including its own duration-bucket ladder — so agreement
//! between the two is meaningful evidence.
CohortTables oracle_tables(std::span<const OutputRecord> records, CivilDate genesis,
                           DayIndex from, DayIndex to);

}  // namespace cohort::oracle
