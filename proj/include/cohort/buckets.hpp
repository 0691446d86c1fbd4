#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "cohort/time.hpp"

namespace cohort {

// The 11 duration buckets shared by lifespan and age distributions.
// Labels are the published column names; boundaries are fixed day counts
// (month = 30d, quarter = 90d, half year = 180d, year = 365d, 10y = 3650d),
// lower bound inclusive, upper bound exclusive, partitioning [0, inf).
inline constexpr std::size_t kBucketCount = 11;

inline constexpr std::array<int, kBucketCount> kBucketLabels = {
    -9, -7, -5, -3, -1, 1, 3, 5, 7, 9, 11};

inline constexpr std::array<std::int64_t, kBucketCount> kBucketLowerDays = {
    0, 1, 30, 90, 180, 365, 730, 1095, 1460, 1825, 3650};

//! Bucket index (0..10) whose [lower, upper) interval contains the duration.
//! Throws ErrorKind::Argument on negative durations.
std::size_t classify_duration(std::int64_t duration_seconds);

constexpr int bucket_label(std::size_t index) { return kBucketLabels[index]; }

constexpr std::int64_t bucket_lower_seconds(std::size_t index) {
    return kBucketLowerDays[index] * kSecondsPerDay;
}

//! Dense per-bucket satoshi totals, indexed by bucket index.
using BucketSums = std::array<std::int64_t, kBucketCount>;

constexpr std::int64_t bucket_total(const BucketSums& b) {
    std::int64_t sum = 0;
    for (auto v : b) sum += v;
    return sum;
}

}  // namespace cohort
