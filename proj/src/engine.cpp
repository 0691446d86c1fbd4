#include "cohort/engine.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "cohort/error.hpp"

namespace cohort::engine {

namespace {

void check_day(const store::PartitionStore& store, DayIndex d) {
    if (d < 0 || d > store.last_day()) {
        throw Error(ErrorKind::Argument,
                    fmt::format("day {} outside store range [0, {}]", d, store.last_day()));
    }
}

//! Deterministic work-stealing loop; rethrows the first worker exception.
void parallel_for(std::int64_t count, int jobs, const std::function<void(std::int64_t)>& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        while (true) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    const int n = static_cast<int>(std::min<std::int64_t>(jobs, count));
    threads.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

StxoRow stxo_row(const store::PartitionStore& store, DayIndex d) {
    StxoRow row;
    row.date = d;
    store.for_each_birth(d, [&](const OutputRecord& rec) { row.newborn_sat += rec.value_sat; });

    unsigned __int128 weighted = 0;
    store.for_each_death(d, [&](const OutputRecord& rec) {
        row.dead_sat += rec.value_sat;
        weighted += static_cast<unsigned __int128>(rec.value_sat) *
                    static_cast<unsigned __int128>(rec.lifespan_seconds());
        row.lifespan_sat[classify_duration(rec.lifespan_seconds())] += rec.value_sat;
    });
    if (row.dead_sat > 0) {
        row.wal_seconds = static_cast<double>(weighted) / static_cast<double>(row.dead_sat);
    }
    return row;
}

//! Accumulate one record's per-day age-bucket contributions over window
//! days [win_start, win_end] as range adds into difference arrays.
//!
//! The record is alive on days [day(born), day(spent) - 1] and its bucket
//! only changes when the age end_of(d) - born crosses a day-multiple
//! boundary, so each record touches each bucket in at most one contiguous
//! day run. Records born exactly at midnight reach each boundary one day
//! earlier (their age at end of birth day is already a full day).
void add_age_ranges(const OutputRecord& rec, CivilDate genesis, DayIndex win_start,
                    DayIndex win_end, std::vector<std::int64_t>& diff) {
    const DayIndex born_day = day_index(rec.born, genesis);
    const DayIndex dead_day =
        rec.is_spent() ? day_index(rec.spent, genesis) : std::numeric_limits<DayIndex>::max();

    const DayIndex lo = std::max(win_start, born_day);
    const DayIndex hi = std::min(win_end, dead_day == std::numeric_limits<DayIndex>::max()
                                              ? win_end
                                              : dead_day - 1);
    if (lo > hi || rec.value_sat == 0) return;

    const bool midnight_born = (rec.born - start_of_day(born_day, genesis)) == 0;
    const DayIndex shift = midnight_born ? 1 : 0;

    for (std::size_t k = 0; k < kBucketCount; ++k) {
        const DayIndex enter = born_day + kBucketLowerDays[k] - shift;
        const DayIndex exit = (k + 1 < kBucketCount)
                                  ? born_day + kBucketLowerDays[k + 1] - shift - 1
                                  : hi;
        const DayIndex a = std::max(lo, enter);
        const DayIndex b = std::min(hi, exit);
        if (a > b) continue;
        diff[static_cast<std::size_t>(a - win_start) * kBucketCount + k] += rec.value_sat;
        diff[static_cast<std::size_t>(b + 1 - win_start) * kBucketCount + k] -= rec.value_sat;
    }
}

}  // namespace

std::int64_t newborn_total(const store::PartitionStore& store, DayIndex d) {
    check_day(store, d);
    std::int64_t total = 0;
    store.for_each_birth(d, [&](const OutputRecord& rec) { total += rec.value_sat; });
    return total;
}

std::int64_t dead_total(const store::PartitionStore& store, DayIndex d) {
    check_day(store, d);
    std::int64_t total = 0;
    store.for_each_death(d, [&](const OutputRecord& rec) { total += rec.value_sat; });
    return total;
}

std::optional<double> wal_seconds(const store::PartitionStore& store, DayIndex d) {
    check_day(store, d);
    return stxo_row(store, d).wal_seconds;
}

BucketSums lifespan_distribution(const store::PartitionStore& store, DayIndex d) {
    check_day(store, d);
    return stxo_row(store, d).lifespan_sat;
}

BucketSums age_distribution(const store::PartitionStore& store, DayIndex d) {
    check_day(store, d);
    const Timestamp day_end = end_of_day(d, store.genesis());
    BucketSums sums{};
    store.scan_alive_window(d, d, [&](const OutputRecord& rec) {
        sums[classify_duration(day_end - rec.born)] += rec.value_sat;
    });
    return sums;
}

CohortTables build_tables(const store::PartitionStore& store, DayIndex from, DayIndex to,
                          const BuildOptions& options) {
    check_day(store, from);
    check_day(store, to);
    if (from > to) {
        throw Error(ErrorKind::Argument, fmt::format("inverted range [{}, {}]", from, to));
    }
    if (options.chunk_days < 1) {
        throw Error(ErrorKind::Argument, "chunk_days must be positive");
    }

    CohortTables tables;
    tables.genesis = store.genesis();
    tables.first_day = from;
    const std::int64_t days = to - from + 1;
    tables.stxo.resize(static_cast<std::size_t>(days));
    tables.utxo.resize(static_cast<std::size_t>(days));

    parallel_for(days, options.jobs, [&](std::int64_t i) {
        tables.stxo[static_cast<std::size_t>(i)] = stxo_row(store, from + i);
    });

    const std::int64_t windows = (days + options.chunk_days - 1) / options.chunk_days;
    parallel_for(windows, options.jobs, [&](std::int64_t w) {
        const DayIndex win_start = from + w * options.chunk_days;
        const DayIndex win_end = std::min(to, win_start + options.chunk_days - 1);
        const std::size_t len = static_cast<std::size_t>(win_end - win_start + 1);

        std::vector<std::int64_t> diff((len + 1) * kBucketCount, 0);
        store.scan_alive_window(win_start, win_end, [&](const OutputRecord& rec) {
            add_age_ranges(rec, store.genesis(), win_start, win_end, diff);
        });

        BucketSums running{};
        for (std::size_t i = 0; i < len; ++i) {
            UtxoRow& row = tables.utxo[static_cast<std::size_t>(win_start - from) + i];
            row.date = win_start + static_cast<DayIndex>(i);
            for (std::size_t k = 0; k < kBucketCount; ++k) {
                running[k] += diff[i * kBucketCount + k];
                row.age_sat[k] = running[k];
            }
        }
    });

    return tables;
}

}  // namespace cohort::engine
