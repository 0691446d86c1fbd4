#include "cohort/oracle.hpp"

#include <fmt/format.h>

#include "cohort/error.hpp"

namespace cohort::oracle {

namespace {

// Independent bucket ladder, spelled out in seconds.
std::size_t bucket_of(std::int64_t seconds) {
    if (seconds < 0) throw Error(ErrorKind::Argument, "negative duration");
    if (seconds < 86400LL) return 0;                // < 1d
    if (seconds < 30LL * 86400) return 1;           // 1d - 1m
    if (seconds < 90LL * 86400) return 2;           // 1m - 1q
    if (seconds < 180LL * 86400) return 3;          // 1q - 6m
    if (seconds < 365LL * 86400) return 4;          // 6m - 1y
    if (seconds < 730LL * 86400) return 5;          // 1y - 2y
    if (seconds < 1095LL * 86400) return 6;         // 2y - 3y
    if (seconds < 1460LL * 86400) return 7;         // 3y - 4y
    if (seconds < 1825LL * 86400) return 8;         // 4y - 5y
    if (seconds < 3650LL * 86400) return 9;         // 5y - 10y
    return 10;                                      // >= 10y
}

}  // namespace

CohortTables oracle_tables(std::span<const OutputRecord> records, CivilDate genesis,
                           DayIndex from, DayIndex to) {
    if (from < 0 || from > to) {
        throw Error(ErrorKind::Argument, fmt::format("bad day range [{}, {}]", from, to));
    }

    CohortTables tables;
    tables.genesis = genesis;
    tables.first_day = from;

    const Timestamp origin = midnight_of(genesis);
    for (DayIndex d = from; d <= to; ++d) {
        const Timestamp day_start = origin + d * kSecondsPerDay;
        const Timestamp day_end = day_start + kSecondsPerDay;

        StxoRow stxo;
        stxo.date = d;
        unsigned __int128 weighted = 0;
        UtxoRow utxo;
        utxo.date = d;

        for (const auto& rec : records) {
            if (rec.born >= day_start && rec.born < day_end) {
                stxo.newborn_sat += rec.value_sat;
            }
            if (rec.is_spent() && rec.spent >= day_start && rec.spent < day_end) {
                stxo.dead_sat += rec.value_sat;
                const std::int64_t lifespan = rec.spent - rec.born;
                weighted += static_cast<unsigned __int128>(rec.value_sat) *
                            static_cast<unsigned __int128>(lifespan);
                stxo.lifespan_sat[bucket_of(lifespan)] += rec.value_sat;
            }
            // Alive at d: created before the end of the day and not spent
            // before that same instant.
            if (rec.born < day_end && (!rec.is_spent() || rec.spent >= day_end)) {
                utxo.age_sat[bucket_of(day_end - rec.born)] += rec.value_sat;
            }
        }
        if (stxo.dead_sat > 0) {
            stxo.wal_seconds =
                static_cast<double>(weighted) / static_cast<double>(stxo.dead_sat);
        }
        tables.stxo.push_back(stxo);
        tables.utxo.push_back(utxo);
    }
    return tables;
}

}  // namespace cohort::oracle
