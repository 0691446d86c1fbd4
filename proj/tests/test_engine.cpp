#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <vector>

#include "cohort/amount.hpp"
#include "cohort/engine.hpp"
#include "cohort/error.hpp"
#include "cohort/oracle.hpp"
#include "cohort/rng.hpp"
#include "cohort/store.hpp"

using namespace cohort;
using store::PartitionStore;
namespace fs = std::filesystem;

namespace {

const CivilDate kGenesis{2009, 1, 3};

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cohort-engine-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

OutputRecord rec(std::int64_t value, DayIndex born_day, std::int64_t born_offset_s,
                 DayIndex spent_day = -1, std::int64_t spent_offset_s = 0) {
    OutputRecord r;
    r.value_sat = value;
    r.born = start_of_day(born_day, kGenesis) + born_offset_s;
    if (spent_day >= 0) r.spent = start_of_day(spent_day, kGenesis) + spent_offset_s;
    return r;
}

std::size_t index_of_label(int label) {
    for (std::size_t i = 0; i < kBucketCount; ++i) {
        if (bucket_label(i) == label) return i;
    }
    FAIL("unknown label");
    return 0;
}

//! Random record soup (not a consistent chain): midnight births, same-second
//! spends, zero values, long lifespans.
std::vector<OutputRecord> random_records(std::uint64_t seed, int count, DayIndex max_day) {
    Rng rng(seed);
    std::vector<OutputRecord> records;
    records.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        OutputRecord r;
        r.value_sat = rng.next_below(10) == 0
                          ? 0
                          : static_cast<std::int64_t>(rng.next_below(5'000'000'000ull));
        const DayIndex born_day =
            static_cast<DayIndex>(rng.next_below(static_cast<std::uint64_t>(max_day)));
        const std::int64_t offset =
            rng.next_below(8) == 0 ? 0
                                   : static_cast<std::int64_t>(rng.next_below(kSecondsPerDay));
        r.born = start_of_day(born_day, kGenesis) + offset;
        const auto fate = rng.next_below(4);
        if (fate == 0) {
            r.spent = r.born;  // same-second spend
        } else if (fate == 1 || fate == 2) {
            r.spent = r.born + static_cast<std::int64_t>(
                                   rng.next_below(static_cast<std::uint64_t>(
                                       (max_day - born_day + 20) * kSecondsPerDay)));
        }
        if (r.is_spent() && day_index(r.spent, kGenesis) > max_day) r.spent = kUnspent;
        records.push_back(r);
    }
    return records;
}

void check_tables_equal(const CohortTables& a, const CohortTables& b) {
    REQUIRE(a.stxo.size() == b.stxo.size());
    REQUIRE(a.utxo.size() == b.utxo.size());
    for (std::size_t i = 0; i < a.stxo.size(); ++i) {
        const auto& x = a.stxo[i];
        const auto& y = b.stxo[i];
        REQUIRE(x.date == y.date);
        REQUIRE(x.newborn_sat == y.newborn_sat);
        REQUIRE(x.dead_sat == y.dead_sat);
        REQUIRE(x.lifespan_sat == y.lifespan_sat);
        REQUIRE(x.wal_seconds.has_value() == y.wal_seconds.has_value());
        if (x.wal_seconds) {
            const double tol = 1e-9 * std::max(*x.wal_seconds, *y.wal_seconds);
            REQUIRE(std::abs(*x.wal_seconds - *y.wal_seconds) <= tol);
        }
        REQUIRE(a.utxo[i].date == b.utxo[i].date);
        REQUIRE(a.utxo[i].age_sat == b.utxo[i].age_sat);
    }
}

}  // namespace

TEST_CASE("daily totals and WAL basics") {
    const auto root = temp_dir("totals");
    std::vector<OutputRecord> records = {
        rec(5'000'000'000, 0, 3600),
        rec(5'000'000'000, 0, 7200, 3, 100),
    };
    auto s = PartitionStore::build(root, kGenesis, records, 4);

    CHECK(engine::newborn_total(s, 0) == 10'000'000'000);
    CHECK(engine::newborn_total(s, 1) == 0);
    CHECK(engine::dead_total(s, 2) == 0);
    CHECK(engine::dead_total(s, 3) == 5'000'000'000);  // a single 50 BTC spend
    CHECK(!engine::wal_seconds(s, 1).has_value());
    CHECK_THROWS_AS(engine::newborn_total(s, 5), Error);
    CHECK_THROWS_AS(engine::newborn_total(s, -1), Error);
}

TEST_CASE("WAL: single element and the weighted-mean example") {
    const auto root = temp_dir("wal");
    std::vector<OutputRecord> records = {
        // One STXO with a 100-day lifespan, spent on day 100.
        rec(123, 0, 0, 100, 0),
        // 1 BTC at 10 days and 3 BTC at 2 days, dying on day 200.
        rec(1 * kSatoshiPerCoin, 190, 0, 200, 0),
        rec(3 * kSatoshiPerCoin, 198, 0, 200, 0),
    };
    auto s = PartitionStore::build(root, kGenesis, records, 200);

    auto wal100 = engine::wal_seconds(s, 100);
    REQUIRE(wal100.has_value());
    CHECK(*wal100 == doctest::Approx(100.0 * kSecondsPerDay).epsilon(1e-12));

    // (1*10 + 3*2) / 4 = 4 days.
    auto wal200 = engine::wal_seconds(s, 200);
    REQUIRE(wal200.has_value());
    CHECK(*wal200 == doctest::Approx(4.0 * kSecondsPerDay).epsilon(1e-12));
}

TEST_CASE("the worked three-output example: ages and lifespans") {
    // Three 1 BTC outputs spent together at 2021-01-01 00:00:00.
    const Timestamp spend = *parse_timestamp("2021-01-01T00:00:00Z");
    std::vector<OutputRecord> records = {
        {1 * kSatoshiPerCoin, spend - 3285 * kSecondsPerDay, spend},  // 9 years
        {1 * kSatoshiPerCoin, spend - 548 * kSecondsPerDay, spend},   // ~1.5 years
        {1 * kSatoshiPerCoin, spend - 184 * kSecondsPerDay, spend},   // half year + days
    };
    CHECK(records[1].born == *parse_timestamp("2019-07-03T00:00:00Z"));

    const auto root = temp_dir("fig1");
    auto s = PartitionStore::build(root, kGenesis, records);
    const DayIndex death_day = day_index(spend, kGenesis);
    const DayIndex working_day =
        day_index(*parse_timestamp("2020-07-01T00:00:00Z"), kGenesis);

    // Lifespan buckets {9, 1, -1}, one coin each.
    const auto lifespans = engine::lifespan_distribution(s, death_day);
    CHECK(lifespans[index_of_label(9)] == 1 * kSatoshiPerCoin);
    CHECK(lifespans[index_of_label(1)] == 1 * kSatoshiPerCoin);
    CHECK(lifespans[index_of_label(-1)] == 1 * kSatoshiPerCoin);
    CHECK(bucket_total(lifespans) == engine::dead_total(s, death_day));

    // Ages at the working date: 3102d (within 5y-10y), exactly 365d and
    // exactly 1d (both on inclusive lower bounds) -> {9, 1, -7}.
    const auto ages = engine::age_distribution(s, working_day);
    CHECK(ages[index_of_label(9)] == 1 * kSatoshiPerCoin);
    CHECK(ages[index_of_label(1)] == 1 * kSatoshiPerCoin);
    CHECK(ages[index_of_label(-7)] == 1 * kSatoshiPerCoin);
    CHECK(bucket_total(ages) == 3 * kSatoshiPerCoin);

    // WAL of the cohort: (3285 + 548 + 184) / 3 = 1339 days exactly.
    auto wal = engine::wal_seconds(s, death_day);
    REQUIRE(wal.has_value());
    CHECK(*wal == doctest::Approx(1339.0 * kSecondsPerDay).epsilon(1e-12));
}

TEST_CASE("an immortal output walks the age buckets with constant total") {
    const auto root = temp_dir("immortal");
    std::vector<OutputRecord> records = {rec(777, 0, 43'200)};
    auto s = PartitionStore::build(root, kGenesis, records, 4000);

    auto bucket_at = [&](DayIndex d) {
        const auto ages = engine::age_distribution(s, d);
        CHECK(bucket_total(ages) == 777);
        for (std::size_t i = 0; i < kBucketCount; ++i) {
            if (ages[i] == 777) return bucket_label(i);
        }
        return 0;
    };
    CHECK(bucket_at(0) == -9);
    CHECK(bucket_at(1) == -7);
    CHECK(bucket_at(29) == -7);
    CHECK(bucket_at(30) == -5);
    CHECK(bucket_at(90) == -3);
    CHECK(bucket_at(180) == -1);
    CHECK(bucket_at(365) == 1);
    CHECK(bucket_at(730) == 3);
    CHECK(bucket_at(1095) == 5);
    CHECK(bucket_at(1460) == 7);
    CHECK(bucket_at(1825) == 9);
    CHECK(bucket_at(3650) == 11);
    CHECK(bucket_at(3999) == 11);
}

TEST_CASE("same-day birth and spend: in newborn, dead and -9, never in ages") {
    const auto root = temp_dir("sameday");
    std::vector<OutputRecord> records = {rec(42, 5, 1000, 5, 2000)};
    auto s = PartitionStore::build(root, kGenesis, records, 6);

    CHECK(engine::newborn_total(s, 5) == 42);
    CHECK(engine::dead_total(s, 5) == 42);
    CHECK(engine::lifespan_distribution(s, 5)[index_of_label(-9)] == 42);
    for (DayIndex d = 0; d <= 6; ++d) {
        CHECK(bucket_total(engine::age_distribution(s, d)) == 0);
    }
}

TEST_CASE("build_tables equals the brute-force oracle") {
    const auto records = random_records(424242, 3000, 60);
    const auto root = temp_dir("oracle-eq");
    auto s = PartitionStore::build(root, kGenesis, records, 90);

    const auto engine_tables = engine::build_tables(s, 0, 90, {.chunk_days = 14, .jobs = 1});
    const auto oracle_tables = oracle::oracle_tables(records, kGenesis, 0, 90);
    check_tables_equal(engine_tables, oracle_tables);
}

TEST_CASE("build_tables is invariant to chunking and parallelism") {
    const auto records = random_records(777, 2000, 50);
    const auto root = temp_dir("chunks");
    auto s = PartitionStore::build(root, kGenesis, records, 70);

    const auto base = engine::build_tables(s, 0, 70, {.chunk_days = 180, .jobs = 1});
    check_tables_equal(base, engine::build_tables(s, 0, 70, {.chunk_days = 30, .jobs = 1}));
    check_tables_equal(base, engine::build_tables(s, 0, 70, {.chunk_days = 1, .jobs = 1}));
    check_tables_equal(base, engine::build_tables(s, 0, 70, {.chunk_days = 7, .jobs = 4}));

    // Bit-identical WAL doubles across job counts.
    const auto parallel = engine::build_tables(s, 0, 70, {.chunk_days = 180, .jobs = 4});
    for (std::size_t i = 0; i < base.stxo.size(); ++i) {
        if (base.stxo[i].wal_seconds) {
            CHECK(*base.stxo[i].wal_seconds == *parallel.stxo[i].wal_seconds);
        }
    }
}

TEST_CASE("single-day range and subranges") {
    const auto records = random_records(5, 500, 20);
    const auto root = temp_dir("subrange");
    auto s = PartitionStore::build(root, kGenesis, records, 30);

    const auto one = engine::build_tables(s, 7, 7, {});
    REQUIRE(one.stxo.size() == 1);
    REQUIRE(one.utxo.size() == 1);
    CHECK(one.stxo[0].date == 7);

    const auto full = engine::build_tables(s, 0, 30, {});
    CHECK(one.stxo[0].newborn_sat == full.stxo[7].newborn_sat);
    CHECK(one.utxo[0].age_sat == full.utxo[7].age_sat);
}

TEST_CASE("conservation, supply identity and the alive-set recurrence") {
    const auto records = random_records(99, 2500, 40);
    const auto root = temp_dir("invariants");
    auto s = PartitionStore::build(root, kGenesis, records, 60);
    const auto tables = engine::build_tables(s, 0, 60, {});

    std::int64_t cumulative = 0;
    std::int64_t prev_alive = 0;
    for (std::size_t i = 0; i < tables.stxo.size(); ++i) {
        const auto& stxo = tables.stxo[i];
        CHECK(bucket_total(stxo.lifespan_sat) == stxo.dead_sat);
        CHECK(stxo.wal_seconds.has_value() == (stxo.dead_sat > 0));

        cumulative += stxo.newborn_sat - stxo.dead_sat;
        const std::int64_t alive = bucket_total(tables.utxo[i].age_sat);
        CHECK(alive == cumulative);
        CHECK(alive == prev_alive + stxo.newborn_sat - stxo.dead_sat);
        prev_alive = alive;
    }
}

TEST_CASE("WAL stays between the cohort's extreme lifespans") {
    const auto records = random_records(31337, 2000, 30);
    const auto root = temp_dir("wal-bounds");
    auto s = PartitionStore::build(root, kGenesis, records, 50);

    for (DayIndex d = 0; d <= 50; ++d) {
        const auto cohort = s.death_cohort(d);
        std::int64_t lo = std::numeric_limits<std::int64_t>::max();
        std::int64_t hi = 0;
        std::int64_t value = 0;
        for (const auto& r : cohort) {
            if (r.value_sat == 0) continue;
            lo = std::min(lo, r.lifespan_seconds());
            hi = std::max(hi, r.lifespan_seconds());
            value += r.value_sat;
        }
        const auto wal = engine::wal_seconds(s, d);
        if (value == 0) {
            CHECK(!wal.has_value());
        } else {
            REQUIRE(wal.has_value());
            CHECK(*wal >= static_cast<double>(lo) - 1e-6);
            CHECK(*wal <= static_cast<double>(hi) + 1e-6);
        }
    }
}
