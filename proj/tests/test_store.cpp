#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cohort/error.hpp"
#include "cohort/rng.hpp"
#include "cohort/store.hpp"

using namespace cohort;
using store::PartitionStore;
namespace fs = std::filesystem;

namespace {

const CivilDate kGenesis{2009, 1, 3};

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cohort-store-" + name);
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

std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
    std::map<std::string, std::string> tree;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::string data((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        tree[fs::relative(entry.path(), root).string()] = std::move(data);
    }
    return tree;
}

}  // namespace

TEST_CASE("build partitions records by birth and death day") {
    const auto root = temp_dir("build-basic");
    std::vector<OutputRecord> records = {
        rec(100, 0, 10),
        rec(200, 1, 20),
        rec(300, 2, 30),
    };
    auto s = PartitionStore::build(root, kGenesis, records);
    CHECK(s.last_day() == 2);
    CHECK(s.record_count() == 3);
    CHECK(s.spent_count() == 0);
    CHECK(s.birth_cohort(0).size() == 1);
    CHECK(s.birth_cohort(1).size() == 1);
    CHECK(s.birth_cohort(2).size() == 1);
    for (DayIndex d = 0; d <= 2; ++d) CHECK(s.death_cohort(d).empty());
}

TEST_CASE("a spent record lands in both families") {
    const auto root = temp_dir("build-spent");
    std::vector<OutputRecord> records = {rec(100, 0, 10, 5, 60)};
    auto s = PartitionStore::build(root, kGenesis, records);
    CHECK(s.last_day() == 5);
    REQUIRE(s.birth_cohort(0).size() == 1);
    REQUIRE(s.death_cohort(5).size() == 1);
    CHECK(s.birth_cohort(0)[0] == records[0]);
    CHECK(s.death_cohort(5)[0] == records[0]);
    CHECK(s.spent_count() == 1);
}

TEST_CASE("day boundaries: 23:59:59 stays, midnight rolls over") {
    const auto root = temp_dir("boundaries");
    std::vector<OutputRecord> records = {
        rec(1, 3, 86'399),   // born 23:59:59 of day 3
        rec(2, 0, 0, 4, 0),  // spent exactly at the midnight that starts day 4
    };
    auto s = PartitionStore::build(root, kGenesis, records);
    CHECK(s.birth_cohort(3).size() == 1);
    CHECK(s.birth_cohort(4).empty());
    CHECK(s.death_cohort(3).empty());
    CHECK(s.death_cohort(4).size() == 1);
}

TEST_CASE("store reopens with identical contents") {
    const auto root = temp_dir("reopen");
    std::vector<OutputRecord> records = {rec(100, 0, 10, 2, 20), rec(50, 1, 5)};
    PartitionStore::build(root, kGenesis, records);
    auto s = PartitionStore::open(root);
    CHECK(s.genesis() == kGenesis);
    CHECK(s.last_day() == 2);
    CHECK(s.record_count() == 2);
    CHECK(s.spent_count() == 1);
    CHECK(s.birth_cohort(0).size() == 1);
    CHECK(s.death_cohort(2).size() == 1);
}

TEST_CASE("scan_alive_window applies the alive predicate") {
    const auto root = temp_dir("window");
    std::vector<OutputRecord> records = {
        rec(1, 0, 10, 2, 10),    // dead before window [5,10]
        rec(2, 0, 20),           // immortal
        rec(4, 0, 30, 5, 0),     // spent at end_of(4): dead for window [5,10]
        rec(8, 0, 40, 6, 10),    // alive into the window
        rec(16, 7, 10),          // born inside the window
    };
    auto s = PartitionStore::build(root, kGenesis, records, 10);
    std::int64_t sum = 0;
    s.scan_alive_window(5, 10, [&](const OutputRecord& r) { sum += r.value_sat; });
    CHECK(sum == 2 + 8 + 16);

    std::int64_t sum2 = 0;
    s.scan_alive_window(1, 1, [&](const OutputRecord& r) { sum2 += r.value_sat; });
    CHECK(sum2 == 1 + 2 + 4 + 8);  // the day-2 death is still alive at day 1

    CHECK_THROWS_AS(s.scan_alive_window(4, 3, [](const OutputRecord&) {}), Error);
}

TEST_CASE("append: empty day advances the counter and writes empty segments") {
    const auto root = temp_dir("append-empty");
    auto s = PartitionStore::create(root, kGenesis);
    CHECK(s.last_day() == -1);
    s.append_day(0, {});
    CHECK(s.last_day() == 0);
    CHECK(s.birth_cohort(0).empty());
    CHECK(s.death_cohort(0).empty());
    CHECK(fs::exists(root / "birth" / "2009-01-03.seg"));
    CHECK(fs::exists(root / "death" / "2009-01-03.seg"));
}

TEST_CASE("append: spend of an old record backfills its birth segment") {
    const auto root = temp_dir("append-backfill");
    auto s = PartitionStore::create(root, kGenesis);
    s.append_day(0, std::vector<OutputRecord>{rec(100, 0, 10)});
    for (DayIndex d = 1; d < 100; ++d) s.append_day(d, {});

    auto spend = rec(100, 0, 10, 100, 10);
    s.append_day(100, std::vector<OutputRecord>{spend});
    REQUIRE(s.death_cohort(100).size() == 1);
    CHECK(s.death_cohort(100)[0].lifespan_seconds() == 100 * kSecondsPerDay);
    REQUIRE(s.birth_cohort(0).size() == 1);
    CHECK(s.birth_cohort(0)[0].spent == spend.spent);
    CHECK(s.spent_count() == 1);
}

TEST_CASE("append: day gaps and unknown spends are rejected") {
    const auto root = temp_dir("append-errors");
    auto s = PartitionStore::create(root, kGenesis);
    s.append_day(0, std::vector<OutputRecord>{rec(100, 0, 10)});

    try {
        s.append_day(2, {});
        FAIL("gap accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Sequencing);
    }

    try {
        s.append_day(1, std::vector<OutputRecord>{rec(999, 0, 10, 1, 0)});
        FAIL("unknown spend accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Integrity);
    }

    // Double spend of the same stored record.
    s.append_day(1, std::vector<OutputRecord>{rec(100, 0, 10, 1, 0)});
    try {
        s.append_day(2, std::vector<OutputRecord>{rec(100, 0, 10, 2, 0)});
        FAIL("double spend accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Integrity);
    }
}

TEST_CASE("bulk build and day-by-day appends produce identical bytes") {
    const auto bulk_root = temp_dir("equiv-bulk");
    const auto incr_root = temp_dir("equiv-incr");

    // Births every day, some same-day spends, some backfilled later.
    std::vector<OutputRecord> records;
    for (DayIndex d = 0; d < 30; ++d) {
        records.push_back(rec(1000 + d, d, 3600));
        if (d % 3 == 0) records.push_back(rec(1, d, 100, d, 200));
        if (d >= 10) records.push_back(rec(50 + d, d - 10, 500, d, 900));
    }
    PartitionStore::build(bulk_root, kGenesis, records, 30);

    auto incr = PartitionStore::create(incr_root, kGenesis);
    for (DayIndex d = 0; d <= 30; ++d) {
        std::vector<OutputRecord> day_batch;
        for (const auto& r : records) {
            const DayIndex born_day = day_index(r.born, kGenesis);
            const DayIndex dead_day = r.is_spent() ? day_index(r.spent, kGenesis) : -1;
            if (born_day == d) {
                OutputRecord copy = r;
                if (dead_day != d) copy.spent = kUnspent;
                day_batch.push_back(copy);
            } else if (dead_day == d) {
                day_batch.push_back(r);
            }
        }
        incr.append_day(d, day_batch);
    }

    CHECK(snapshot_tree(bulk_root) == snapshot_tree(incr_root));
}

TEST_CASE("segment corruption is caught by checksums") {
    const auto root = temp_dir("corrupt");
    PartitionStore::build(root, kGenesis,
                          std::vector<OutputRecord>{rec(100, 0, 10), rec(7, 0, 20)});
    {
        std::fstream f(root / "birth" / "2009-01-03.seg",
                       std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put('\x5a');
    }
    auto s = PartitionStore::open(root);
    CHECK_THROWS_AS(s.birth_cohort(0), Error);
}

TEST_CASE("writer lock excludes a second writer") {
    const auto root = temp_dir("lock");
    store::WriterLock lock(root);
    CHECK_THROWS_AS([&] { store::WriterLock second(root); }(), Error);
}

TEST_CASE("rebuilding with identical input is byte-identical") {
    const auto root = temp_dir("idempotent");
    std::vector<OutputRecord> records = {rec(100, 0, 10, 3, 20), rec(50, 1, 5)};
    PartitionStore::build(root, kGenesis, records);
    const auto first = snapshot_tree(root);
    PartitionStore::build(root, kGenesis, records);
    CHECK(snapshot_tree(root) == first);
}

TEST_CASE("cohort sizes reconcile with the manifest counts") {
    const auto root = temp_dir("reconcile");
    std::vector<OutputRecord> records;
    Rng rng(61);
    for (int i = 0; i < 400; ++i) {
        const auto born_day = static_cast<DayIndex>(rng.next_below(20));
        if (rng.next_below(2) == 0) {
            records.push_back(rec(i, born_day, 100 + i));
        } else {
            records.push_back(
                rec(i, born_day, 100 + i,
                    born_day + static_cast<DayIndex>(rng.next_below(10)), 50));
        }
    }
    auto s = PartitionStore::build(root, kGenesis, records);

    std::uint64_t births = 0;
    std::uint64_t deaths = 0;
    for (DayIndex d = 0; d <= s.last_day(); ++d) {
        births += s.birth_cohort(d).size();
        deaths += s.death_cohort(d).size();
    }
    CHECK(births == s.record_count());
    CHECK(deaths == s.spent_count());
    CHECK(births == records.size());
}

TEST_CASE("a wider window scans a superset of a narrower one") {
    const auto root = temp_dir("window-subset");
    std::vector<OutputRecord> records;
    Rng rng(62);
    for (int i = 0; i < 300; ++i) {
        const auto born_day = static_cast<DayIndex>(rng.next_below(30));
        if (rng.next_below(3) == 0) {
            records.push_back(rec(1 + i, born_day, 40 + i));
        } else {
            records.push_back(
                rec(1 + i, born_day, 40 + i,
                    born_day + static_cast<DayIndex>(rng.next_below(15)), 75));
        }
    }
    auto s = PartitionStore::build(root, kGenesis, records, 45);

    auto collect = [&](DayIndex a, DayIndex b) {
        std::vector<OutputRecord> out;
        s.scan_alive_window(a, b, [&](const OutputRecord& r) { out.push_back(r); });
        std::sort(out.begin(), out.end(), record_less);
        return out;
    };
    const auto outer = collect(5, 40);
    const auto inner = collect(12, 25);
    // Everything alive somewhere in [12,25] is alive somewhere in [5,40].
    CHECK(std::includes(outer.begin(), outer.end(), inner.begin(), inner.end(),
                        record_less));
}
