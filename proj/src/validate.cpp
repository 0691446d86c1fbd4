#include "cohort/validate.hpp"

#include <cstdlib>

#include <fmt/format.h>

#include "cohort/amount.hpp"
#include "cohort/buckets.hpp"
#include "cohort/series.hpp"
#include "cohort/time.hpp"

namespace cohort::validate {

namespace {

std::string day_string(const CohortTables& tables, DayIndex d) {
    return format_date_dash(date_of_day(d, tables.genesis));
}

std::int64_t block_subsidy(const HalvingSchedule& s, std::int64_t block) {
    const std::int64_t halvings = block / s.halving_interval_blocks;
    if (halvings >= 63) return 0;
    return s.initial_subsidy_sat >> halvings;
}

}  // namespace

nlohmann::json CheckReport::to_json() const {
    nlohmann::json j = {{"check", check}, {"status", pass ? "PASS" : "FAIL"}};
    if (first_failure) {
        j["first_failure"] = {{"date", first_failure->date},
                              {"expected", first_failure->expected},
                              {"actual", first_failure->actual}};
    }
    return j;
}

std::string CheckReport::to_text() const {
    if (pass) return fmt::format("[PASS] {}", check);
    if (!first_failure) return fmt::format("[FAIL] {}", check);
    return fmt::format("[FAIL] {} at {}: expected {}, got {}", check, first_failure->date,
                       first_failure->expected, first_failure->actual);
}

CheckReport check_supply_consistency(const CohortTables& tables) {
    CheckReport report;
    report.check = "supply-consistency";

    std::int64_t cumulative = 0;
    const std::size_t n = std::min(tables.stxo.size(), tables.utxo.size());
    for (std::size_t i = 0; i < n; ++i) {
        cumulative += tables.stxo[i].newborn_sat - tables.stxo[i].dead_sat;
        const std::int64_t bucket_sum = bucket_total(tables.utxo[i].age_sat);
        if (bucket_sum != cumulative) {
            report.pass = false;
            report.first_failure = CheckFailure{
                day_string(tables, tables.utxo[i].date),
                fmt::format("{} satoshi cumulative net new", cumulative),
                fmt::format("{} satoshi in age buckets (delta {})", bucket_sum,
                            bucket_sum - cumulative)};
            return report;
        }
    }
    if (tables.stxo.size() != tables.utxo.size()) {
        report.pass = false;
        report.first_failure =
            CheckFailure{"(table lengths)", fmt::format("{} rows", tables.stxo.size()),
                         fmt::format("{} rows", tables.utxo.size())};
        return report;
    }
    report.pass = true;
    return report;
}

CheckReport check_halving(const CohortTables& tables, const HalvingSchedule& schedule) {
    CheckReport report;
    report.check = "halving";
    if (schedule.initial_subsidy_sat <= 0 || schedule.halving_interval_blocks <= 0 ||
        schedule.blocks_per_day <= 0) {
        report.pass = false;
        report.first_failure =
            CheckFailure{"(schedule)", "positive subsidy, interval and blocks/day",
                         "non-positive parameter"};
        return report;
    }

    for (std::size_t i = 0; i < tables.stxo.size(); ++i) {
        const DayIndex day = tables.stxo[i].date;
        std::int64_t expected = 0;
        for (std::int64_t b = 0; b < schedule.blocks_per_day; ++b) {
            expected += block_subsidy(schedule, day * schedule.blocks_per_day + b);
        }
        const std::int64_t actual = tables.stxo[i].newborn_sat - tables.stxo[i].dead_sat;
        const std::int64_t tolerance = block_subsidy(schedule, day * schedule.blocks_per_day);
        if (std::llabs(actual - expected) > tolerance) {
            report.pass = false;
            report.first_failure =
                CheckFailure{day_string(tables, day),
                             fmt::format("{} BTC net new", btc_from_satoshi(expected)),
                             fmt::format("{} BTC net new", btc_from_satoshi(actual))};
            return report;
        }
    }
    report.pass = true;
    return report;
}

CheckReport check_continuity(const CohortTables& tables) {
    CheckReport report;
    report.check = "continuity";

    if (tables.stxo.size() != tables.utxo.size()) {
        report.pass = false;
        report.first_failure =
            CheckFailure{"(table lengths)", fmt::format("{} rows", tables.stxo.size()),
                         fmt::format("{} rows", tables.utxo.size())};
        return report;
    }
    for (std::size_t i = 0; i < tables.stxo.size(); ++i) {
        const DayIndex expected = tables.first_day + static_cast<DayIndex>(i);
        if (tables.stxo[i].date != expected) {
            report.pass = false;
            report.first_failure =
                CheckFailure{day_string(tables, expected), "contiguous STXO date",
                             day_string(tables, tables.stxo[i].date)};
            return report;
        }
        if (tables.utxo[i].date != expected) {
            report.pass = false;
            report.first_failure =
                CheckFailure{day_string(tables, expected), "contiguous UTXO date",
                             day_string(tables, tables.utxo[i].date)};
            return report;
        }
    }
    report.pass = true;
    return report;
}

}  // namespace cohort::validate
