#include <doctest.h>

#include <cmath>
#include <vector>

#include "cohort/amount.hpp"
#include "cohort/error.hpp"
#include "cohort/rng.hpp"
#include "cohort/series.hpp"

using namespace cohort;

namespace {

CohortTables make_tables(const std::vector<std::pair<std::int64_t, std::int64_t>>& days,
                         DayIndex first_day = 0) {
    CohortTables tables;
    tables.genesis = CivilDate{2009, 1, 3};
    tables.first_day = first_day;
    for (std::size_t i = 0; i < days.size(); ++i) {
        StxoRow stxo;
        stxo.date = first_day + static_cast<DayIndex>(i);
        stxo.newborn_sat = days[i].first;
        stxo.dead_sat = days[i].second;
        tables.stxo.push_back(stxo);
        UtxoRow utxo;
        utxo.date = stxo.date;
        tables.utxo.push_back(utxo);
    }
    return tables;
}

std::int64_t btc(std::int64_t coins) { return coins * kSatoshiPerCoin; }

}  // namespace

TEST_CASE("net new and supply arithmetic") {
    const auto tables =
        make_tables({{btc(50), 0}, {btc(50), 0}, {btc(50), btc(25)}});
    const auto nn = series::net_new(tables);
    REQUIRE(nn.size() == 3);
    CHECK(nn[0] == btc(50));
    CHECK(nn[2] == btc(25));
    const auto supply = series::circulating_supply(tables);
    CHECK(supply == std::vector<std::int64_t>{btc(50), btc(100), btc(125)});
}

TEST_CASE("supply requires genesis-anchored tables") {
    const auto tables = make_tables({{btc(1), 0}}, 5);
    CHECK_THROWS_AS(series::circulating_supply(tables), Error);
}

TEST_CASE("velocity: constant-supply fixture") {
    // Day 0 mints 110 and burns 10; afterwards churn keeps supply at 100.
    std::vector<std::pair<std::int64_t, std::int64_t>> days;
    days.push_back({btc(110), btc(10)});
    for (int i = 1; i < 60; ++i) days.push_back({btc(10), btc(10)});
    const auto tables = make_tables(days);

    const auto v = series::velocity(tables);
    REQUIRE(v.size() == 60);
    REQUIRE(v[0].has_value());
    CHECK(*v[0] == doctest::Approx(0.1).epsilon(1e-12));  // clipped window
    for (std::size_t i = 0; i < 60; ++i) {
        REQUIRE(v[i].has_value());
        const double expected =
            static_cast<double>(std::min<std::size_t>(i + 1, 30)) * 10.0 / 100.0;
        CHECK(*v[i] == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(*v[30] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(*v[59] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("velocity: no spends means zero, zero supply means absent") {
    auto quiet = make_tables({{btc(5), 0}, {btc(5), 0}, {btc(5), 0}});
    for (const auto& v : series::velocity(quiet)) {
        REQUIRE(v.has_value());
        CHECK(*v == 0.0);
    }

    auto empty = make_tables({{0, 0}, {0, 0}});
    for (const auto& v : series::velocity(empty)) CHECK(!v.has_value());
}

TEST_CASE("velocity is invariant under value scaling") {
    Rng rng(555);
    std::vector<std::pair<std::int64_t, std::int64_t>> days;
    std::int64_t alive = 0;
    for (int i = 0; i < 120; ++i) {
        const std::int64_t born = static_cast<std::int64_t>(rng.next_below(1'000'000));
        const std::int64_t dead =
            alive > 0 ? static_cast<std::int64_t>(
                            rng.next_below(static_cast<std::uint64_t>(alive) / 2 + 1))
                      : 0;
        alive += born - dead;
        days.push_back({born, dead});
    }
    const auto base = series::velocity(make_tables(days));

    for (const std::int64_t k : {2, 10, 1000}) {
        auto scaled_days = days;
        for (auto& [born, dead] : scaled_days) {
            born *= k;
            dead *= k;
        }
        const auto scaled = series::velocity(make_tables(scaled_days));
        REQUIRE(scaled.size() == base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            REQUIRE(base[i].has_value() == scaled[i].has_value());
            if (base[i]) {
                CHECK(std::abs(*base[i] - *scaled[i]) <=
                      1e-12 * std::max(1.0, std::abs(*base[i])));
            }
        }
    }
}

TEST_CASE("velocity never goes negative") {
    Rng rng(556);
    std::vector<std::pair<std::int64_t, std::int64_t>> days;
    std::int64_t alive = 0;
    for (int i = 0; i < 200; ++i) {
        const std::int64_t born = static_cast<std::int64_t>(rng.next_below(100'000));
        const std::int64_t dead = alive > 0 ? static_cast<std::int64_t>(rng.next_below(
                                                  static_cast<std::uint64_t>(alive)))
                                            : 0;
        alive += born - dead;
        days.push_back({born, dead});
    }
    for (const auto& v : series::velocity(make_tables(days))) {
        if (v) CHECK(*v >= 0.0);
    }
}
