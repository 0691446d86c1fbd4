#include "cohort/series.hpp"

#include <fmt/format.h>

#include "cohort/error.hpp"

namespace cohort::series {

std::vector<std::int64_t> net_new(const CohortTables& tables) {
    std::vector<std::int64_t> out;
    out.reserve(tables.stxo.size());
    for (const auto& row : tables.stxo) out.push_back(row.newborn_sat - row.dead_sat);
    return out;
}

std::vector<std::int64_t> circulating_supply(const CohortTables& tables) {
    if (!tables.stxo.empty() && tables.first_day != 0) {
        throw Error(ErrorKind::Argument,
                    fmt::format("supply needs tables starting at genesis, got day {}",
                                tables.first_day));
    }
    std::vector<std::int64_t> out;
    out.reserve(tables.stxo.size());
    std::int64_t running = 0;
    for (const auto& row : tables.stxo) {
        running += row.newborn_sat - row.dead_sat;
        out.push_back(running);
    }
    return out;
}

std::vector<std::optional<double>> velocity(const CohortTables& tables) {
    const auto supply = circulating_supply(tables);
    std::vector<std::optional<double>> out(tables.stxo.size());
    std::int64_t window_dead = 0;
    for (std::size_t i = 0; i < tables.stxo.size(); ++i) {
        window_dead += tables.stxo[i].dead_sat;
        if (i >= static_cast<std::size_t>(kVelocityWindowDays)) {
            window_dead -= tables.stxo[i - kVelocityWindowDays].dead_sat;
        }
        if (supply[i] > 0) {
            out[i] = static_cast<double>(window_dead) / static_cast<double>(supply[i]);
        }
    }
    return out;
}

}  // namespace cohort::series
