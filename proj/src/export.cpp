#include "cohort/export.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cohort/amount.hpp"
#include "cohort/buckets.hpp"
#include "cohort/error.hpp"
#include "cohort/series.hpp"
#include "cohort/time.hpp"

namespace cohort::exporter {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kStxoHeader =
    "date,newborn,dead,WAL,-9,-7,-5,-3,-1,1,3,5,7,9,11";
constexpr std::string_view kUtxoHeader = "date,-9,-7,-5,-3,-1,1,3,5,7,9,11";

void write_text(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, fmt::format("cannot create {}", path.string()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::Io, fmt::format("write failed: {}", path.string()));
}

std::string wal_days_field(const std::optional<double>& wal_seconds) {
    if (!wal_seconds) return {};
    return fmt::format("{:.6f}", *wal_seconds / static_cast<double>(kSecondsPerDay));
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, fmt::format("cannot open {}", path.string()));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        rows.push_back(split_line(line));
    }
    return rows;
}

std::int64_t parse_btc_field(const fs::path& path, std::size_t line, const std::string& text) {
    auto sat = satoshi_from_btc(text);
    if (!sat) {
        throw Error(ErrorKind::Input,
                    fmt::format("{}:{}: bad amount '{}'", path.string(), line, text));
    }
    return *sat;
}

}  // namespace

void export_stxo_csv(const CohortTables& tables, const fs::path& path) {
    std::string out{kStxoHeader};
    out += '\n';
    for (const auto& row : tables.stxo) {
        out += format_date_slash(date_of_day(row.date, tables.genesis));
        out += ',';
        out += btc_from_satoshi(row.newborn_sat);
        out += ',';
        out += btc_from_satoshi(row.dead_sat);
        out += ',';
        out += wal_days_field(row.wal_seconds);
        for (const auto bucket : row.lifespan_sat) {
            out += ',';
            out += btc_from_satoshi(bucket);
        }
        out += '\n';
    }
    write_text(path, out);
}

void export_utxo_csv(const CohortTables& tables, const fs::path& path) {
    std::string out{kUtxoHeader};
    out += '\n';
    for (const auto& row : tables.utxo) {
        out += format_date_slash(date_of_day(row.date, tables.genesis));
        for (const auto bucket : row.age_sat) {
            out += ',';
            out += btc_from_satoshi(bucket);
        }
        out += '\n';
    }
    write_text(path, out);
}

void export_series_csv(const CohortTables& tables, const fs::path& path) {
    const auto supply = series::circulating_supply(tables);
    const auto vel = series::velocity(tables);
    std::string out = "date,net_new,supply,velocity\n";
    for (std::size_t i = 0; i < tables.stxo.size(); ++i) {
        const auto& row = tables.stxo[i];
        out += fmt::format("{},{},{},{}\n",
                           format_date_slash(date_of_day(row.date, tables.genesis)),
                           btc_from_satoshi(row.newborn_sat - row.dead_sat),
                           btc_from_satoshi(supply[i]),
                           vel[i] ? fmt::format("{:.8f}", *vel[i]) : std::string());
    }
    write_text(path, out);
}

CohortTables import_tables(const fs::path& stxo_path, const fs::path& utxo_path) {
    CohortTables tables;
    bool have_genesis = false;

    auto day_offset = [&](const fs::path& path, std::size_t line,
                          const std::string& text) -> DayIndex {
        auto date = parse_date(text);
        if (!date) {
            throw Error(ErrorKind::Input,
                        fmt::format("{}:{}: bad date '{}'", path.string(), line, text));
        }
        if (!have_genesis) {
            tables.genesis = *date;
            have_genesis = true;
        }
        return (midnight_of(*date) - midnight_of(tables.genesis)) / kSecondsPerDay;
    };

    if (!stxo_path.empty()) {
        const auto rows = read_csv(stxo_path);
        if (rows.empty() || fmt::to_string(fmt::join(rows[0], ",")) != kStxoHeader) {
            throw Error(ErrorKind::Input,
                        fmt::format("{}: expected STXO header '{}'", stxo_path.string(),
                                    kStxoHeader));
        }
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& fields = rows[i];
            if (fields.size() != 15) {
                throw Error(ErrorKind::Input,
                            fmt::format("{}:{}: expected 15 fields, got {}",
                                        stxo_path.string(), i + 1, fields.size()));
            }
            StxoRow row;
            row.date = day_offset(stxo_path, i + 1, fields[0]);
            row.newborn_sat = parse_btc_field(stxo_path, i + 1, fields[1]);
            row.dead_sat = parse_btc_field(stxo_path, i + 1, fields[2]);
            if (!fields[3].empty()) {
                double days = 0;
                auto [p, ec] = std::from_chars(fields[3].data(),
                                               fields[3].data() + fields[3].size(), days);
                if (ec != std::errc() || p != fields[3].data() + fields[3].size()) {
                    throw Error(ErrorKind::Input,
                                fmt::format("{}:{}: bad WAL '{}'", stxo_path.string(), i + 1,
                                            fields[3]));
                }
                row.wal_seconds = days * static_cast<double>(kSecondsPerDay);
            }
            for (std::size_t k = 0; k < kBucketCount; ++k) {
                row.lifespan_sat[k] = parse_btc_field(stxo_path, i + 1, fields[4 + k]);
            }
            tables.stxo.push_back(std::move(row));
        }
    }

    if (!utxo_path.empty()) {
        const auto rows = read_csv(utxo_path);
        if (rows.empty() || fmt::to_string(fmt::join(rows[0], ",")) != kUtxoHeader) {
            throw Error(ErrorKind::Input,
                        fmt::format("{}: expected UTXO header '{}'", utxo_path.string(),
                                    kUtxoHeader));
        }
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& fields = rows[i];
            if (fields.size() != 12) {
                throw Error(ErrorKind::Input,
                            fmt::format("{}:{}: expected 12 fields, got {}",
                                        utxo_path.string(), i + 1, fields.size()));
            }
            UtxoRow row;
            row.date = day_offset(utxo_path, i + 1, fields[0]);
            for (std::size_t k = 0; k < kBucketCount; ++k) {
                row.age_sat[k] = parse_btc_field(utxo_path, i + 1, fields[1 + k]);
            }
            tables.utxo.push_back(std::move(row));
        }
    }

    if (!tables.stxo.empty()) {
        tables.first_day = tables.stxo[0].date;
    } else if (!tables.utxo.empty()) {
        tables.first_day = tables.utxo[0].date;
    }
    return tables;
}

std::string result_file_name(const std::string& chain, bool stxo, CivilDate end_date) {
    return fmt::format("{}Result{}{}.csv", chain, stxo ? "STXO" : "UTXO",
                       format_date_dash(end_date));
}

std::optional<ChartKind> chart_kind_from_name(const std::string& name) {
    if (name == "lifespan-share") return ChartKind::LifespanShare;
    if (name == "age-stack") return ChartKind::AgeStack;
    if (name == "supply-reward") return ChartKind::SupplyReward;
    if (name == "wal") return ChartKind::Wal;
    if (name == "velocity") return ChartKind::Velocity;
    return std::nullopt;
}

void emit_chart_spec(const CohortTables& tables, ChartKind kind, const fs::path& path) {
    json values = json::array();
    json spec = {
        {"$schema", "https://vega.github.io/schema/vega-lite/v5.json"},
        {"width", 800},
        {"height", 400},
    };

    auto date_str = [&](DayIndex d) {
        return format_date_dash(date_of_day(d, tables.genesis));
    };
    auto btc = [](std::int64_t sat) {
        return static_cast<double>(sat) / static_cast<double>(kSatoshiPerCoin);
    };

    switch (kind) {
        case ChartKind::LifespanShare: {
            for (const auto& row : tables.stxo) {
                if (row.dead_sat == 0) continue;
                for (std::size_t k = 0; k < kBucketCount; ++k) {
                    values.push_back(
                        {{"date", date_str(row.date)},
                         {"bucket", fmt::format("{}", bucket_label(k))},
                         {"share", 100.0 * static_cast<double>(row.lifespan_sat[k]) /
                                       static_cast<double>(row.dead_sat)}});
                }
            }
            spec["description"] = "Lifespan distribution of spent outputs, percent per day";
            spec["mark"] = "line";
            spec["encoding"] = {
                {"x", {{"field", "date"}, {"type", "temporal"}}},
                {"y",
                 {{"field", "share"},
                  {"type", "quantitative"},
                  {"scale", {{"type", "log"}}},
                  {"title", "share of spent value (%)"}}},
                {"color", {{"field", "bucket"}, {"type", "nominal"}}}};
            break;
        }
        case ChartKind::AgeStack: {
            for (const auto& row : tables.utxo) {
                for (std::size_t k = 0; k < kBucketCount; ++k) {
                    values.push_back({{"date", date_str(row.date)},
                                      {"bucket", fmt::format("{}", bucket_label(k))},
                                      {"btc", btc(row.age_sat[k])}});
                }
            }
            spec["description"] = "Unspent value by age, stacked to the circulating supply";
            spec["mark"] = "area";
            spec["encoding"] = {
                {"x", {{"field", "date"}, {"type", "temporal"}}},
                {"y",
                 {{"field", "btc"},
                  {"type", "quantitative"},
                  {"stack", "zero"},
                  {"title", "BTC"}}},
                {"color", {{"field", "bucket"}, {"type", "nominal"}}}};
            break;
        }
        case ChartKind::SupplyReward: {
            const auto supply = series::circulating_supply(tables);
            for (std::size_t i = 0; i < tables.stxo.size(); ++i) {
                values.push_back(
                    {{"date", date_str(tables.stxo[i].date)},
                     {"series", "net new"},
                     {"btc", btc(tables.stxo[i].newborn_sat - tables.stxo[i].dead_sat)}});
                values.push_back({{"date", date_str(tables.stxo[i].date)},
                                  {"series", "supply"},
                                  {"btc", btc(supply[i])}});
            }
            spec["description"] = "Daily net new value and circulating supply";
            spec["mark"] = "line";
            spec["encoding"] = {
                {"x", {{"field", "date"}, {"type", "temporal"}}},
                {"y", {{"field", "btc"}, {"type", "quantitative"}}},
                {"color", {{"field", "series"}, {"type", "nominal"}}}};
            break;
        }
        case ChartKind::Wal: {
            for (const auto& row : tables.stxo) {
                if (!row.wal_seconds) continue;
                values.push_back(
                    {{"date", date_str(row.date)},
                     {"days", *row.wal_seconds / static_cast<double>(kSecondsPerDay)}});
            }
            spec["description"] = "Weighted average lifespan of spent outputs (days)";
            spec["mark"] = "line";
            spec["encoding"] = {{"x", {{"field", "date"}, {"type", "temporal"}}},
                                {"y", {{"field", "days"}, {"type", "quantitative"}}}};
            break;
        }
        case ChartKind::Velocity: {
            const auto vel = series::velocity(tables);
            for (std::size_t i = 0; i < tables.stxo.size(); ++i) {
                if (!vel[i]) continue;
                values.push_back(
                    {{"date", date_str(tables.stxo[i].date)}, {"velocity", *vel[i]}});
            }
            spec["description"] = "30-day token velocity";
            spec["mark"] = "line";
            spec["encoding"] = {{"x", {{"field", "date"}, {"type", "temporal"}}},
                                {"y", {{"field", "velocity"}, {"type", "quantitative"}}}};
            break;
        }
    }

    spec["data"] = {{"values", std::move(values)}};
    write_text(path, spec.dump(2) + "\n");
}

DiffResult diff_csv(const fs::path& left, const fs::path& right,
                    std::optional<double> tolerance) {
    const auto a = read_csv(left);
    const auto b = read_csv(right);
    DiffResult result;

    auto header_name = [&](std::size_t col) -> std::string {
        if (!a.empty() && col < a[0].size()) return a[0][col];
        return fmt::format("column {}", col + 1);
    };

    auto cells_equal = [&](const std::string& x, const std::string& y) {
        if (x == y) return true;
        if (!tolerance) return false;
        double dx = 0, dy = 0;
        auto [px, ecx] = std::from_chars(x.data(), x.data() + x.size(), dx);
        auto [py, ecy] = std::from_chars(y.data(), y.data() + y.size(), dy);
        if (ecx != std::errc() || px != x.data() + x.size() || ecy != std::errc() ||
            py != y.data() + y.size()) {
            return false;
        }
        return std::fabs(dx - dy) <= *tolerance;
    };

    const std::size_t rows = std::max(a.size(), b.size());
    for (std::size_t r = 0; r < rows; ++r) {
        if (r >= a.size() || r >= b.size()) {
            ++result.differing_cells;
            if (!result.first) {
                result.first = CellDiff{r + 1, "(row)",
                                        r < a.size() ? fmt::to_string(fmt::join(a[r], ","))
                                                     : "<missing>",
                                        r < b.size() ? fmt::to_string(fmt::join(b[r], ","))
                                                     : "<missing>"};
            }
            continue;
        }
        const std::size_t cols = std::max(a[r].size(), b[r].size());
        for (std::size_t c = 0; c < cols; ++c) {
            const std::string x = c < a[r].size() ? a[r][c] : "<missing>";
            const std::string y = c < b[r].size() ? b[r][c] : "<missing>";
            if (!cells_equal(x, y)) {
                ++result.differing_cells;
                if (!result.first) result.first = CellDiff{r + 1, header_name(c), x, y};
            }
        }
    }
    return result;
}

}  // namespace cohort::exporter
