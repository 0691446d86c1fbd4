#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "cohort/records.hpp"

namespace cohort::exporter {

//! STXO table: `date,newborn,dead,WAL,-9,-7,-5,-3,-1,1,3,5,7,9,11`.
//! Dates as YYYY/MM/DD, amounts as 8-decimal BTC, WAL in days with 6
//! decimals (empty field when the cohort is empty). One row per day,
//! ascending; byte-deterministic.
void export_stxo_csv(const CohortTables& tables, const std::filesystem::path& path);

//! UTXO table: `date,-9,-7,-5,-3,-1,1,3,5,7,9,11`, conventions as above.
void export_utxo_csv(const CohortTables& tables, const std::filesystem::path& path);

//! Derived series: `date,net_new,supply,velocity` (velocity empty where
//! undefined).
void export_series_csv(const CohortTables& tables, const std::filesystem::path& path);

//! Re-read exported STXO/UTXO CSVs. Amounts round-trip exactly; dates are
//! kept as day offsets from the first row so gaps and duplicates survive
//! for check_continuity to find. Either path may be empty to import just
//! one table.
CohortTables import_tables(const std::filesystem::path& stxo_path,
                           const std::filesystem::path& utxo_path);

//! The published file-name convention: <chain>Result<STXO|UTXO><end>.csv.
std::string result_file_name(const std::string& chain, bool stxo, CivilDate end_date);

enum class ChartKind { LifespanShare, AgeStack, SupplyReward, Wal, Velocity };

std::optional<ChartKind> chart_kind_from_name(const std::string& name);

//! Self-contained declarative chart spec (Vega-Lite dialect, data inlined).
//! LifespanShare normalizes bucket columns to per-day percentages.
void emit_chart_spec(const CohortTables& tables, ChartKind kind,
                     const std::filesystem::path& path);

struct CellDiff {
    std::uint64_t row = 0;      // 1-based, header = row 1
    std::string column;
    std::string left;
    std::string right;
};

struct DiffResult {
    std::uint64_t differing_cells = 0;
    std::optional<CellDiff> first;
};

//! Cell-by-cell CSV comparison. Exact string comparison by default; with
//! a tolerance, cells that both parse as numbers compare numerically.
DiffResult diff_csv(const std::filesystem::path& left, const std::filesystem::path& right,
                    std::optional<double> tolerance = std::nullopt);

}  // namespace cohort::exporter
