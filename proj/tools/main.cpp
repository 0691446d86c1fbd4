#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cohort/amount.hpp"
#include "cohort/engine.hpp"
#include "cohort/error.hpp"
#include "cohort/export.hpp"
#include "cohort/ingest.hpp"
#include "cohort/oracle.hpp"
#include "cohort/series.hpp"
#include "cohort/store.hpp"
#include "cohort/synth.hpp"
#include "cohort/validate.hpp"

namespace {

using namespace cohort;

CivilDate require_date(const std::string& text, const char* what) {
    auto date = parse_date(text);
    if (!date) {
        throw Error(ErrorKind::Argument, fmt::format("bad {} '{}'", what, text));
    }
    return *date;
}

void report_parse_stats(const ingest::ParseStats& stats) {
    fmt::print("accepted {} rows, rejected {}\n", stats.accepted, stats.rejected);
    for (const auto& issue : stats.issues) {
        fmt::print(stderr, "  line {}: {}\n", issue.line, issue.message);
    }
    if (stats.rejected > stats.issues.size()) {
        fmt::print(stderr, "  ... {} more rejected rows\n",
                   stats.rejected - stats.issues.size());
    }
}

struct ExportPaths {
    std::filesystem::path stxo;
    std::filesystem::path utxo;
};

ExportPaths export_tables(const CohortTables& tables, const std::filesystem::path& out_dir,
                          const std::string& chain) {
    std::filesystem::create_directories(out_dir);
    const CivilDate end = date_of_day(tables.last_day(), tables.genesis);
    ExportPaths paths{out_dir / exporter::result_file_name(chain, true, end),
                      out_dir / exporter::result_file_name(chain, false, end)};
    exporter::export_stxo_csv(tables, paths.stxo);
    exporter::export_utxo_csv(tables, paths.utxo);
    return paths;
}

int run(int argc, char** argv) {
    CLI::App app{"UTXO daily cohort analysis: partitioned stores, STXO/UTXO tables, "
                 "derived series, synthetic chains and validation"};
    app.require_subcommand(1);
    app.fallthrough();  // --jobs/--chunk-days may follow the subcommand

    int jobs = 1;
    DayIndex chunk_days = 180;
    app.add_option("--jobs", jobs, "worker threads for table building")
        ->capture_default_str();
    app.add_option("--chunk-days", chunk_days,
                   "age-scan window width in days")
        ->capture_default_str();

    // --- synth ---------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic chain");
    std::string synth_config;
    std::string synth_out;
    std::string synth_per_day;
    std::optional<std::int64_t> synth_days;
    std::optional<std::uint64_t> synth_seed;
    synth_cmd->add_option("--config", synth_config, "chain config JSON");
    synth_cmd->add_option("--out", synth_out, "derived CSV to write")->required();
    synth_cmd->add_option("--per-day", synth_per_day,
                          "also write per-day append files into this directory");
    synth_cmd->add_option("--days", synth_days, "override total days");
    synth_cmd->add_option("--seed", synth_seed, "override seed");

    // --- ingest --------------------------------------------------------
    auto* ingest_cmd =
        app.add_subcommand("ingest", "load a derived file or join raw files into a store");
    std::string ingest_store, ingest_genesis, ingest_derived, ingest_format = "auto";
    std::string ingest_outputs, ingest_inputs, ingest_end;
    ingest_cmd->add_option("--store", ingest_store, "store directory")->required();
    ingest_cmd->add_option("--genesis", ingest_genesis, "genesis date YYYY-MM-DD")
        ->required();
    ingest_cmd->add_option("--derived", ingest_derived, "derived table file");
    ingest_cmd->add_option("--format", ingest_format, "csv|ndjson|auto")
        ->check(CLI::IsMember({"csv", "ndjson", "auto"}));
    ingest_cmd->add_option("--outputs", ingest_outputs, "raw outputs.csv");
    ingest_cmd->add_option("--inputs", ingest_inputs, "raw inputs.csv");
    ingest_cmd->add_option("--end-date", ingest_end,
                           "mark days complete through this date (default: inferred)");

    // --- build ---------------------------------------------------------
    auto* build_cmd = app.add_subcommand("build", "compute daily tables from a store");
    std::string build_store, build_out_dir, build_chain = "synthetic";
    std::string build_from, build_to;
    build_cmd->add_option("--store", build_store, "store directory")->required();
    build_cmd->add_option("--out-dir", build_out_dir, "directory for result CSVs")
        ->required();
    build_cmd->add_option("--chain", build_chain, "chain name used in file names")
        ->capture_default_str();
    build_cmd->add_option("--from", build_from, "first date (default: genesis)");
    build_cmd->add_option("--to", build_to, "last date (default: last complete day)");

    // --- update --------------------------------------------------------
    auto* update_cmd = app.add_subcommand("update", "append one day to a store");
    std::string update_store, update_input, update_date;
    update_cmd->add_option("--store", update_store, "store directory")->required();
    update_cmd->add_option("--input", update_input, "derived CSV for the day")->required();
    update_cmd->add_option("--date", update_date,
                           "day being appended (default: next after last)");

    // --- export --------------------------------------------------------
    auto* export_cmd =
        app.add_subcommand("export", "re-emit tables or derive the series CSV");
    std::string export_kind, export_stxo, export_utxo, export_out;
    export_cmd->add_option("kind", export_kind, "stxo|utxo|series")
        ->required()
        ->check(CLI::IsMember({"stxo", "utxo", "series"}));
    export_cmd->add_option("--stxo", export_stxo, "STXO result CSV");
    export_cmd->add_option("--utxo", export_utxo, "UTXO result CSV");
    export_cmd->add_option("--out", export_out, "output path")->required();

    // --- validate ------------------------------------------------------
    auto* validate_cmd = app.add_subcommand("validate", "run consistency checks");
    std::string validate_store, validate_json, validate_subsidy;
    std::int64_t validate_halving_blocks = 0, validate_blocks_per_day = 0;
    validate_cmd->add_option("--store", validate_store, "store directory")->required();
    validate_cmd->add_option("--json", validate_json, "write the machine report here");
    validate_cmd->add_option("--subsidy", validate_subsidy,
                             "initial block subsidy in BTC (enables the halving check)");
    validate_cmd->add_option("--halving-blocks", validate_halving_blocks,
                             "blocks per halving");
    validate_cmd->add_option("--blocks-per-day", validate_blocks_per_day, "blocks per day");

    // --- oracle --------------------------------------------------------
    auto* oracle_cmd =
        app.add_subcommand("oracle", "brute-force reference tables from a derived file");
    std::string oracle_input, oracle_genesis, oracle_out_dir, oracle_chain = "synthetic";
    std::string oracle_end;
    oracle_cmd->add_option("--input", oracle_input, "derived table file")->required();
    oracle_cmd->add_option("--genesis", oracle_genesis, "genesis date")->required();
    oracle_cmd->add_option("--out-dir", oracle_out_dir, "directory for result CSVs")
        ->required();
    oracle_cmd->add_option("--chain", oracle_chain, "chain name used in file names")
        ->capture_default_str();
    oracle_cmd->add_option("--end-date", oracle_end, "last date (default: inferred)");

    // --- chart ---------------------------------------------------------
    auto* chart_cmd = app.add_subcommand("chart", "emit a chart spec JSON");
    std::string chart_kind, chart_stxo, chart_utxo, chart_out;
    chart_cmd
        ->add_option("--kind", chart_kind,
                     "lifespan-share|age-stack|supply-reward|wal|velocity")
        ->required();
    chart_cmd->add_option("--stxo", chart_stxo, "STXO result CSV");
    chart_cmd->add_option("--utxo", chart_utxo, "UTXO result CSV");
    chart_cmd->add_option("--out", chart_out, "output path")->required();

    // --- diff ----------------------------------------------------------
    auto* diff_cmd = app.add_subcommand("diff", "compare two exported CSVs");
    std::string diff_left, diff_right;
    std::optional<double> diff_tolerance;
    diff_cmd->add_option("left", diff_left)->required();
    diff_cmd->add_option("right", diff_right)->required();
    diff_cmd->add_option("--tolerance", diff_tolerance,
                         "numeric tolerance (default: exact comparison)");

    CLI11_PARSE(app, argc, argv);

    if (synth_cmd->parsed()) {
        synth::ChainConfig config;
        if (!synth_config.empty()) config = synth::load_config(synth_config);
        if (synth_days) config.total_days = *synth_days;
        if (synth_seed) config.seed = *synth_seed;
        const auto records = synth::generate(config);
        ingest::write_derived_csv(synth_out, records);
        fmt::print("wrote {} records to {}\n", records.size(), synth_out);
        if (!synth_per_day.empty()) {
            synth::write_day_files(synth_per_day, records, config.genesis,
                                   config.total_days - 1);
            fmt::print("wrote {} day files to {}\n", config.total_days, synth_per_day);
        }
        return 0;
    }

    if (ingest_cmd->parsed()) {
        const CivilDate genesis = require_date(ingest_genesis, "genesis date");
        std::vector<OutputRecord> records;
        if (!ingest_derived.empty()) {
            auto format = ingest_format == "csv"      ? ingest::DerivedFormat::Csv
                          : ingest_format == "ndjson" ? ingest::DerivedFormat::Ndjson
                                                      : ingest::format_from_path(ingest_derived);
            const auto stats = ingest::parse_derived_file(
                ingest_derived, format,
                [&](const OutputRecord& rec) { records.push_back(rec); });
            report_parse_stats(stats);
        } else if (!ingest_outputs.empty() && !ingest_inputs.empty()) {
            const auto stats = ingest::join_inputs_outputs(
                ingest_outputs, ingest_inputs,
                [&](const OutputRecord& rec) { records.push_back(rec); });
            fmt::print("joined {} outputs against {} inputs: {} spent, {} unspent\n",
                       stats.outputs, stats.inputs, stats.matched,
                       stats.outputs - stats.matched);
            if (stats.dangling_inputs > 0) {
                fmt::print(stderr, "warning: {} dangling inputs referenced no known output\n",
                           stats.dangling_inputs);
            }
        } else {
            throw Error(ErrorKind::Argument,
                        "ingest needs --derived or both --outputs and --inputs");
        }
        DayIndex last_day = -1;
        if (!ingest_end.empty()) {
            last_day = day_index(midnight_of(require_date(ingest_end, "end date")), genesis);
        }
        const auto store = store::PartitionStore::build(ingest_store, genesis, records, last_day);
        fmt::print("store {}: {} records ({} spent), days 0..{}\n", ingest_store,
                   store.record_count(), store.spent_count(), store.last_day());
        return 0;
    }

    if (build_cmd->parsed()) {
        const auto store = store::PartitionStore::open(build_store);
        const DayIndex from = build_from.empty()
                                  ? 0
                                  : day_index(midnight_of(require_date(build_from, "from date")),
                                              store.genesis());
        const DayIndex to = build_to.empty()
                                ? store.last_day()
                                : day_index(midnight_of(require_date(build_to, "to date")),
                                            store.genesis());
        const auto tables =
            engine::build_tables(store, from, to, {.chunk_days = chunk_days, .jobs = jobs});
        const auto paths = export_tables(tables, build_out_dir, build_chain);
        fmt::print("wrote {}\nwrote {}\n", paths.stxo.string(), paths.utxo.string());
        return 0;
    }

    if (update_cmd->parsed()) {
        auto store = store::PartitionStore::open(update_store);
        const DayIndex day =
            update_date.empty()
                ? store.last_day() + 1
                : day_index(midnight_of(require_date(update_date, "date")), store.genesis());
        std::vector<OutputRecord> records;
        const auto stats = ingest::parse_derived_file(
            update_input, ingest::format_from_path(update_input),
            [&](const OutputRecord& rec) { records.push_back(rec); });
        report_parse_stats(stats);
        store.append_day(day, records);
        fmt::print("appended day {} ({}): store now has {} records through {}\n", day,
                   format_date_dash(date_of_day(day, store.genesis())), store.record_count(),
                   format_date_dash(date_of_day(store.last_day(), store.genesis())));
        return 0;
    }

    if (export_cmd->parsed()) {
        const auto tables = exporter::import_tables(export_stxo, export_utxo);
        if (export_kind == "stxo") {
            if (export_stxo.empty()) {
                throw Error(ErrorKind::Argument, "export stxo needs --stxo");
            }
            exporter::export_stxo_csv(tables, export_out);
        } else if (export_kind == "utxo") {
            if (export_utxo.empty()) {
                throw Error(ErrorKind::Argument, "export utxo needs --utxo");
            }
            exporter::export_utxo_csv(tables, export_out);
        } else {
            if (export_stxo.empty()) {
                throw Error(ErrorKind::Argument, "export series needs --stxo");
            }
            exporter::export_series_csv(tables, export_out);
        }
        fmt::print("wrote {}\n", export_out);
        return 0;
    }

    if (validate_cmd->parsed()) {
        const auto store = store::PartitionStore::open(validate_store);
        const auto tables = engine::build_tables(store, 0, store.last_day(),
                                                 {.chunk_days = chunk_days, .jobs = jobs});
        std::vector<validate::CheckReport> reports;
        reports.push_back(validate::check_continuity(tables));
        reports.push_back(validate::check_supply_consistency(tables));
        if (!validate_subsidy.empty()) {
            auto subsidy = satoshi_from_btc(validate_subsidy);
            if (!subsidy) {
                throw Error(ErrorKind::Argument,
                            fmt::format("bad subsidy '{}'", validate_subsidy));
            }
            reports.push_back(validate::check_halving(
                tables, {.initial_subsidy_sat = *subsidy,
                         .halving_interval_blocks = validate_halving_blocks,
                         .blocks_per_day = validate_blocks_per_day}));
        }

        bool all_pass = true;
        nlohmann::json json_reports = nlohmann::json::array();
        for (const auto& report : reports) {
            fmt::print("{}\n", report.to_text());
            json_reports.push_back(report.to_json());
            all_pass = all_pass && report.pass;
        }
        if (!validate_json.empty()) {
            std::ofstream out(validate_json, std::ios::trunc);
            out << json_reports.dump(2) << "\n";
        }
        return all_pass ? 0 : 1;
    }

    if (oracle_cmd->parsed()) {
        const CivilDate genesis = require_date(oracle_genesis, "genesis date");
        std::vector<OutputRecord> records;
        const auto stats = ingest::parse_derived_file(
            oracle_input, ingest::format_from_path(oracle_input),
            [&](const OutputRecord& rec) { records.push_back(rec); });
        report_parse_stats(stats);
        DayIndex to = -1;
        if (!oracle_end.empty()) {
            to = day_index(midnight_of(require_date(oracle_end, "end date")), genesis);
        } else {
            for (const auto& rec : records) {
                to = std::max(to, day_index(rec.born, genesis));
                if (rec.is_spent()) to = std::max(to, day_index(rec.spent, genesis));
            }
        }
        if (to < 0) throw Error(ErrorKind::Input, "no records and no --end-date");
        const auto tables = oracle::oracle_tables(records, genesis, 0, to);
        const auto paths = export_tables(tables, oracle_out_dir, oracle_chain);
        fmt::print("wrote {}\nwrote {}\n", paths.stxo.string(), paths.utxo.string());
        return 0;
    }

    if (chart_cmd->parsed()) {
        const auto kind = exporter::chart_kind_from_name(chart_kind);
        if (!kind) {
            throw Error(ErrorKind::Argument, fmt::format("unknown chart kind '{}'", chart_kind));
        }
        const auto tables = exporter::import_tables(chart_stxo, chart_utxo);
        exporter::emit_chart_spec(tables, *kind, chart_out);
        fmt::print("wrote {}\n", chart_out);
        return 0;
    }

    if (diff_cmd->parsed()) {
        const auto result = exporter::diff_csv(diff_left, diff_right, diff_tolerance);
        if (result.differing_cells == 0) {
            fmt::print("identical\n");
            return 0;
        }
        fmt::print("{} differing cells; first at row {}, column {}: '{}' vs '{}'\n",
                   result.differing_cells, result.first->row, result.first->column,
                   result.first->left, result.first->right);
        return 1;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    }
}
