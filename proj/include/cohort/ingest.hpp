#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cohort/records.hpp"
#include "cohort/time.hpp"

namespace cohort::ingest {

//! One raw transaction output before the input/output join.
struct RawOutput {
    std::string tx_id;
    std::uint32_t output_index = 0;
    std::int64_t value_sat = 0;
    Timestamp block_timestamp = 0;
};

//! One raw transaction input: the outpoint it consumes plus the spend time.
struct RawInput {
    std::string spent_tx_id;
    std::uint32_t spent_output_index = 0;
    Timestamp spent_block_timestamp = 0;
};

enum class DerivedFormat { Csv, Ndjson };

//! Pick Csv unless the extension says ndjson/jsonl.
DerivedFormat format_from_path(const std::filesystem::path& path);

struct ParseIssue {
    std::uint64_t line = 0;
    std::string message;
};

struct ParseStats {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::vector<ParseIssue> issues;  // capped; rejected carries the full count
};

using RecordSink = std::function<void(const OutputRecord&)>;

//! Stream a derived file (`value,block_timestamp,spent_block_timestamp`,
//! empty spent field = still unspent) into the sink. Malformed rows and
//! rows with spent < born are rejected and reported with line numbers.
//! A missing or wrong header throws ErrorKind::Input.
ParseStats parse_derived_file(const std::filesystem::path& path, DerivedFormat format,
                              const RecordSink& sink);

//! Write records in the derived CSV format (timestamps as ISO-8601).
void write_derived_csv(const std::filesystem::path& path,
                       const std::vector<OutputRecord>& records);

struct JoinOptions {
    std::filesystem::path temp_dir;        // defaults next to the output file
    std::uint64_t sort_budget_bytes = 256ull << 20;  // in-memory chunk budget
};

struct JoinStats {
    std::uint64_t outputs = 0;
    std::uint64_t inputs = 0;
    std::uint64_t matched = 0;           // outputs that found a spend
    std::uint64_t dangling_inputs = 0;   // inputs naming no known output
};

//! Join `outputs.csv` (tx_id,output_index,value,block_timestamp) against
//! `inputs.csv` (spent_tx_id,spent_output_index,spent_block_timestamp) and
//! emit one OutputRecord per output, spend timestamp attached where an
//! input consumed it. Both sides are externally sorted by outpoint so the
//! join never needs the full dataset in memory, and the emission order
//! (sorted by outpoint) is identical no matter how the files were ordered.
//! A second spend of one outpoint throws ErrorKind::Integrity naming it;
//! dangling inputs are only counted.
JoinStats join_inputs_outputs(const std::filesystem::path& outputs_csv,
                              const std::filesystem::path& inputs_csv,
                              const RecordSink& sink, const JoinOptions& options = {});

}  // namespace cohort::ingest
