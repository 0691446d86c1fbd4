#include "cohort/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <queue>
#include <span>
#include <utility>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cohort/error.hpp"

namespace cohort::ingest {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxReportedIssues = 64;

void add_issue(ParseStats& stats, std::uint64_t line, std::string message) {
    ++stats.rejected;
    if (stats.issues.size() < kMaxReportedIssues) {
        stats.issues.push_back({line, std::move(message)});
    }
}

//! Chunked line reader; avoids per-line stream overhead on large files.
class LineReader {
  public:
    explicit LineReader(const fs::path& path) : file_(std::fopen(path.c_str(), "rb")) {
        if (!file_) {
            throw Error(ErrorKind::Io, fmt::format("cannot open {}", path.string()));
        }
        buffer_.resize(1 << 20);
    }
    ~LineReader() {
        if (file_) std::fclose(file_);
    }
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    //! Next line without trailing '\n' / '\r'. False at EOF.
    bool next(std::string_view& line) {
        carry_.clear();
        while (true) {
            if (pos_ < filled_) {
                const char* start = buffer_.data() + pos_;
                const char* nl = static_cast<const char*>(
                    std::memchr(start, '\n', filled_ - pos_));
                if (nl) {
                    std::size_t len = static_cast<std::size_t>(nl - start);
                    pos_ += len + 1;
                    if (carry_.empty()) {
                        line = trim_cr({start, len});
                    } else {
                        carry_.append(start, len);
                        line = trim_cr(carry_);
                    }
                    return true;
                }
                carry_.append(start, filled_ - pos_);
                pos_ = filled_;
            }
            filled_ = std::fread(buffer_.data(), 1, buffer_.size(), file_);
            pos_ = 0;
            if (filled_ == 0) {
                if (carry_.empty()) return false;
                line = trim_cr(carry_);
                return true;
            }
        }
    }

  private:
    static std::string_view trim_cr(std::string_view s) {
        if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
        return s;
    }

    FILE* file_ = nullptr;
    std::string buffer_;
    std::size_t pos_ = 0;
    std::size_t filled_ = 0;
    std::string carry_;
};

//! Split a CSV line into exactly `out.size()` fields. No quoting: every
//! schema in this project is comma-free by construction.
bool split_fields(std::string_view line, std::span<std::string_view> out) {
    std::size_t field = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            if (field >= out.size()) return false;
            out[field++] = line.substr(start, i - start);
            start = i + 1;
        }
    }
    return field == out.size();
}

bool parse_i64(std::string_view s, std::int64_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

bool parse_u32(std::string_view s, std::uint32_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

ParseStats parse_derived_csv(const fs::path& path, const RecordSink& sink) {
    LineReader reader(path);
    std::string_view line;
    if (!reader.next(line)) {
        throw Error(ErrorKind::Input, fmt::format("{}: empty file", path.string()));
    }
    if (line != "value,block_timestamp,spent_block_timestamp") {
        throw Error(ErrorKind::Input,
                    fmt::format("{}: expected header "
                                "'value,block_timestamp,spent_block_timestamp', got '{}'",
                                path.string(), line));
    }

    ParseStats stats;
    std::uint64_t line_no = 1;
    std::array<std::string_view, 3> fields;
    while (reader.next(line)) {
        ++line_no;
        if (line.empty()) continue;
        if (!split_fields(line, fields)) {
            add_issue(stats, line_no, "expected 3 fields");
            continue;
        }
        OutputRecord rec;
        if (!parse_i64(fields[0], rec.value_sat) || rec.value_sat < 0) {
            add_issue(stats, line_no, fmt::format("bad value '{}'", fields[0]));
            continue;
        }
        auto born = parse_timestamp(fields[1]);
        if (!born) {
            add_issue(stats, line_no, fmt::format("bad block_timestamp '{}'", fields[1]));
            continue;
        }
        rec.born = *born;
        if (!fields[2].empty()) {
            auto spent = parse_timestamp(fields[2]);
            if (!spent) {
                add_issue(stats, line_no,
                          fmt::format("bad spent_block_timestamp '{}'", fields[2]));
                continue;
            }
            if (*spent < rec.born) {
                add_issue(stats, line_no,
                          fmt::format("spent {} precedes born {}", fields[2], fields[1]));
                continue;
            }
            rec.spent = *spent;
        }
        ++stats.accepted;
        sink(rec);
    }
    return stats;
}

ParseStats parse_derived_ndjson(const fs::path& path, const RecordSink& sink) {
    LineReader reader(path);
    ParseStats stats;
    std::uint64_t line_no = 0;
    std::string_view line;
    while (reader.next(line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            add_issue(stats, line_no, "not a JSON object");
            continue;
        }
        if (!row.contains("value") || !row.contains("block_timestamp") ||
            !row.contains("spent_block_timestamp")) {
            throw Error(ErrorKind::Input,
                        fmt::format("{}:{}: missing required field", path.string(), line_no));
        }
        auto timestamp_of = [](const nlohmann::json& v) -> std::optional<Timestamp> {
            if (v.is_number_integer()) return v.get<std::int64_t>();
            if (v.is_string()) return parse_timestamp(v.get_ref<const std::string&>());
            return std::nullopt;
        };
        OutputRecord rec;
        if (!row["value"].is_number_integer() ||
            (rec.value_sat = row["value"].get<std::int64_t>()) < 0) {
            add_issue(stats, line_no, "bad value");
            continue;
        }
        auto born = timestamp_of(row["block_timestamp"]);
        if (!born) {
            add_issue(stats, line_no, "bad block_timestamp");
            continue;
        }
        rec.born = *born;
        if (!row["spent_block_timestamp"].is_null()) {
            auto spent = timestamp_of(row["spent_block_timestamp"]);
            if (!spent) {
                add_issue(stats, line_no, "bad spent_block_timestamp");
                continue;
            }
            if (*spent < rec.born) {
                add_issue(stats, line_no, "spent precedes born");
                continue;
            }
            rec.spent = *spent;
        }
        ++stats.accepted;
        sink(rec);
    }
    return stats;
}

// --- external sort machinery for the outpoint join ------------------------

struct SortRow {
    std::string tx_id;
    std::uint32_t index = 0;
    std::int64_t payload0 = 0;  // outputs: value; inputs: spent timestamp
    std::int64_t payload1 = 0;  // outputs: born timestamp

    std::size_t bytes() const { return tx_id.size() + 32; }
};

bool row_key_less(const SortRow& a, const SortRow& b) {
    if (int c = a.tx_id.compare(b.tx_id); c != 0) return c < 0;
    return a.index < b.index;
}

bool row_key_equal(const SortRow& a, const SortRow& b) {
    return a.index == b.index && a.tx_id == b.tx_id;
}

void write_row(std::ofstream& out, const SortRow& row) {
    auto put = [&](const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    };
    const std::uint16_t len = static_cast<std::uint16_t>(row.tx_id.size());
    put(&len, sizeof len);
    put(row.tx_id.data(), row.tx_id.size());
    put(&row.index, sizeof row.index);
    put(&row.payload0, sizeof row.payload0);
    put(&row.payload1, sizeof row.payload1);
}

bool read_row(std::ifstream& in, SortRow& row) {
    std::uint16_t len = 0;
    if (!in.read(reinterpret_cast<char*>(&len), sizeof len)) return false;
    row.tx_id.resize(len);
    in.read(row.tx_id.data(), len);
    in.read(reinterpret_cast<char*>(&row.index), sizeof row.index);
    in.read(reinterpret_cast<char*>(&row.payload0), sizeof row.payload0);
    in.read(reinterpret_cast<char*>(&row.payload1), sizeof row.payload1);
    if (!in) throw Error(ErrorKind::Io, "truncated sort run");
    return true;
}

//! Accumulates rows, spilling sorted runs to disk once the in-memory
//! budget fills; finish() hands back a key-ordered pull stream.
class ExternalSorter {
  public:
    ExternalSorter(fs::path temp_dir, std::string tag, std::uint64_t budget_bytes)
        : temp_dir_(std::move(temp_dir)), tag_(std::move(tag)),
          budget_(std::max<std::uint64_t>(budget_bytes, 1 << 16)) {}

    ~ExternalSorter() {
        for (const auto& p : run_paths_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

    void add(SortRow row) {
        pending_bytes_ += row.bytes();
        rows_.push_back(std::move(row));
        if (pending_bytes_ >= budget_) spill();
    }

    class Stream {
      public:
        //! Pull the next row in key order. False when exhausted.
        bool next(SortRow& out) {
            if (!cursors_.empty()) {
                if (heap_.empty()) return false;
                const std::size_t i = heap_.top();
                heap_.pop();
                out = std::move(cursors_[i].row);
                if (read_row(cursors_[i].in, cursors_[i].row)) heap_.push(i);
                return true;
            }
            if (pos_ >= rows_.size()) return false;
            out = std::move(rows_[pos_++]);
            return true;
        }

      private:
        friend class ExternalSorter;
        struct Cursor {
            std::ifstream in;
            SortRow row;
        };
        struct HeapCmp {
            std::vector<Cursor>* cursors;
            bool operator()(std::size_t a, std::size_t b) const {
                if (row_key_less((*cursors)[a].row, (*cursors)[b].row)) return false;
                if (row_key_less((*cursors)[b].row, (*cursors)[a].row)) return true;
                return a > b;  // stable tiebreak on run id
            }
        };

        std::vector<SortRow> rows_;
        std::size_t pos_ = 0;
        std::vector<Cursor> cursors_;
        std::priority_queue<std::size_t, std::vector<std::size_t>, HeapCmp> heap_{
            HeapCmp{&cursors_}};
    };

    Stream finish() {
        Stream stream;
        if (run_paths_.empty()) {
            std::sort(rows_.begin(), rows_.end(), row_key_less);
            stream.rows_ = std::move(rows_);
            return stream;
        }
        spill();
        stream.cursors_ = std::vector<Stream::Cursor>(run_paths_.size());
        for (std::size_t i = 0; i < run_paths_.size(); ++i) {
            auto& cursor = stream.cursors_[i];
            cursor.in.open(run_paths_[i], std::ios::binary);
            if (!cursor.in) {
                throw Error(ErrorKind::Io,
                            fmt::format("cannot reopen sort run {}", run_paths_[i].string()));
            }
            if (read_row(cursor.in, cursor.row)) stream.heap_.push(i);
        }
        return stream;
    }

  private:
    void spill() {
        if (rows_.empty()) return;
        std::sort(rows_.begin(), rows_.end(), row_key_less);
        fs::path path =
            temp_dir_ / fmt::format(".sort-{}-{:04}.run", tag_, run_paths_.size());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorKind::Io, fmt::format("cannot create {}", path.string()));
        }
        for (const auto& row : rows_) write_row(out, row);
        out.flush();
        if (!out) throw Error(ErrorKind::Io, fmt::format("write failed: {}", path.string()));
        run_paths_.push_back(std::move(path));
        rows_.clear();
        pending_bytes_ = 0;
    }

    fs::path temp_dir_;
    std::string tag_;
    std::uint64_t budget_;
    std::uint64_t pending_bytes_ = 0;
    std::vector<SortRow> rows_;
    std::vector<fs::path> run_paths_;
};

std::string outpoint_name(const SortRow& row) {
    return fmt::format("{}:{}", row.tx_id, row.index);
}

}  // namespace

DerivedFormat format_from_path(const fs::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".ndjson" || ext == ".jsonl") return DerivedFormat::Ndjson;
    return DerivedFormat::Csv;
}

ParseStats parse_derived_file(const fs::path& path, DerivedFormat format,
                              const RecordSink& sink) {
    return format == DerivedFormat::Csv ? parse_derived_csv(path, sink)
                                        : parse_derived_ndjson(path, sink);
}

void write_derived_csv(const fs::path& path, const std::vector<OutputRecord>& records) {
    std::string buffer = "value,block_timestamp,spent_block_timestamp\n";
    buffer.reserve(1 << 20);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, fmt::format("cannot create {}", path.string()));
    for (const auto& rec : records) {
        fmt::format_to(std::back_inserter(buffer), "{},{},{}\n", rec.value_sat,
                       format_iso8601(rec.born),
                       rec.is_spent() ? format_iso8601(rec.spent) : std::string());
        if (buffer.size() > (1 << 20)) {
            out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
            buffer.clear();
        }
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::Io, fmt::format("write failed: {}", path.string()));
}

JoinStats join_inputs_outputs(const fs::path& outputs_csv, const fs::path& inputs_csv,
                              const RecordSink& sink, const JoinOptions& options) {
    const fs::path temp_dir =
        options.temp_dir.empty() ? outputs_csv.parent_path() : options.temp_dir;

    JoinStats stats;

    ExternalSorter outputs(temp_dir, "outputs", options.sort_budget_bytes);
    {
        LineReader reader(outputs_csv);
        std::string_view line;
        if (!reader.next(line) || line != "tx_id,output_index,value,block_timestamp") {
            throw Error(ErrorKind::Input,
                        fmt::format("{}: expected header "
                                    "'tx_id,output_index,value,block_timestamp'",
                                    outputs_csv.string()));
        }
        std::uint64_t line_no = 1;
        std::array<std::string_view, 4> f;
        while (reader.next(line)) {
            ++line_no;
            if (line.empty()) continue;
            RawOutput raw;
            std::optional<Timestamp> born;
            if (!split_fields(line, f) || f[0].empty() ||
                !parse_u32(f[1], raw.output_index) || !parse_i64(f[2], raw.value_sat) ||
                raw.value_sat < 0 || !(born = parse_timestamp(f[3]))) {
                throw Error(ErrorKind::Input,
                            fmt::format("{}:{}: malformed output row", outputs_csv.string(),
                                        line_no));
            }
            raw.tx_id.assign(f[0]);
            raw.block_timestamp = *born;
            outputs.add(SortRow{std::move(raw.tx_id), raw.output_index, raw.value_sat,
                                raw.block_timestamp});
            ++stats.outputs;
        }
    }

    ExternalSorter inputs(temp_dir, "inputs", options.sort_budget_bytes);
    {
        LineReader reader(inputs_csv);
        std::string_view line;
        if (!reader.next(line) ||
            line != "spent_tx_id,spent_output_index,spent_block_timestamp") {
            throw Error(ErrorKind::Input,
                        fmt::format("{}: expected header "
                                    "'spent_tx_id,spent_output_index,spent_block_timestamp'",
                                    inputs_csv.string()));
        }
        std::uint64_t line_no = 1;
        std::array<std::string_view, 3> f;
        while (reader.next(line)) {
            ++line_no;
            if (line.empty()) continue;
            RawInput raw;
            std::optional<Timestamp> spent;
            if (!split_fields(line, f) || f[0].empty() ||
                !parse_u32(f[1], raw.spent_output_index) ||
                !(spent = parse_timestamp(f[2]))) {
                throw Error(ErrorKind::Input,
                            fmt::format("{}:{}: malformed input row", inputs_csv.string(),
                                        line_no));
            }
            raw.spent_tx_id.assign(f[0]);
            raw.spent_block_timestamp = *spent;
            inputs.add(SortRow{std::move(raw.spent_tx_id), raw.spent_output_index,
                               raw.spent_block_timestamp, 0});
            ++stats.inputs;
        }
    }

    // Merge join over the two key-ordered streams.
    auto out_stream = outputs.finish();
    auto in_stream = inputs.finish();

    SortRow in_row;
    bool have_input = in_stream.next(in_row);
    bool have_prev_input = false;
    SortRow prev_input;
    auto advance_input = [&] {
        prev_input = std::move(in_row);
        have_prev_input = true;
        have_input = in_stream.next(in_row);
        if (have_input && row_key_equal(prev_input, in_row)) {
            throw Error(ErrorKind::Integrity,
                        fmt::format("output {} spent twice", outpoint_name(in_row)));
        }
    };

    SortRow out_row;
    bool have_prev_output = false;
    SortRow prev_output;
    while (out_stream.next(out_row)) {
        if (have_prev_output && row_key_equal(prev_output, out_row)) {
            throw Error(ErrorKind::Integrity,
                        fmt::format("duplicate outpoint {} in outputs",
                                    outpoint_name(out_row)));
        }
        while (have_input && row_key_less(in_row, out_row)) {
            ++stats.dangling_inputs;
            advance_input();
        }
        OutputRecord rec;
        rec.value_sat = out_row.payload0;
        rec.born = out_row.payload1;
        if (have_input && row_key_equal(in_row, out_row)) {
            const Timestamp spent = in_row.payload0;
            if (spent < rec.born) {
                throw Error(ErrorKind::Integrity,
                            fmt::format("outpoint {}: spend at {} precedes creation at {}",
                                        outpoint_name(out_row), format_iso8601(spent),
                                        format_iso8601(rec.born)));
            }
            rec.spent = spent;
            ++stats.matched;
            advance_input();
        }
        sink(rec);
        prev_output = std::move(out_row);
        have_prev_output = true;
    }
    while (have_input) {
        ++stats.dangling_inputs;
        advance_input();
    }

    return stats;
}

}  // namespace cohort::ingest
