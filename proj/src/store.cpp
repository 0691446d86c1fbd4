#include "cohort/store.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <fcntl.h>
#include <unistd.h>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cohort/error.hpp"

namespace cohort::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kManifestFormat = "utxo-cohort-store-v1";
constexpr std::size_t kRecordBytes = 24;

void encode_record(const OutputRecord& rec, char* out) {
    std::memcpy(out, &rec.value_sat, 8);
    std::memcpy(out + 8, &rec.born, 8);
    std::memcpy(out + 16, &rec.spent, 8);
}

OutputRecord decode_record(const char* in) {
    OutputRecord rec;
    std::memcpy(&rec.value_sat, in, 8);
    std::memcpy(&rec.born, in + 8, 8);
    std::memcpy(&rec.spent, in + 16, 8);
    return rec;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, fmt::format("cannot open {}", path.string()));
    std::string data((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return data;
}

void write_file_atomic(const fs::path& path, std::string_view data) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, fmt::format("cannot create {}", tmp.string()));
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) throw Error(ErrorKind::Io, fmt::format("write failed: {}", tmp.string()));
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::Io, fmt::format("rename failed: {}", path.string()));
}

std::string segment_bytes(const std::vector<OutputRecord>& records) {
    std::string data(records.size() * kRecordBytes, '\0');
    for (std::size_t i = 0; i < records.size(); ++i) {
        encode_record(records[i], data.data() + i * kRecordBytes);
    }
    return data;
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= p[i];
        hash *= 0x100000001b3ull;
    }
    return hash;
}

WriterLock::WriterLock(const fs::path& root) : path_(root / ".lock") {
    fs::create_directories(root);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        throw Error(ErrorKind::Io,
                    fmt::format("store {} is locked by another writer ({} exists)",
                                root.string(), path_.string()));
    }
    const std::string pid = fmt::format("{}\n", ::getpid());
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

WriterLock::~WriterLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

fs::path PartitionStore::segment_path(bool death, DayIndex d) const {
    return root_ / (death ? "death" : "birth") /
           (format_date_dash(date_of_day(d, genesis_)) + ".seg");
}

std::vector<OutputRecord> PartitionStore::read_segment(bool death, DayIndex d) const {
    const auto& segments = death ? death_segments_ : birth_segments_;
    const auto it = segments.find(d);
    if (it == segments.end()) return {};

    const fs::path path = segment_path(death, d);
    const std::string data = read_file(path);
    if (data.size() != it->second.count * kRecordBytes) {
        throw Error(ErrorKind::Integrity,
                    fmt::format("{}: size {} does not match manifest count {}",
                                path.string(), data.size(), it->second.count));
    }
    if (fnv1a64(data.data(), data.size()) != it->second.checksum) {
        throw Error(ErrorKind::Integrity,
                    fmt::format("{}: checksum mismatch", path.string()));
    }
    std::vector<OutputRecord> records(it->second.count);
    for (std::size_t i = 0; i < records.size(); ++i) {
        records[i] = decode_record(data.data() + i * kRecordBytes);
    }
    return records;
}

void PartitionStore::write_segment(bool death, DayIndex d,
                                   std::vector<OutputRecord> records) {
    std::sort(records.begin(), records.end(), record_less);
    const std::string data = segment_bytes(records);
    const fs::path path = segment_path(death, d);
    write_file_atomic(path, data);
    auto& segments = death ? death_segments_ : birth_segments_;
    segments[d] = SegmentInfo{records.size(), fnv1a64(data.data(), data.size())};
}

void PartitionStore::save_manifest() const {
    json birth = json::object();
    json death = json::object();
    auto fill = [&](json& out, const std::map<DayIndex, SegmentInfo>& segments) {
        for (const auto& [day, info] : segments) {
            out[format_date_dash(date_of_day(day, genesis_))] = {
                {"count", info.count}, {"checksum", fmt::format("{:016x}", info.checksum)}};
        }
    };
    fill(birth, birth_segments_);
    fill(death, death_segments_);
    const json manifest = {
        {"format", kManifestFormat},
        {"genesis", format_date_dash(genesis_)},
        {"last_day", last_day_},
        {"record_count", record_count_},
        {"spent_count", spent_count_},
        {"birth", birth},
        {"death", death},
    };
    write_file_atomic(root_ / "manifest.json", manifest.dump(2) + "\n");
}

PartitionStore PartitionStore::create(const fs::path& root, CivilDate genesis) {
    WriterLock lock(root);
    std::error_code ec;
    fs::remove_all(root / "birth", ec);
    fs::remove_all(root / "death", ec);
    fs::create_directories(root / "birth", ec);
    fs::create_directories(root / "death", ec);
    if (ec) throw Error(ErrorKind::Io, fmt::format("cannot create {}", root.string()));

    PartitionStore store;
    store.root_ = root;
    store.genesis_ = genesis;
    store.save_manifest();
    return store;
}

PartitionStore PartitionStore::build(const fs::path& root, CivilDate genesis,
                                     std::span<const OutputRecord> records,
                                     DayIndex last_day) {
    PartitionStore store = create(root, genesis);
    WriterLock lock(root);

    try {
        // Canonical order groups records by birth day and puts each group
        // in segment order already.
        std::vector<OutputRecord> by_birth(records.begin(), records.end());
        std::sort(by_birth.begin(), by_birth.end(), record_less);

        std::vector<OutputRecord> by_death;
        for (const auto& rec : by_birth) {
            if (rec.is_spent()) by_death.push_back(rec);
        }
        std::sort(by_death.begin(), by_death.end(),
                  [&](const OutputRecord& a, const OutputRecord& b) {
                      const DayIndex da = day_index(a.spent, genesis);
                      const DayIndex db = day_index(b.spent, genesis);
                      if (da != db) return da < db;
                      return record_less(a, b);
                  });

        DayIndex max_day = -1;
        if (!by_birth.empty()) max_day = day_index(by_birth.back().born, genesis);
        if (!by_death.empty()) {
            max_day = std::max(max_day, day_index(by_death.back().spent, genesis));
        }
        if (last_day < 0) last_day = max_day;
        if (max_day > last_day) {
            throw Error(ErrorKind::Argument,
                        fmt::format("records extend to day {} past requested last day {}",
                                    max_day, last_day));
        }

        std::size_t bpos = 0;
        std::size_t dpos = 0;
        for (DayIndex d = 0; d <= last_day; ++d) {
            std::vector<OutputRecord> births;
            while (bpos < by_birth.size() &&
                   day_index(by_birth[bpos].born, genesis) == d) {
                births.push_back(by_birth[bpos++]);
            }
            std::vector<OutputRecord> deaths;
            while (dpos < by_death.size() &&
                   day_index(by_death[dpos].spent, genesis) == d) {
                deaths.push_back(by_death[dpos++]);
            }
            store.record_count_ += births.size();
            store.spent_count_ += deaths.size();
            store.write_segment(false, d, std::move(births));
            store.write_segment(true, d, std::move(deaths));
        }
        store.last_day_ = last_day;
        store.save_manifest();
    } catch (...) {
        std::error_code ec;
        fs::remove_all(root / "birth", ec);
        fs::remove_all(root / "death", ec);
        fs::remove(root / "manifest.json", ec);
        throw;
    }
    return store;
}

PartitionStore PartitionStore::open(const fs::path& root) {
    const fs::path manifest_path = root / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw Error(ErrorKind::Input,
                    fmt::format("{}: no manifest.json (not a store)", root.string()));
    }
    json manifest = json::parse(read_file(manifest_path), nullptr, false);
    if (manifest.is_discarded() || manifest.value("format", "") != kManifestFormat) {
        throw Error(ErrorKind::Input,
                    fmt::format("{}: unrecognized manifest", manifest_path.string()));
    }

    PartitionStore store;
    store.root_ = root;
    try {
        auto genesis = parse_date(manifest.at("genesis").get<std::string>());
        if (!genesis) {
            throw Error(ErrorKind::Input,
                        fmt::format("{}: bad genesis date", manifest_path.string()));
        }
        store.genesis_ = *genesis;
        store.last_day_ = manifest.at("last_day").get<DayIndex>();
        store.record_count_ = manifest.at("record_count").get<std::uint64_t>();
        store.spent_count_ = manifest.at("spent_count").get<std::uint64_t>();

        auto load = [&](const char* key, std::map<DayIndex, SegmentInfo>& out) {
            for (const auto& [date_str, info] : manifest.at(key).items()) {
                auto date = parse_date(date_str);
                if (!date) {
                    throw Error(ErrorKind::Input,
                                fmt::format("{}: bad segment date '{}'",
                                            manifest_path.string(), date_str));
                }
                SegmentInfo seg;
                seg.count = info.at("count").get<std::uint64_t>();
                try {
                    seg.checksum =
                        std::stoull(info.at("checksum").get<std::string>(), nullptr, 16);
                } catch (const std::exception&) {
                    throw Error(ErrorKind::Input,
                                fmt::format("{}: bad checksum for segment '{}'",
                                            manifest_path.string(), date_str));
                }
                out[day_index(midnight_of(*date), store.genesis_)] = seg;
            }
        };
        load("birth", store.birth_segments_);
        load("death", store.death_segments_);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Input,
                    fmt::format("{}: {}", manifest_path.string(), e.what()));
    }
    return store;
}

std::vector<OutputRecord> PartitionStore::birth_cohort(DayIndex d) const {
    return read_segment(false, d);
}

std::vector<OutputRecord> PartitionStore::death_cohort(DayIndex d) const {
    return read_segment(true, d);
}

void PartitionStore::for_each_birth(
    DayIndex d, const std::function<void(const OutputRecord&)>& fn) const {
    for (const auto& rec : read_segment(false, d)) fn(rec);
}

void PartitionStore::for_each_death(
    DayIndex d, const std::function<void(const OutputRecord&)>& fn) const {
    for (const auto& rec : read_segment(true, d)) fn(rec);
}

void PartitionStore::scan_alive_window(
    DayIndex start, DayIndex end,
    const std::function<void(const OutputRecord&)>& fn) const {
    if (start > end) {
        throw Error(ErrorKind::Argument,
                    fmt::format("inverted window [{}, {}]", start, end));
    }
    const Timestamp window_floor = end_of_day(start, genesis_);
    const DayIndex last_birth_day = std::min(end, last_day_);
    for (DayIndex d = 0; d <= last_birth_day; ++d) {
        for (const auto& rec : read_segment(false, d)) {
            if (!rec.is_spent() || rec.spent >= window_floor) fn(rec);
        }
    }
}

void PartitionStore::append_day(DayIndex day, std::span<const OutputRecord> records) {
    WriterLock lock(root_);
    if (day != last_day_ + 1) {
        throw Error(ErrorKind::Sequencing,
                    fmt::format("cannot append day {}: next expected day is {}", day,
                                last_day_ + 1));
    }

    std::vector<OutputRecord> births;
    std::vector<OutputRecord> deaths;
    std::map<DayIndex, std::vector<OutputRecord>> backfills;  // by birth day
    for (const auto& rec : records) {
        const DayIndex born_day = day_index(rec.born, genesis_);
        if (born_day > day) {
            throw Error(ErrorKind::Sequencing,
                        fmt::format("record born on day {} arrived while appending day {}",
                                    born_day, day));
        }
        if (rec.is_spent() && day_index(rec.spent, genesis_) != day) {
            throw Error(ErrorKind::Sequencing,
                        fmt::format("record spent on day {} arrived while appending day {}",
                                    day_index(rec.spent, genesis_), day));
        }
        if (born_day == day) {
            births.push_back(rec);
            if (rec.is_spent()) deaths.push_back(rec);
        } else {
            if (!rec.is_spent()) {
                throw Error(ErrorKind::Integrity,
                            fmt::format("unspent record born on past day {} in append", born_day));
            }
            backfills[born_day].push_back(rec);
            deaths.push_back(rec);
        }
    }

    // Backfill spends into their birth segments: each spend must match a
    // stored, still-unspent record with the same value and birth time.
    for (auto& [born_day, spends] : backfills) {
        std::vector<OutputRecord> segment = read_segment(false, born_day);
        for (const auto& spend : spends) {
            auto it = std::find_if(segment.begin(), segment.end(), [&](const OutputRecord& r) {
                return !r.is_spent() && r.value_sat == spend.value_sat &&
                       r.born == spend.born;
            });
            if (it == segment.end()) {
                throw Error(
                    ErrorKind::Integrity,
                    fmt::format("spend of unknown or already-spent output "
                                "(value {} satoshi, born {})",
                                spend.value_sat, format_iso8601(spend.born)));
            }
            it->spent = spend.spent;
        }
        write_segment(false, born_day, std::move(segment));
    }

    write_segment(false, day, std::move(births));
    const std::size_t death_count = deaths.size();
    write_segment(true, day, std::move(deaths));

    record_count_ += birth_segments_.at(day).count;
    spent_count_ += death_count;
    last_day_ = day;
    save_manifest();
}

}  // namespace cohort::store
