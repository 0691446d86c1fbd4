#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cohort/records.hpp"
#include "cohort/time.hpp"

namespace cohort::store {

//! Records laid out twice on disk, partitioned by birth date and by spend
//! date, so cohort queries touch only the relevant day segments.
//!
//! Layout under root/:
//!   manifest.json                    genesis, last day, counts, checksums
//!   birth/<YYYY-MM-DD>.seg           records born that day (all of them)
//!   death/<YYYY-MM-DD>.seg           copies of records spent that day
//!
//! Segments hold fixed-width little-endian records (value u64, born i64,
//! spent i64; INT64_MAX = unspent) in canonical sort order, so identical
//! record multisets always serialize to identical bytes. The manifest
//! carries an FNV-1a checksum per segment, verified on every read.
//!
//! Concurrency: any number of readers; one writer at a time, enforced by
//! an exclusive lock file taken for the duration of build/append.
class PartitionStore {
  public:
    struct SegmentInfo {
        std::uint64_t count = 0;
        std::uint64_t checksum = 0;
    };

    //! Create an empty store (no complete days yet).
    static PartitionStore create(const std::filesystem::path& root, CivilDate genesis);

    //! Bulk-load records and mark days 0..last_day complete. last_day < 0
    //! means "infer from the data" (max birth/death day seen). Partial
    //! output is removed if the build fails. Rebuilding over an existing
    //! store with identical input yields identical bytes.
    static PartitionStore build(const std::filesystem::path& root, CivilDate genesis,
                                std::span<const OutputRecord> records,
                                DayIndex last_day = -1);

    //! Open an existing store; throws ErrorKind::Input if the manifest is
    //! missing or malformed.
    static PartitionStore open(const std::filesystem::path& root);

    CivilDate genesis() const { return genesis_; }
    DayIndex last_day() const { return last_day_; }
    std::uint64_t record_count() const { return record_count_; }
    std::uint64_t spent_count() const { return spent_count_; }
    const std::filesystem::path& root() const { return root_; }

    //! All records with day_index(born) == d, checksum-verified.
    std::vector<OutputRecord> birth_cohort(DayIndex d) const;

    //! All records with day_index(spent) == d.
    std::vector<OutputRecord> death_cohort(DayIndex d) const;

    void for_each_birth(DayIndex d,
                        const std::function<void(const OutputRecord&)>& fn) const;
    void for_each_death(DayIndex d,
                        const std::function<void(const OutputRecord&)>& fn) const;

    //! Stream every record that is alive at some day in [start, end]:
    //! born < end_of(end) and (unspent or spent >= end_of(start)). This is
    //! exactly the input needed to compute age distributions for each day
    //! of the window.
    void scan_alive_window(DayIndex start, DayIndex end,
                           const std::function<void(const OutputRecord&)>& fn) const;

    //! Append day last_day()+1. `records` must contain only births on that
    //! day (optionally already spent the same day) and spends, dated that
    //! day, of previously unspent stored records. Spends are backfilled
    //! into their birth segments, so a later rebuild from scratch produces
    //! byte-identical segments. Throws ErrorKind::Sequencing on day gaps
    //! and ErrorKind::Integrity on spends of unknown records.
    void append_day(DayIndex day, std::span<const OutputRecord> records);

  private:
    PartitionStore() = default;

    std::filesystem::path segment_path(bool death, DayIndex d) const;
    std::vector<OutputRecord> read_segment(bool death, DayIndex d) const;
    void write_segment(bool death, DayIndex d, std::vector<OutputRecord> records);
    void save_manifest() const;

    std::filesystem::path root_;
    CivilDate genesis_;
    DayIndex last_day_ = -1;
    std::uint64_t record_count_ = 0;
    std::uint64_t spent_count_ = 0;
    std::map<DayIndex, SegmentInfo> birth_segments_;
    std::map<DayIndex, SegmentInfo> death_segments_;
};

//! FNV-1a 64-bit, the segment checksum function.
std::uint64_t fnv1a64(const void* data, std::size_t size);

//! RAII exclusive writer lock (root/.lock). Throws ErrorKind::Io if the
//! lock is already held.
class WriterLock {
  public:
    explicit WriterLock(const std::filesystem::path& root);
    ~WriterLock();
    WriterLock(const WriterLock&) = delete;
    WriterLock& operator=(const WriterLock&) = delete;

  private:
    std::filesystem::path path_;
};

}  // namespace cohort::store
