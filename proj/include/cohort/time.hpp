#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cohort {

inline constexpr std::int64_t kSecondsPerDay = 86'400;

//! Seconds since the Unix epoch, UTC. All date arithmetic in this project
//! happens in UTC+0.
using Timestamp = std::int64_t;

//! Days since a chain's genesis date (day 0 = the genesis calendar day).
using DayIndex = std::int64_t;

struct CivilDate {
    int year = 1970;
    unsigned month = 1;  // 1..12
    unsigned day = 1;    // 1..31

    friend bool operator==(const CivilDate&, const CivilDate&) = default;
};

//! Midnight (00:00:00 UTC) of the given calendar date as a Timestamp.
Timestamp midnight_of(CivilDate date);

//! Calendar date containing the given timestamp (UTC).
CivilDate civil_from_timestamp(Timestamp t);

//! floor((t - genesis_midnight) / 86400). A timestamp at exactly midnight
//! belongs to the day that starts there, so end-of-day is exclusive.
//! Throws ErrorKind::Argument if t is before genesis midnight.
DayIndex day_index(Timestamp t, CivilDate genesis);

//! First second of day d: genesis_midnight + d * 86400.
Timestamp start_of_day(DayIndex d, CivilDate genesis);

//! Exclusive end of day d (the midnight that starts day d+1).
Timestamp end_of_day(DayIndex d, CivilDate genesis);

//! Calendar date of day index d relative to genesis.
CivilDate date_of_day(DayIndex d, CivilDate genesis);

std::string format_iso8601(Timestamp t);              // 2009-01-03T18:15:05Z
std::string format_date_dash(CivilDate d);            // 2009-01-03
std::string format_date_slash(CivilDate d);           // 2009/01/03

//! Accepts ISO-8601 UTC ("2009-01-03T18:15:05Z", 'T' or ' ' separator,
//! optional "Z"/"+00:00"/" UTC" suffix, bare dates meaning midnight) or a
//! plain integer of epoch seconds.
std::optional<Timestamp> parse_timestamp(std::string_view text);

//! Parse "YYYY-MM-DD" or "YYYY/MM/DD".
std::optional<CivilDate> parse_date(std::string_view text);

}  // namespace cohort
