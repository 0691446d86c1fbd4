#include "cohort/time.hpp"

#include <charconv>
#include <chrono>

#include <fmt/format.h>

#include "cohort/error.hpp"

namespace cohort {

namespace {

namespace chr = std::chrono;

chr::sys_days to_sys_days(CivilDate d) {
    return chr::sys_days{chr::year{d.year} / chr::month{d.month} / chr::day{d.day}};
}

bool parse_fixed_uint(std::string_view s, std::size_t pos, std::size_t len, unsigned& out) {
    if (pos + len > s.size()) return false;
    unsigned value = 0;
    for (std::size_t i = 0; i < len; ++i) {
        const char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        value = value * 10 + static_cast<unsigned>(c - '0');
    }
    out = value;
    return true;
}

}  // namespace

Timestamp midnight_of(CivilDate date) {
    return chr::duration_cast<chr::seconds>(to_sys_days(date).time_since_epoch()).count();
}

CivilDate civil_from_timestamp(Timestamp t) {
    // Floor toward -inf so pre-epoch timestamps land on the right day.
    std::int64_t days = t / kSecondsPerDay;
    if (t % kSecondsPerDay < 0) --days;
    const chr::year_month_day ymd{chr::sys_days{chr::days{days}}};
    return CivilDate{static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day())};
}

DayIndex day_index(Timestamp t, CivilDate genesis) {
    const Timestamp origin = midnight_of(genesis);
    if (t < origin) {
        throw Error(ErrorKind::Argument,
                    fmt::format("timestamp {} precedes genesis midnight {}",
                                format_iso8601(t), format_date_dash(genesis)));
    }
    return (t - origin) / kSecondsPerDay;
}

Timestamp start_of_day(DayIndex d, CivilDate genesis) {
    return midnight_of(genesis) + d * kSecondsPerDay;
}

Timestamp end_of_day(DayIndex d, CivilDate genesis) {
    return midnight_of(genesis) + (d + 1) * kSecondsPerDay;
}

CivilDate date_of_day(DayIndex d, CivilDate genesis) {
    return civil_from_timestamp(start_of_day(d, genesis));
}

std::string format_iso8601(Timestamp t) {
    const CivilDate d = civil_from_timestamp(t);
    std::int64_t secs = t - midnight_of(d);
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", d.year, d.month, d.day,
                       secs / 3600, (secs / 60) % 60, secs % 60);
}

std::string format_date_dash(CivilDate d) {
    return fmt::format("{:04}-{:02}-{:02}", d.year, d.month, d.day);
}

std::string format_date_slash(CivilDate d) {
    return fmt::format("{:04}/{:02}/{:02}", d.year, d.month, d.day);
}

std::optional<CivilDate> parse_date(std::string_view text) {
    if (text.size() != 10) return std::nullopt;
    const char sep = text[4];
    if ((sep != '-' && sep != '/') || text[7] != sep) return std::nullopt;
    unsigned y = 0, m = 0, d = 0;
    if (!parse_fixed_uint(text, 0, 4, y) || !parse_fixed_uint(text, 5, 2, m) ||
        !parse_fixed_uint(text, 8, 2, d)) {
        return std::nullopt;
    }
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    const CivilDate date{static_cast<int>(y), m, d};
    if (!chr::year_month_day{chr::year{date.year} / chr::month{m} / chr::day{d}}.ok()) {
        return std::nullopt;
    }
    return date;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    // Trim trailing UTC markers first.
    auto strip_suffix = [&](std::string_view suffix) {
        if (text.size() >= suffix.size() &&
            text.substr(text.size() - suffix.size()) == suffix) {
            text.remove_suffix(suffix.size());
        }
    };
    strip_suffix(" UTC");
    strip_suffix("+00:00");
    strip_suffix("Z");

    if (text.empty()) return std::nullopt;

    // Bare integer = epoch seconds.
    const bool all_digits =
        text.find_first_not_of("0123456789-") == std::string_view::npos &&
        text.find('-', 1) == std::string_view::npos;
    if (all_digits) {
        std::int64_t value = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || p != text.data() + text.size()) return std::nullopt;
        return value;
    }

    if (text.size() == 10) {
        auto date = parse_date(text);
        if (!date) return std::nullopt;
        return midnight_of(*date);
    }

    // YYYY-MM-DD[T ]HH:MM:SS
    if (text.size() != 19) return std::nullopt;
    if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
    auto date = parse_date(text.substr(0, 10));
    if (!date) return std::nullopt;
    unsigned hh = 0, mm = 0, ss = 0;
    if (!parse_fixed_uint(text, 11, 2, hh) || text[13] != ':' ||
        !parse_fixed_uint(text, 14, 2, mm) || text[16] != ':' ||
        !parse_fixed_uint(text, 17, 2, ss)) {
        return std::nullopt;
    }
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    return midnight_of(*date) + hh * 3600 + mm * 60 + ss;
}

}  // namespace cohort
