#include "cohort/amount.hpp"

#include <charconv>

#include <fmt/format.h>

namespace cohort {

std::string btc_from_satoshi(std::int64_t satoshi) {
    // INT64_MIN never appears as an amount, so the negation is safe.
    const bool negative = satoshi < 0;
    const std::int64_t abs = negative ? -satoshi : satoshi;
    return fmt::format("{}{}.{:08}", negative ? "-" : "", abs / kSatoshiPerCoin,
                       abs % kSatoshiPerCoin);
}

std::optional<std::int64_t> satoshi_from_btc(std::string_view text) {
    if (text.empty()) return std::nullopt;
    bool negative = false;
    if (text.front() == '-') {
        negative = true;
        text.remove_prefix(1);
        if (text.empty()) return std::nullopt;
    }

    std::string_view whole = text;
    std::string_view frac;
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        whole = text.substr(0, dot);
        frac = text.substr(dot + 1);
        if (frac.empty() || frac.size() > 8) return std::nullopt;
    }
    if (whole.empty()) return std::nullopt;

    std::int64_t coins = 0;
    auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), coins);
    if (ec != std::errc() || p != whole.data() + whole.size()) return std::nullopt;

    std::int64_t frac_sat = 0;
    if (!frac.empty()) {
        auto [fp, fec] = std::from_chars(frac.data(), frac.data() + frac.size(), frac_sat);
        if (fec != std::errc() || fp != frac.data() + frac.size()) return std::nullopt;
        for (std::size_t i = frac.size(); i < 8; ++i) frac_sat *= 10;
    }

    const std::int64_t sat = coins * kSatoshiPerCoin + frac_sat;
    return negative ? -sat : sat;
}

}  // namespace cohort
