#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cohort {

inline constexpr std::int64_t kSatoshiPerCoin = 100'000'000;  // 1 satoshi = 1e-8 BTC

//! Exact integer amount in satoshi. All aggregation is integer arithmetic;
//! decimal BTC strings appear only at export boundaries. Sums of the full
//! BTC supply (2.1e15 satoshi) fit in int64 with ample headroom.
class Amount {
  public:
    constexpr Amount() = default;
    explicit constexpr Amount(std::int64_t satoshi) : satoshi_(satoshi) {}

    static constexpr Amount from_coins(std::int64_t coins) {
        return Amount(coins * kSatoshiPerCoin);
    }

    constexpr std::int64_t satoshi() const noexcept { return satoshi_; }

    friend constexpr auto operator<=>(Amount, Amount) = default;

    constexpr Amount& operator+=(Amount rhs) noexcept {
        satoshi_ += rhs.satoshi_;
        return *this;
    }
    constexpr Amount& operator-=(Amount rhs) noexcept {
        satoshi_ -= rhs.satoshi_;
        return *this;
    }
    friend constexpr Amount operator+(Amount a, Amount b) noexcept {
        return Amount(a.satoshi_ + b.satoshi_);
    }
    friend constexpr Amount operator-(Amount a, Amount b) noexcept {
        return Amount(a.satoshi_ - b.satoshi_);
    }

  private:
    std::int64_t satoshi_ = 0;
};

//! Render satoshi as a decimal coin string with exactly 8 fractional
//! digits ("1.00000000"), no rounding loss, no scientific notation.
std::string btc_from_satoshi(std::int64_t satoshi);

inline std::string btc_from_satoshi(Amount v) { return btc_from_satoshi(v.satoshi()); }

//! Parse a decimal coin string back to satoshi. Accepts up to 8 fractional
//! digits. Returns nullopt on malformed input.
std::optional<std::int64_t> satoshi_from_btc(std::string_view text);

}  // namespace cohort
