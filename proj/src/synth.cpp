#include "cohort/synth.hpp"

#include <deque>
#include <fstream>

#include <fmt/format.h>

#include "cohort/error.hpp"
#include "cohort/ingest.hpp"
#include "cohort/rng.hpp"

namespace cohort::synth {

namespace fs = std::filesystem;
using nlohmann::json;

ChainConfig config_from_json(const json& j) {
    ChainConfig config;
    if (j.contains("genesis")) {
        auto date = parse_date(j.at("genesis").get<std::string>());
        if (!date) throw Error(ErrorKind::Input, "config: bad genesis date");
        config.genesis = *date;
    }
    config.block_interval_s = j.value("block_interval_s", config.block_interval_s);
    config.initial_subsidy_sat = j.value("initial_subsidy_sat", config.initial_subsidy_sat);
    config.halving_interval_blocks =
        j.value("halving_interval_blocks", config.halving_interval_blocks);
    config.total_days = j.value("total_days", config.total_days);
    config.seed = j.value("seed", config.seed);
    if (j.contains("spend")) {
        const auto& s = j.at("spend");
        config.spend.daily_prob = s.value("daily_prob", config.spend.daily_prob);
        config.spend.age_scale_days = s.value("age_scale_days", config.spend.age_scale_days);
        config.spend.same_day_chain_prob =
            s.value("same_day_chain_prob", config.spend.same_day_chain_prob);
        config.spend.two_child_prob = s.value("two_child_prob", config.spend.two_child_prob);
        config.spend.fee_fraction = s.value("fee_fraction", config.spend.fee_fraction);
    }
    return config;
}

json config_to_json(const ChainConfig& config) {
    return json{
        {"genesis", format_date_dash(config.genesis)},
        {"block_interval_s", config.block_interval_s},
        {"initial_subsidy_sat", config.initial_subsidy_sat},
        {"halving_interval_blocks", config.halving_interval_blocks},
        {"total_days", config.total_days},
        {"seed", config.seed},
        {"spend",
         {{"daily_prob", config.spend.daily_prob},
          {"age_scale_days", config.spend.age_scale_days},
          {"same_day_chain_prob", config.spend.same_day_chain_prob},
          {"two_child_prob", config.spend.two_child_prob},
          {"fee_fraction", config.spend.fee_fraction}}},
    };
}

ChainConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, fmt::format("cannot open {}", path.string()));
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorKind::Input, fmt::format("{}: not valid JSON", path.string()));
    }
    return config_from_json(j);
}

std::int64_t block_subsidy(const ChainConfig& config, std::int64_t height) {
    const std::int64_t halvings = height / config.halving_interval_blocks;
    if (halvings >= 63) return 0;
    return config.initial_subsidy_sat >> halvings;
}

namespace {

void validate_config(const ChainConfig& config) {
    if (config.total_days <= 0) {
        throw Error(ErrorKind::Argument, "total_days must be positive");
    }
    if (config.block_interval_s <= 0 || kSecondsPerDay % config.block_interval_s != 0) {
        throw Error(ErrorKind::Argument,
                    fmt::format("block interval {} s must divide 86400", config.block_interval_s));
    }
    if (config.initial_subsidy_sat <= 0 || config.halving_interval_blocks <= 0) {
        throw Error(ErrorKind::Argument, "subsidy and halving interval must be positive");
    }
    const auto& s = config.spend;
    if (s.daily_prob < 0 || s.daily_prob > 1 || s.same_day_chain_prob < 0 ||
        s.same_day_chain_prob > 1 || s.two_child_prob < 0 || s.two_child_prob > 1 ||
        s.fee_fraction < 0 || s.fee_fraction >= 1 || s.age_scale_days <= 0) {
        throw Error(ErrorKind::Argument, "spend model parameters out of range");
    }
}

}  // namespace

std::vector<OutputRecord> generate(const ChainConfig& config) {
    validate_config(config);
    Rng rng(config.seed);

    const std::int64_t blocks_per_day = kSecondsPerDay / config.block_interval_s;
    const Timestamp genesis_midnight = midnight_of(config.genesis);

    std::vector<OutputRecord> records;
    std::vector<std::size_t> live;       // indices of unspent records, oldest first
    std::vector<std::size_t> next_live;
    std::vector<std::int64_t> block_fees(static_cast<std::size_t>(blocks_per_day));

    auto block_time = [&](DayIndex day, std::int64_t block) {
        return genesis_midnight + day * kSecondsPerDay + block * config.block_interval_s;
    };

    for (DayIndex day = 0; day < config.total_days; ++day) {
        std::fill(block_fees.begin(), block_fees.end(), 0);
        next_live.clear();

        // Same-day respend chain: (record index, block it was born in).
        std::deque<std::pair<std::size_t, std::int64_t>> fresh;

        auto spend_record = [&](std::size_t idx, std::int64_t block) {
            const Timestamp ts = block_time(day, block);
            records[idx].spent = ts;
            const std::int64_t value = records[idx].value_sat;
            const std::int64_t fee =
                static_cast<std::int64_t>(static_cast<double>(value) *
                                          config.spend.fee_fraction);
            block_fees[static_cast<std::size_t>(block)] += fee;
            const std::int64_t remaining = value - fee;

            const int children = rng.next_double() < config.spend.two_child_prob ? 2 : 1;
            std::int64_t first = remaining;
            if (children == 2) {
                first = static_cast<std::int64_t>(
                    rng.next_below(static_cast<std::uint64_t>(remaining) + 1));
            }
            records.push_back({first, ts, kUnspent});
            fresh.emplace_back(records.size() - 1, block);
            if (children == 2) {
                records.push_back({remaining - first, ts, kUnspent});
                fresh.emplace_back(records.size() - 1, block);
            }
        };

        // Carried-over outputs, spend probability decaying with age.
        for (const std::size_t idx : live) {
            const DayIndex born_day = (records[idx].born - genesis_midnight) / kSecondsPerDay;
            const double age_days = static_cast<double>(day - born_day);
            const double p =
                config.spend.daily_prob / (1.0 + age_days / config.spend.age_scale_days);
            if (rng.next_double() < p) {
                spend_record(idx, static_cast<std::int64_t>(
                                      rng.next_below(static_cast<std::uint64_t>(blocks_per_day))));
            } else {
                next_live.push_back(idx);
            }
        }

        // Same-day chains: fresh outputs may be re-spent later (or in the
        // same block, giving lifespan zero).
        while (!fresh.empty()) {
            const auto [idx, born_block] = fresh.front();
            fresh.pop_front();
            if (rng.next_double() < config.spend.same_day_chain_prob) {
                const std::int64_t span = blocks_per_day - born_block;
                const std::int64_t block =
                    born_block + static_cast<std::int64_t>(
                                     rng.next_below(static_cast<std::uint64_t>(span)));
                spend_record(idx, block);
            } else {
                next_live.push_back(idx);
            }
        }

        // Coinbases close the day's books: subsidy plus the fees collected
        // in each block. They enter the live set from tomorrow on.
        for (std::int64_t b = 0; b < blocks_per_day; ++b) {
            const std::int64_t height = day * blocks_per_day + b;
            const std::int64_t value = block_subsidy(config, height) +
                                       block_fees[static_cast<std::size_t>(b)];
            records.push_back({value, block_time(day, b), kUnspent});
            next_live.push_back(records.size() - 1);
        }

        std::swap(live, next_live);
    }

    return records;
}

void write_day_files(const fs::path& dir, const std::vector<OutputRecord>& records,
                     CivilDate genesis, DayIndex last_day) {
    if (last_day < 0) {
        throw Error(ErrorKind::Argument, "last_day must be non-negative");
    }
    fs::create_directories(dir);
    std::vector<std::vector<OutputRecord>> per_day(static_cast<std::size_t>(last_day) + 1);
    for (const auto& rec : records) {
        const DayIndex born_day = day_index(rec.born, genesis);
        if (born_day > last_day || (rec.is_spent() && day_index(rec.spent, genesis) > last_day)) {
            throw Error(ErrorKind::Argument,
                        fmt::format("record beyond day {}", last_day));
        }
        if (!rec.is_spent() || day_index(rec.spent, genesis) == born_day) {
            per_day[static_cast<std::size_t>(born_day)].push_back(rec);
        } else {
            OutputRecord birth = rec;
            birth.spent = kUnspent;
            per_day[static_cast<std::size_t>(born_day)].push_back(birth);
            per_day[static_cast<std::size_t>(day_index(rec.spent, genesis))].push_back(rec);
        }
    }
    for (DayIndex d = 0; d <= last_day; ++d) {
        const fs::path path = dir / (format_date_dash(date_of_day(d, genesis)) + ".csv");
        ingest::write_derived_csv(path, per_day[static_cast<std::size_t>(d)]);
    }
}

}  // namespace cohort::synth
