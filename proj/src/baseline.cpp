#include "promise/baseline.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace promise::baseline {

using json = nlohmann::ordered_json;

void RuleConfig::validate() const {
    auto check_hours = [](double h, const std::string& key) {
        if (h < 0.0) throw ConfigError("negative configured time: " + key);
    };
    for (const auto& [k, v] : vendor_hours) check_hours(v, "vendor_times[" + k + "]");
    for (const auto& [wh, legs] : warehouse_hours) {
        for (const auto& [leg, v] : legs) {
            check_hours(v, "warehouse_times[" + wh + "][" + leg + "]");
        }
    }
    for (const auto& [k, v] : hop_hours) check_hours(v, "hop_times[" + k + "]");
    check_hours(lastmile_hours, "lastmile_time");
    check_hours(weekend_pad_hours, "weekend_pad");
    check_hours(holiday_pad_hours, "holiday_pad");
    for (const auto& [node, list] : cutoffs) {
        if (!std::is_sorted(list.begin(), list.end())) {
            throw ConfigError("cutoffs[" + node + "] must be sorted");
        }
        for (const int m : list) {
            if (m < 0 || m >= kMinutesPerDay) {
                throw ConfigError("cutoffs[" + node + "] out of day range");
            }
        }
    }
}

Timestamp roll_to_cutoff(Timestamp at, const std::vector<int>& cutoffs_minutes) {
    if (cutoffs_minutes.empty()) return at;
    const auto tod = at.minute_of_day();
    for (const int cutoff : cutoffs_minutes) {
        if (tod <= cutoff) return Timestamp::from_date(at.date(), cutoff);
    }
    return Timestamp::from_date(at.date() + 1, cutoffs_minutes.front());
}

double rule_preship_hours(const Order& order, const RuleConfig& config) {
    if (order.source_kind == SourceKind::vendor) {
        const auto it = config.vendor_hours.find(order.source_id);
        if (it == config.vendor_hours.end()) {
            throw ConfigError("missing configuration vendor_times[" + order.source_id + "]");
        }
        return it->second;
    }
    const auto it = config.warehouse_hours.find(order.source_id);
    if (it == config.warehouse_hours.end()) {
        throw ConfigError("missing configuration warehouse_times[" + order.source_id + "]");
    }
    double total = 0.0;
    for (const auto& [leg, hours] : it->second) total += hours;
    return total;
}

Timestamp rule_promise(const Order& order, const RuleConfig& config,
                       const HolidayCalendar& calendar) {
    config.validate();
    Timestamp clock = add_hours(order.placed_at, rule_preship_hours(order, config));

    for (const auto& [from, to] : order.lane.edges()) {
        const auto cut_it = config.cutoffs.find(from);
        if (cut_it == config.cutoffs.end()) {
            throw ConfigError("missing configuration cutoffs[" + from + "]");
        }
        clock = roll_to_cutoff(clock, cut_it->second);
        const auto hop_it = config.hop_hours.find(RuleConfig::hop_key(from, to));
        if (hop_it == config.hop_hours.end()) {
            throw ConfigError("missing configuration hop_times[" + RuleConfig::hop_key(from, to) +
                              "]");
        }
        clock = add_hours(clock, hop_it->second);
    }
    clock = add_hours(clock, config.lastmile_hours);

    // One pad per padded calendar day strictly between order and landing day.
    double pad = 0.0;
    const Date placed = order.placed_at.date();
    const Date landing = clock.date();
    for (Date d = placed + 1; d < landing; d = d + 1) {
        if (d.is_weekend()) pad += config.weekend_pad_hours;
        const auto* entry = calendar.find(order.lane.destination, d);
        if (entry && entry->kind != HolidayKind::weekend) pad += config.holiday_pad_hours;
    }
    return add_hours(clock, pad);
}

std::string RuleConfig::to_json_string() const {
    json j;
    j["vendor_times"] = vendor_hours;
    j["warehouse_times"] = warehouse_hours;
    j["hop_times"] = hop_hours;
    j["lastmile_time"] = lastmile_hours;
    j["cutoffs"] = cutoffs;
    j["weekend_pad"] = weekend_pad_hours;
    j["holiday_pad"] = holiday_pad_hours;
    return j.dump(2) + "\n";
}

RuleConfig RuleConfig::from_json_string(const std::string& text) {
    json j = json::parse(text);
    RuleConfig c;
    c.vendor_hours = j.value("vendor_times", std::map<std::string, double>{});
    c.warehouse_hours =
        j.value("warehouse_times", std::map<std::string, std::map<std::string, double>>{});
    c.hop_hours = j.value("hop_times", std::map<std::string, double>{});
    c.lastmile_hours = j.value("lastmile_time", 0.0);
    c.cutoffs = j.value("cutoffs", std::map<std::string, std::vector<int>>{});
    c.weekend_pad_hours = j.value("weekend_pad", 0.0);
    c.holiday_pad_hours = j.value("holiday_pad", 0.0);
    c.validate();
    return c;
}

void RuleConfig::save(const std::string& path) const {
    atomic_write_file(path, to_json_string());
}

RuleConfig RuleConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open rules file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

} // namespace promise::baseline
