#pragma once

#include <map>
#include <string>
#include <vector>

#include "promise/domain.hpp"

namespace promise::baseline {

/**
 * Static configuration for the rule-based promise model: configured leg
 * times, per-node shipping cutoffs, and fixed weekend/holiday paddings.
 * Never calibrated from data.
 */
struct RuleConfig {
    std::map<std::string, double> vendor_hours;                            // vendor id -> hours
    std::map<std::string, std::map<std::string, double>> warehouse_hours;  // warehouse -> leg -> h
    std::map<std::string, double> hop_hours;                               // "from>to" -> hours
    double lastmile_hours = 0.0;
    std::map<std::string, std::vector<int>> cutoffs; // node -> sorted minutes of day
    double weekend_pad_hours = 0.0;
    double holiday_pad_hours = 0.0;

    static std::string hop_key(const std::string& from, const std::string& to) {
        return from + ">" + to;
    }

    void validate() const;
    std::string to_json_string() const;
    static RuleConfig from_json_string(const std::string& text);
    void save(const std::string& path) const;
    static RuleConfig load(const std::string& path);
};

/**
 * Accumulates configured leg times along the order's lane, rolling the
 * clock to the next shipping cutoff at every dispatch node, then adds the
 * weekend/holiday pad once per padded calendar day strictly between the
 * order date and the unpadded landing date.
 */
Timestamp rule_promise(const Order& order, const RuleConfig& config,
                       const HolidayCalendar& calendar);

/// Pre-ship portion only (vendor or warehouse hours, before any cutoff).
double rule_preship_hours(const Order& order, const RuleConfig& config);

/// Rolls a clock forward to the next configured cutoff at a node.
Timestamp roll_to_cutoff(Timestamp at, const std::vector<int>& cutoffs_minutes);

} // namespace promise::baseline
