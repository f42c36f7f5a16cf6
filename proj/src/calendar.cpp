#include "promise/calendar.hpp"

#include <algorithm>
#include <cmath>

namespace promise::calendar {

namespace {

constexpr double kRateTolerance = 0.15;
constexpr int kMaxProxies = 3;
constexpr int kBauWindowDays = 7;
constexpr int kMaxBauDays = 4;
constexpr int kMinProxyDeliveries = 10;
constexpr double kClipMads = 3.0;
const double kRecencyWeights[kMaxProxies] = {3.0, 2.0, 1.0};

} // namespace

double median(std::vector<double> values) {
    if (values.empty()) throw InputError("median of empty sample");
    const auto mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                     values.end());
    const double hi = values[mid];
    if (values.size() % 2 == 1) return hi;
    const double lo =
        *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return (lo + hi) / 2.0;
}

double median_abs_deviation(const std::vector<double>& values, double center) {
    std::vector<double> devs;
    devs.reserve(values.size());
    for (const double v : values) devs.push_back(std::fabs(v - center));
    return median(std::move(devs));
}

std::vector<Date> match_proxies(const ProxyTarget& target, const HolidayCalendar& calendar,
                                int history_horizon_days) {
    const HolidayEntry* entry = calendar.find(target.region, target.date);
    if (!entry) {
        throw InputError("no calendar entry for region " + target.region + " on " +
                         target.date.to_string());
    }
    std::vector<Date> proxies;
    const auto entries = calendar.region_entries(target.region);
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
        if (it->date >= target.date) continue;
        if (target.date - it->date > history_horizon_days) break;
        if (it->kind != entry->kind) continue;
        if (std::fabs(it->absenteeism_rate - entry->absenteeism_rate) > kRateTolerance) continue;
        proxies.push_back(it->date);
        if (proxies.size() == kMaxProxies) break;
    }
    return proxies;
}

namespace {

// Per-day last-mile durations for one region, clipped to median +/- 3*MAD.
struct DayDurations {
    std::map<std::int64_t, std::vector<double>> by_day;

    static DayDurations collect(const std::vector<DeliveryRecord>& deliveries,
                                const std::string& region) {
        DayDurations out;
        for (const auto& r : deliveries) {
            if (r.order.lane.destination != region) continue;
            const auto it = r.leg_durations.find(kLegLastmile);
            if (it == r.leg_durations.end()) continue;
            out.by_day[r.delivered_at.date().days].push_back(it->second);
        }
        return out;
    }

    std::vector<double> clipped(std::int64_t day) const {
        const auto it = by_day.find(day);
        if (it == by_day.end()) return {};
        const double med = median(it->second);
        const double mad = median_abs_deviation(it->second, med);
        std::vector<double> out;
        out.reserve(it->second.size());
        for (const double v : it->second) {
            out.push_back(std::clamp(v, med - kClipMads * mad, med + kClipMads * mad));
        }
        return out;
    }
};

} // namespace

HandlingTime derive_handling_time(const ProxyTarget& target, const std::vector<Date>& proxies,
                                  const std::vector<DeliveryRecord>& deliveries,
                                  const HolidayCalendar& calendar) {
    HandlingTime result;
    result.region = target.region;
    if (const auto* entry = calendar.find(target.region, target.date)) result.kind = entry->kind;

    const auto durations = DayDurations::collect(deliveries, target.region);

    double weighted = 0.0, weight_sum = 0.0;
    int used = 0;
    for (std::size_t p = 0; p < proxies.size() && used < kMaxProxies; ++p) {
        const auto proxy_day = proxies[p].days;
        const auto proxy_durations = durations.clipped(proxy_day);
        if (proxy_durations.size() < kMinProxyDeliveries) continue;

        // Nearest BAU days: no calendar entry at all, data present.
        std::vector<std::int64_t> bau;
        for (int dist = 1; dist <= kBauWindowDays && bau.size() < kMaxBauDays; ++dist) {
            for (const auto day : {proxy_day - dist, proxy_day + dist}) {
                if (bau.size() >= kMaxBauDays) break;
                if (calendar.find(target.region, Date{day})) continue;
                if (!durations.by_day.count(day)) continue;
                bau.push_back(day);
            }
        }
        if (bau.empty()) continue;

        std::vector<double> pooled;
        for (const auto day : bau) {
            const auto clipped = durations.clipped(day);
            pooled.insert(pooled.end(), clipped.begin(), clipped.end());
        }
        if (pooled.empty()) continue;

        const double extra = std::max(0.0, median(proxy_durations) - median(pooled));
        const double w = kRecencyWeights[used];
        weighted += w * extra;
        weight_sum += w;
        ++used;
    }

    if (used > 0) {
        result.extra_hours = weighted / weight_sum;
        result.support = used;
    }
    return result;
}

std::map<std::pair<std::string, int>, HandlingTime>
derive_table(const HolidayCalendar& calendar, const std::vector<DeliveryRecord>& deliveries,
             Date as_of, int history_horizon_days) {
    // Latest past entry per (region, kind) is the derivation target.
    std::map<std::pair<std::string, int>, HolidayEntry> latest;
    for (const auto& [key, entry] : calendar.all()) {
        if (entry.date >= as_of) continue;
        auto& slot = latest[{entry.region, static_cast<int>(entry.kind)}];
        if (slot.region.empty() || entry.date > slot.date) slot = entry;
    }
    std::map<std::pair<std::string, int>, HandlingTime> table;
    for (const auto& [key, entry] : latest) {
        const ProxyTarget target{entry.region, entry.date};
        auto proxies = match_proxies(target, calendar, history_horizon_days);
        // The target instance itself is the most natural proxy for the next
        // occurrence; prepend it.
        proxies.insert(proxies.begin(), entry.date);
        if (proxies.size() > static_cast<std::size_t>(kMaxProxies)) {
            proxies.resize(kMaxProxies);
        }
        auto ht = derive_handling_time(target, proxies, deliveries, calendar);
        table[key] = std::move(ht);
    }
    return table;
}

} // namespace promise::calendar
