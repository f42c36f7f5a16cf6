#pragma once

#include <map>
#include <string>
#include <vector>

#include "promise/domain.hpp"

namespace promise::calendar {

/// Extra last-mile hours attributed to a (region, day kind), derived from
/// proxy-day comparison. support counts the proxies used; 0 means defaulted.
struct HandlingTime {
    std::string region;
    HolidayKind kind = HolidayKind::weekend;
    double extra_hours = 0.0;
    int support = 0;
};

struct ProxyTarget {
    std::string region;
    Date date;
};

/**
 * Up to 3 most recent past dates in the same region with the same holiday
 * kind whose absenteeism rate is within 0.15 of the target's, most recent
 * first. The target date must have a calendar entry.
 */
std::vector<Date> match_proxies(const ProxyTarget& target, const HolidayCalendar& calendar,
                                int history_horizon_days = 365);

/**
 * Compares each proxy day against its nearest BAU days (within +/- 7 days,
 * up to 4), clipping every day's last-mile durations to median +/- 3*MAD.
 * extra_hours is the recency-weighted (3:2:1) average of
 * max(0, proxy median - BAU median). Proxies with fewer than 10
 * same-region deliveries are skipped; with none usable the result
 * defaults to zero with support 0.
 */
HandlingTime derive_handling_time(const ProxyTarget& target, const std::vector<Date>& proxies,
                                  const std::vector<DeliveryRecord>& deliveries,
                                  const HolidayCalendar& calendar);

/**
 * Handling times for every (region, kind) whose most recent calendar entry
 * falls strictly before as_of, derived from that entry's proxies.
 */
std::map<std::pair<std::string, int>, HandlingTime>
derive_table(const HolidayCalendar& calendar, const std::vector<DeliveryRecord>& deliveries,
             Date as_of, int history_horizon_days = 365);

double median(std::vector<double> values);
double median_abs_deviation(const std::vector<double>& values, double center);

} // namespace promise::calendar
