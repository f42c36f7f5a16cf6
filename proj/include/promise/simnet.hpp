#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "promise/baseline.hpp"
#include "promise/domain.hpp"

namespace promise::simnet {

struct LogNormalSpec {
    double log_mean = 0.0;
    double log_sd = 0.0;
};

struct WarehouseSpec {
    std::string id;
    double base_hours = 6.0;
    double shift_amplitude_hours = 2.0; // sinusoidal over the placement hour
    double multi_item_wait_hours = 3.0;
    double noise_log_sd = 0.12;
    double weekend_factor = 1.2;
};

struct VendorSpec {
    std::string id;
    std::string home_warehouse;
    LogNormalSpec processing{3.1, 0.3}; // hours
    std::vector<int> po_hours{10, 16};      // purchase order issue hours
    std::vector<int> pickup_hours{11, 17};
    bool coloader = false;
    double max_processing_hours = 96.0;
};

/// Last-mile delivery center; its id doubles as the region id in calendars.
struct CenterSpec {
    std::string id;
    double capacity_per_day = 120.0;
    std::array<double, 7> weekday_capacity_mult{1, 1, 1, 1, 1, 0.75, 0.55};
    LogNormalSpec handling{1.7, 0.15}; // hours from arrival (or day start) to door
    double manpower_own = 20.0;
    double manpower_contract = 10.0;
    CityTier tier = CityTier::tier2;
    std::vector<std::string> pincodes;
};

struct LaneSpec {
    Lane lane;
    std::vector<LogNormalSpec> hop_transit; // one per edge of the lane
    double weight = 1.0;                    // order routing weight
};

struct HolidayEffect {
    double capacity_mult = 0.6;
    double transit_delay_hours = 4.0;
};

struct NetworkSpec {
    Date start_date = Date::from_civil(2024, 1, 1);
    std::vector<WarehouseSpec> warehouses;
    std::vector<VendorSpec> vendors;
    std::vector<std::string> hubs;
    std::vector<CenterSpec> centers;
    std::vector<LaneSpec> lanes;
    std::map<std::string, HolidayEffect> holiday_effects; // by holiday kind name
    HolidayCalendar calendar;
    double vendor_order_share = 0.25;
    double multi_item_share = 0.3;
    double office_address_share = 0.2;
    int order_window_start_minute = 8 * 60;
    int order_window_end_minute = 22 * 60;

    const CenterSpec* center(const std::string& id) const;
    const WarehouseSpec* warehouse(const std::string& id) const;
    const VendorSpec* vendor(const std::string& id) const;
    void validate() const;
};

/// Sale event: multiplied order volume over [start, start + duration_days).
struct HrdEvent {
    Date start;
    int duration_days = 3;
    double volume_multiplier = 3.0; // >= 1
    double plan_noise = 0.05;       // multiplicative noise on emitted plans
};

struct PlanTables {
    std::map<std::int64_t, double> ship_volume;                      // date -> planned shipments
    std::map<std::pair<std::string, std::int64_t>, double> capacity; // (center, date) -> outflow

    bool empty() const { return ship_volume.empty() && capacity.empty(); }
    void save_csv(const std::string& path) const;
    static PlanTables load_csv(const std::string& path);
};

struct CenterDayStats {
    std::string center;
    Date date;
    int arrivals = 0;
    int deliveries = 0;
    int backlog_end = 0;
    double capacity = 0.0;
    double manpower_own = 0.0;
    double manpower_contract = 0.0;
};

void save_center_days_csv(const std::vector<CenterDayStats>& stats, const std::string& path);
std::vector<CenterDayStats> load_center_days_csv(const std::string& path);

struct SimOutput {
    std::vector<DeliveryRecord> records; // placement order
    PlanTables plans;                    // populated around HRD events
    std::vector<CenterDayStats> center_days;
};

/**
 * Seeded synthetic generation: per-day order draws (scaled by active HRD
 * multipliers), vendor/warehouse pre-ship legs, lognormal hop transits
 * with holiday delays, and a FIFO daily-capacity backlog queue per
 * last-mile center. Bit-identical output for identical (spec, seed).
 */
SimOutput generate(const NetworkSpec& spec, const std::vector<HrdEvent>& events, int days,
                   int orders_per_day, std::uint64_t seed);

/**
 * Monte-Carlo quantile of the queue-free delivery duration for a fixed
 * order context; the coverage oracle for model tests.
 */
double ground_truth_quantile(const NetworkSpec& spec, const Order& order_template, double q,
                             int n_draws, std::uint64_t seed);

// Scenario files: {"preset": "default"|"hrd"} or a full inline spec,
// plus an optional "events" list.
struct Scenario {
    NetworkSpec spec;
    std::vector<HrdEvent> events;
    int default_days = 90;
    int orders_per_day = 400;
};

Scenario default_scenario(int horizon_days = 180);
Scenario hrd_scenario(int horizon_days = 180);
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);

/// Heuristic static rule configuration for a scenario's topology: hop and
/// leg times pinned near upper-typical values, daily dispatch cutoffs, and
/// fixed weekend/holiday pads. Never fitted to data.
baseline::RuleConfig default_rules(const Scenario& scenario);

} // namespace promise::simnet
