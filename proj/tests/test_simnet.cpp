#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>

#include "promise/simnet.hpp"

using namespace promise;
namespace sim = promise::simnet;

namespace {

// Single-lane network with switchable randomness.
sim::Scenario tiny_scenario(bool deterministic) {
    sim::Scenario s;
    auto& n = s.spec;
    n.start_date = Date::from_civil(2024, 1, 1);
    sim::WarehouseSpec w;
    w.id = "W1";
    w.base_hours = 6.0;
    w.shift_amplitude_hours = deterministic ? 0.0 : 2.0;
    w.multi_item_wait_hours = deterministic ? 0.0 : 3.0;
    w.noise_log_sd = deterministic ? 0.0 : 0.15;
    w.weekend_factor = deterministic ? 1.0 : 1.2;
    n.warehouses = {w};
    sim::CenterSpec c;
    c.id = "C1";
    c.capacity_per_day = deterministic ? 1e6 : 90.0;
    if (deterministic) c.weekday_capacity_mult = {1, 1, 1, 1, 1, 1, 1};
    c.handling = {std::log(5.0), deterministic ? 0.0 : 0.2};
    c.pincodes = {"560001", "560002"};
    n.centers = {c};
    n.hubs = {"H1"};
    sim::LaneSpec lane;
    lane.lane = {"W1", "C1", {"H1"}, Carrier::own_logistics};
    lane.hop_transit = {{std::log(10.0), deterministic ? 0.0 : 0.3},
                        {std::log(8.0), deterministic ? 0.0 : 0.3}};
    n.lanes = {lane};
    n.vendor_order_share = 0.0;
    n.multi_item_share = deterministic ? 0.0 : 0.3;
    return s;
}

} // namespace

TEST_CASE("degenerate deterministic network reproduces the configured sum") {
    const auto s = tiny_scenario(true);
    const auto out = sim::generate(s.spec, {}, 5, 40, 7);
    REQUIRE(out.records.size() == 200);
    // 6h warehouse + 10h + 8h transit + 5h handling.
    for (const auto& r : out.records) {
        CHECK(hours_between(r.order.placed_at, r.delivered_at) == doctest::Approx(29.0));
        CHECK_NOTHROW(r.validate());
    }
}

TEST_CASE("per-center conservation: arrivals equal deliveries plus backlog") {
    auto s = tiny_scenario(false);
    s.spec.calendar.add({"C1", Date::from_civil(2024, 1, 10), HolidayKind::fixed, 0.8});
    s.spec.holiday_effects["fixed"] = {0.5, 4.0};
    const auto out = sim::generate(s.spec, {}, 20, 120, 11);

    std::map<std::string, std::int64_t> cum_in, cum_out;
    for (const auto& st : out.center_days) {
        cum_in[st.center] += st.arrivals;
        cum_out[st.center] += st.deliveries;
        CHECK(st.backlog_end >= 0);
        CHECK(cum_in[st.center] == cum_out[st.center] + st.backlog_end);
    }
    // Queues fully drained by the end of the run.
    for (const auto& [center, total_in] : cum_in) {
        CHECK(total_in == cum_out[center]);
    }
    CHECK(cum_in["C1"] == static_cast<std::int64_t>(out.records.size()));
}

TEST_CASE("every emitted record satisfies the leg-sum invariant") {
    const auto s = sim::default_scenario(60);
    const auto out = sim::generate(s.spec, {}, 30, 150, 3);
    for (const auto& r : out.records) CHECK_NOTHROW(r.validate());
}

TEST_CASE("HRD event inflates post-event delivery times") {
    auto s = tiny_scenario(false);
    const Date event_start = s.spec.start_date + 10;
    const sim::HrdEvent event{event_start, 3, 3.0, 0.05};
    const auto out = sim::generate(s.spec, {event}, 25, 80, 13);

    double pre_sum = 0.0, post_sum = 0.0;
    int pre_n = 0, post_n = 0;
    for (const auto& r : out.records) {
        const auto day = r.order.placed_at.date();
        const double hours = hours_between(r.order.placed_at, r.delivered_at);
        if (day >= s.spec.start_date + 4 && day < event_start) {
            pre_sum += hours;
            ++pre_n;
        } else if (day >= event_start + 3 && day < event_start + 6) {
            post_sum += hours;
            ++post_n;
        }
    }
    REQUIRE(pre_n > 0);
    REQUIRE(post_n > 0);
    CHECK(post_sum / post_n > pre_sum / pre_n);

    // Plan tables cover the event span and carry both kinds.
    CHECK_FALSE(out.plans.ship_volume.empty());
    CHECK_FALSE(out.plans.capacity.empty());
    CHECK(out.plans.ship_volume.count(event_start.days) == 1);
    CHECK(out.plans.capacity.count({"C1", event_start.days}) == 1);
}

TEST_CASE("identical spec and seed give bit-identical outputs") {
    const auto s = sim::default_scenario(40);
    const auto a = sim::generate(s.spec, {}, 12, 100, 21);
    const auto b = sim::generate(s.spec, {}, 12, 100, 21);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].order.order_id == b.records[i].order.order_id);
        CHECK(a.records[i].order.placed_at == b.records[i].order.placed_at);
        CHECK(a.records[i].shipped_at == b.records[i].shipped_at);
        CHECK(a.records[i].delivered_at == b.records[i].delivered_at);
    }
    const auto c = sim::generate(s.spec, {}, 12, 100, 22);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.records.size() && i < c.records.size(); ++i) {
        if (a.records[i].delivered_at != c.records[i].delivered_at) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("weekend capacity dips slow down Saturday arrivals") {
    auto s = tiny_scenario(false);
    s.spec.centers[0].capacity_per_day = 95.0;
    s.spec.centers[0].weekday_capacity_mult = {1, 1, 1, 1, 1, 0.55, 0.4};
    const auto out = sim::generate(s.spec, {}, 56, 90, 17);

    double weekend_sum = 0.0, midweek_sum = 0.0;
    int weekend_n = 0, midweek_n = 0;
    for (const auto& r : out.records) {
        const auto arrival = r.arrived_at_center();
        const double lastmile = r.leg_durations.at(kLegLastmile);
        if (arrival.date().is_weekend()) {
            weekend_sum += lastmile;
            ++weekend_n;
        } else if (arrival.date().weekday() <= 2) {
            midweek_sum += lastmile;
            ++midweek_n;
        }
    }
    REQUIRE(weekend_n > 500);
    REQUIRE(midweek_n > 500);
    CHECK(weekend_sum / weekend_n > midweek_sum / midweek_n);
}

TEST_CASE("ground truth quantile: point mass on the zero-variance network") {
    const auto s = tiny_scenario(true);
    Order probe;
    probe.order_id = "probe";
    probe.placed_at = Timestamp::from_date(s.spec.start_date + 2, 10 * 60);
    probe.source_kind = SourceKind::warehouse;
    probe.source_id = "W1";
    probe.lane = s.spec.lanes[0].lane;
    probe.geo = {"560001", CityTier::tier2, AddressType::home};
    for (const double q : {0.1, 0.5, 0.9}) {
        CHECK(sim::ground_truth_quantile(s.spec, probe, q, 1000, 3) == doctest::Approx(29.0));
    }
}

TEST_CASE("ground truth quantiles: median below mean for the lognormal mixture") {
    const auto s = tiny_scenario(false);
    Order probe;
    probe.order_id = "probe";
    probe.placed_at = Timestamp::from_date(s.spec.start_date + 2, 10 * 60);
    probe.source_kind = SourceKind::warehouse;
    probe.source_id = "W1";
    probe.lane = s.spec.lanes[0].lane;
    probe.geo = {"560001", CityTier::tier2, AddressType::home};

    const int n = 100000;
    const double q50 = sim::ground_truth_quantile(s.spec, probe, 0.5, n, 5);
    const double q95 = sim::ground_truth_quantile(s.spec, probe, 0.95, n, 5);
    // Monte-Carlo mean with the same draw stream family.
    double mean = 0.0;
    {
        const double q_lo = sim::ground_truth_quantile(s.spec, probe, 1e-5, n, 5);
        (void)q_lo;
        // Rebuild the mean by integrating quantiles on a grid.
        double acc = 0.0;
        const int grid = 200;
        for (int i = 0; i < grid; ++i) {
            acc += sim::ground_truth_quantile(s.spec, probe, (i + 0.5) / grid, 2000, 5);
        }
        mean = acc / grid;
    }
    CHECK(q50 < mean);
    CHECK(q50 > mean / 1.5);
    CHECK(q95 >= q50);
    CHECK(sim::ground_truth_quantile(s.spec, probe, 0.5, 2000, 5) <=
          sim::ground_truth_quantile(s.spec, probe, 0.95, 2000, 5));
}

TEST_CASE("quantile oracle rejects tiny draw counts") {
    const auto s = tiny_scenario(true);
    Order probe;
    probe.placed_at = Timestamp::from_date(s.spec.start_date, 10 * 60);
    probe.source_kind = SourceKind::warehouse;
    probe.source_id = "W1";
    probe.lane = s.spec.lanes[0].lane;
    probe.geo = {"560001", CityTier::tier2, AddressType::home};
    CHECK_THROWS_AS(sim::ground_truth_quantile(s.spec, probe, 0.5, 10, 1), InputError);
}

TEST_CASE("plan and center-day tables round trip through CSV") {
    auto dir = std::filesystem::temp_directory_path() / "promise_test_simnet";
    std::filesystem::create_directories(dir);

    const auto s = tiny_scenario(false);
    const sim::HrdEvent event{s.spec.start_date + 5, 2, 2.0, 0.1};
    const auto out = sim::generate(s.spec, {event}, 12, 60, 9);

    const auto plans_path = (dir / "plans.csv").string();
    out.plans.save_csv(plans_path);
    const auto plans = sim::PlanTables::load_csv(plans_path);
    CHECK(plans.ship_volume == out.plans.ship_volume);
    CHECK(plans.capacity == out.plans.capacity);

    const auto days_path = (dir / "centers.csv").string();
    sim::save_center_days_csv(out.center_days, days_path);
    const auto days = sim::load_center_days_csv(days_path);
    REQUIRE(days.size() == out.center_days.size());
    CHECK(days[3].center == out.center_days[3].center);
    CHECK(days[3].arrivals == out.center_days[3].arrivals);
    CHECK(days[3].capacity == out.center_days[3].capacity);
}

TEST_CASE("scenario files: presets and full round trip") {
    auto dir = std::filesystem::temp_directory_path() / "promise_test_simnet";
    std::filesystem::create_directories(dir);

    const auto preset_path = (dir / "preset.json").string();
    atomic_write_file(preset_path, "{\"preset\": \"hrd\", \"horizon_days\": 120}\n");
    const auto preset = sim::load_scenario(preset_path);
    CHECK(preset.events.size() == 2);
    CHECK_NOTHROW(preset.spec.validate());

    const auto full_path = (dir / "full.json").string();
    sim::save_scenario(preset, full_path);
    const auto full = sim::load_scenario(full_path);
    CHECK(full.events.size() == preset.events.size());
    CHECK(full.spec.centers.size() == preset.spec.centers.size());
    CHECK(full.spec.calendar.all().size() == preset.spec.calendar.all().size());

    const auto bad_path = (dir / "bad.json").string();
    atomic_write_file(bad_path, "{\"preset\": \"nope\"}\n");
    CHECK_THROWS_AS(sim::load_scenario(bad_path), ConfigError);
}

TEST_CASE("network spec validation names the broken piece") {
    auto s = tiny_scenario(true);
    s.spec.lanes[0].hop_transit.pop_back();
    CHECK_THROWS_AS(s.spec.validate(), ConfigError);

    auto s2 = tiny_scenario(true);
    s2.spec.centers[0].capacity_per_day = 0.0;
    CHECK_THROWS_AS(s2.spec.validate(), ConfigError);
}
