#include <doctest.h>

#include <filesystem>

#include "promise/baseline.hpp"

using namespace promise;
namespace bl = promise::baseline;

namespace {

Order warehouse_order(Timestamp placed) {
    Order o;
    o.order_id = "o1";
    o.placed_at = placed;
    o.source_kind = SourceKind::warehouse;
    o.source_id = "W1";
    o.lane = {"W1", "C1", {"H1"}, Carrier::own_logistics};
    o.geo = {"560001", CityTier::tier1, AddressType::home};
    return o;
}

bl::RuleConfig zero_config() {
    bl::RuleConfig c;
    c.warehouse_hours["W1"] = {{"pick", 0.0}, {"pack", 0.0}};
    c.hop_hours[bl::RuleConfig::hop_key("W1", "H1")] = 0.0;
    c.hop_hours[bl::RuleConfig::hop_key("H1", "C1")] = 0.0;
    c.cutoffs["W1"] = {};
    c.cutoffs["H1"] = {};
    return c;
}

} // namespace

TEST_CASE("identity config promises the placement instant") {
    const auto placed = Timestamp::parse("2024-01-02 11:30");
    const HolidayCalendar cal;
    CHECK(bl::rule_promise(warehouse_order(placed), zero_config(), cal) == placed);
}

TEST_CASE("clock rolls to the next day's cutoff when ready too late") {
    auto config = zero_config();
    config.cutoffs["W1"] = {14 * 60};
    const HolidayCalendar cal;
    // Ready 15:00 against a daily 14:00 cutoff: departs next day 14:00.
    const auto promise =
        bl::rule_promise(warehouse_order(Timestamp::parse("2024-01-02 15:00")), config, cal);
    CHECK(promise == Timestamp::parse("2024-01-03 14:00"));

    // Ready exactly at the cutoff departs at it.
    const auto at_cutoff =
        bl::rule_promise(warehouse_order(Timestamp::parse("2024-01-02 14:00")), config, cal);
    CHECK(at_cutoff == Timestamp::parse("2024-01-02 14:00"));

    // Earlier same day waits for the cutoff.
    const auto early =
        bl::rule_promise(warehouse_order(Timestamp::parse("2024-01-02 09:00")), config, cal);
    CHECK(early == Timestamp::parse("2024-01-02 14:00"));
}

TEST_CASE("one weekend day crossed adds the weekend pad once") {
    auto config = zero_config();
    config.hop_hours[bl::RuleConfig::hop_key("H1", "C1")] = 48.0;
    config.weekend_pad_hours = 12.0;
    const HolidayCalendar cal;
    // Placed Friday 10:00; base landing Sunday 10:00; only Saturday is
    // strictly between.
    const auto placed = Timestamp::parse("2024-01-05 10:00");
    REQUIRE(placed.date().weekday() == 4);
    const auto promise = bl::rule_promise(warehouse_order(placed), config, cal);
    CHECK(promise == Timestamp::parse("2024-01-07 22:00"));
}

TEST_CASE("holiday pad applies per padded day crossed") {
    auto config = zero_config();
    config.hop_hours[bl::RuleConfig::hop_key("H1", "C1")] = 72.0;
    config.holiday_pad_hours = 6.0;
    HolidayCalendar cal;
    cal.add({"C1", Date::parse("2024-01-03"), HolidayKind::fixed, 0.7});
    cal.add({"C1", Date::parse("2024-01-04"), HolidayKind::flexible, 0.7});
    cal.add({"C2", Date::parse("2024-01-03"), HolidayKind::fixed, 0.7}); // other region
    const auto placed = Timestamp::parse("2024-01-02 08:00");
    const auto promise = bl::rule_promise(warehouse_order(placed), config, cal);
    // Base landing 2024-01-05 08:00; days 3 and 4 each add 6h.
    CHECK(promise == Timestamp::parse("2024-01-05 20:00"));
}

TEST_CASE("vendor orders use vendor hours, never warehouse hours") {
    auto config = zero_config();
    config.vendor_hours["V7"] = 24.0;
    auto order = warehouse_order(Timestamp::parse("2024-01-02 10:00"));
    order.source_kind = SourceKind::vendor;
    order.source_id = "V7";
    order.lane.origin = "V7";
    config.cutoffs["V7"] = {};
    config.hop_hours[bl::RuleConfig::hop_key("V7", "H1")] = 0.0;
    const HolidayCalendar cal;
    CHECK(bl::rule_promise(order, config, cal) == Timestamp::parse("2024-01-03 10:00"));
}

TEST_CASE("missing configuration errors name the offending key") {
    const HolidayCalendar cal;
    auto order = warehouse_order(Timestamp::parse("2024-01-02 10:00"));

    auto no_hop = zero_config();
    no_hop.hop_hours.erase(bl::RuleConfig::hop_key("H1", "C1"));
    try {
        bl::rule_promise(order, no_hop, cal);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("hop_times[H1>C1]") != std::string::npos);
    }

    auto no_cutoff = zero_config();
    no_cutoff.cutoffs.erase("H1");
    try {
        bl::rule_promise(order, no_cutoff, cal);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("cutoffs[H1]") != std::string::npos);
    }

    auto no_wh = zero_config();
    no_wh.warehouse_hours.clear();
    try {
        bl::rule_promise(order, no_wh, cal);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("warehouse_times[W1]") != std::string::npos);
    }
}

TEST_CASE("promise is monotone in every configured time") {
    HolidayCalendar cal;
    cal.add({"C1", Date::parse("2024-01-06"), HolidayKind::fixed, 0.5});
    auto config = zero_config();
    config.warehouse_hours["W1"]["pick"] = 3.0;
    config.hop_hours[bl::RuleConfig::hop_key("W1", "H1")] = 10.0;
    config.hop_hours[bl::RuleConfig::hop_key("H1", "C1")] = 30.0;
    config.lastmile_hours = 6.0;
    config.cutoffs["W1"] = {13 * 60};
    config.weekend_pad_hours = 8.0;
    config.holiday_pad_hours = 4.0;
    const auto order = warehouse_order(Timestamp::parse("2024-01-04 10:00"));
    const auto base = bl::rule_promise(order, config, cal);
    CHECK(base >= order.placed_at);

    for (const auto bump : {std::pair{"wh", 0}, {"hop", 0}, {"lastmile", 0}}) {
        auto c2 = config;
        if (std::string(bump.first) == "wh") c2.warehouse_hours["W1"]["pick"] += 5.0;
        if (std::string(bump.first) == "hop") {
            c2.hop_hours[bl::RuleConfig::hop_key("H1", "C1")] += 5.0;
        }
        if (std::string(bump.first) == "lastmile") c2.lastmile_hours += 5.0;
        CHECK(bl::rule_promise(order, c2, cal) >= base);
    }
}

TEST_CASE("orders within one inter-cutoff window share a promise") {
    auto config = zero_config();
    config.cutoffs["W1"] = {16 * 60};
    config.hop_hours[bl::RuleConfig::hop_key("W1", "H1")] = 12.0;
    config.hop_hours[bl::RuleConfig::hop_key("H1", "C1")] = 24.0;
    config.lastmile_hours = 4.0;
    const HolidayCalendar cal;
    const auto p1 =
        bl::rule_promise(warehouse_order(Timestamp::parse("2024-01-02 08:00")), config, cal);
    const auto p2 =
        bl::rule_promise(warehouse_order(Timestamp::parse("2024-01-02 15:59")), config, cal);
    CHECK(p1 == p2);
}

TEST_CASE("rule config JSON round trip") {
    auto config = zero_config();
    config.vendor_hours["V1"] = 18.0;
    config.lastmile_hours = 5.5;
    config.cutoffs["W1"] = {10 * 60, 16 * 60};
    config.weekend_pad_hours = 9.0;
    const auto text = config.to_json_string();
    const auto back = bl::RuleConfig::from_json_string(text);
    CHECK(back.to_json_string() == text);

    auto dir = std::filesystem::temp_directory_path() / "promise_test_baseline";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "rules.json").string();
    config.save(path);
    CHECK(bl::RuleConfig::load(path).to_json_string() == text);

    auto bad = config;
    bad.cutoffs["W1"] = {16 * 60, 10 * 60};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
