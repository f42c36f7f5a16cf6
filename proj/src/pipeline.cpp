#include "promise/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

namespace promise::pipeline {

using json = nlohmann::ordered_json;

std::string to_string(FeatureFamily family) {
    switch (family) {
        case FeatureFamily::historical_stats: return "historical_stats";
        case FeatureFamily::geo: return "geo";
        case FeatureFamily::load: return "load";
        case FeatureFamily::manpower: return "manpower";
        case FeatureFamily::lastmile_perf: return "lastmile_perf";
        case FeatureFamily::holiday_seasonal: return "holiday_seasonal";
        case FeatureFamily::plan: return "plan";
        case FeatureFamily::pendency: return "pendency";
        case FeatureFamily::vendor: return "vendor";
    }
    return "historical_stats";
}

FeatureFamily feature_family_from_string(const std::string& text) {
    for (const auto f :
         {FeatureFamily::historical_stats, FeatureFamily::geo, FeatureFamily::load,
          FeatureFamily::manpower, FeatureFamily::lastmile_perf, FeatureFamily::holiday_seasonal,
          FeatureFamily::plan, FeatureFamily::pendency, FeatureFamily::vendor}) {
        if (to_string(f) == text) return f;
    }
    throw ConfigError("unknown feature family: " + text);
}

std::string to_string(Aggregation agg) {
    switch (agg) {
        case Aggregation::mean: return "mean";
        case Aggregation::sd: return "sd";
        case Aggregation::median: return "median";
        case Aggregation::count: return "count";
    }
    return "mean";
}

Aggregation aggregation_from_string(const std::string& text) {
    for (const auto a :
         {Aggregation::mean, Aggregation::sd, Aggregation::median, Aggregation::count}) {
        if (to_string(a) == text) return a;
    }
    throw ConfigError("unknown aggregation: " + text);
}

void FeatureRecipe::validate() const {
    if (geo_backoff_min_obs < 1) throw ConfigError("geo_backoff_min_obs must be >= 1");
    for (const auto& def : features) {
        if (def.name.empty()) throw ConfigError("feature definition without a name");
        if (def.window_days < 1) {
            throw ConfigError("feature " + def.name + ": window must be >= 1 day");
        }
    }
}

FeatureRecipe FeatureRecipe::without_families(const std::set<FeatureFamily>& drop) const {
    FeatureRecipe out = *this;
    out.features.clear();
    for (const auto& def : features) {
        if (!drop.count(def.family)) out.features.push_back(def);
    }
    return out;
}

std::string FeatureRecipe::to_json_string() const {
    json j;
    j["geo_backoff_min_obs"] = geo_backoff_min_obs;
    j["features"] = json::array();
    for (const auto& def : features) {
        j["features"].push_back({{"name", def.name},
                                 {"family", to_string(def.family)},
                                 {"window_days", def.window_days},
                                 {"agg", to_string(def.agg)}});
    }
    return j.dump(2) + "\n";
}

FeatureRecipe FeatureRecipe::from_json_string(const std::string& text) {
    json j = json::parse(text);
    FeatureRecipe r;
    r.geo_backoff_min_obs = j.value("geo_backoff_min_obs", 30);
    for (const auto& f : j.at("features")) {
        FeatureDef def;
        def.name = f.at("name").get<std::string>();
        def.family = feature_family_from_string(f.at("family").get<std::string>());
        def.window_days = f.value("window_days", 14);
        def.agg = aggregation_from_string(f.value("agg", std::string("mean")));
        r.features.push_back(std::move(def));
    }
    r.validate();
    return r;
}

FeatureRecipe FeatureRecipe::default_shipping() {
    FeatureRecipe r;
    r.features = {
        {"lane_mean", FeatureFamily::historical_stats, 14, Aggregation::mean},
        {"lane_sd", FeatureFamily::historical_stats, 14, Aggregation::sd},
        {"lane_median", FeatureFamily::historical_stats, 14, Aggregation::median},
        {"lane_count", FeatureFamily::historical_stats, 14, Aggregation::count},
        {"geo_mean", FeatureFamily::geo, 21, Aggregation::mean},
        {"origin_volume", FeatureFamily::load, 7, Aggregation::mean},
        {"dest_arrivals", FeatureFamily::lastmile_perf, 7, Aggregation::mean},
        {"dest_deliveries", FeatureFamily::lastmile_perf, 7, Aggregation::mean},
        {"dest_backlog", FeatureFamily::lastmile_perf, 7, Aggregation::mean},
        {"manpower_own", FeatureFamily::manpower, 14, Aggregation::mean},
        {"manpower_contract", FeatureFamily::manpower, 14, Aggregation::mean},
        {"ship_weekday", FeatureFamily::holiday_seasonal, 1, Aggregation::mean},
        {"dest_holiday_kind", FeatureFamily::holiday_seasonal, 1, Aggregation::mean},
        {"handling_weekend", FeatureFamily::holiday_seasonal, 1, Aggregation::mean},
        {"handling_holiday", FeatureFamily::holiday_seasonal, 1, Aggregation::mean},
        {"holiday_adjacent_weekend", FeatureFamily::holiday_seasonal, 1, Aggregation::mean},
        {"plan_arrivals", FeatureFamily::plan, 7, Aggregation::mean},
        {"plan_outflow", FeatureFamily::plan, 7, Aggregation::mean},
        {"projected_backlog", FeatureFamily::pendency, 7, Aggregation::mean},
        {"pendency_balance", FeatureFamily::pendency, 7, Aggregation::mean},
    };
    return r;
}

FeatureRecipe FeatureRecipe::default_preship_warehouse() {
    FeatureRecipe r;
    r.features = {
        {"source_mean", FeatureFamily::historical_stats, 14, Aggregation::mean},
        {"source_sd", FeatureFamily::historical_stats, 14, Aggregation::sd},
        {"source_median", FeatureFamily::historical_stats, 14, Aggregation::median},
        {"source_volume", FeatureFamily::load, 7, Aggregation::mean},
        {"ship_weekday", FeatureFamily::holiday_seasonal, 1, Aggregation::mean},
    };
    return r;
}

FeatureRecipe FeatureRecipe::default_preship_vendor() {
    FeatureRecipe r;
    r.features = {
        {"source_mean", FeatureFamily::historical_stats, 14, Aggregation::mean},
        {"source_sd", FeatureFamily::historical_stats, 14, Aggregation::sd},
        {"source_volume", FeatureFamily::load, 7, Aggregation::mean},
        {"ship_weekday", FeatureFamily::holiday_seasonal, 1, Aggregation::mean},
        {"vendor_first_po_hour", FeatureFamily::vendor, 1, Aggregation::mean},
        {"vendor_first_pickup_hour", FeatureFamily::vendor, 1, Aggregation::mean},
        {"vendor_coloader", FeatureFamily::vendor, 1, Aggregation::mean},
        {"vendor_max_processing", FeatureFamily::vendor, 1, Aggregation::mean},
    };
    return r;
}

FeatureRecipe FeatureRecipe::default_full() {
    FeatureRecipe r = default_shipping();
    std::set<std::string> seen;
    for (const auto& def : r.features) seen.insert(def.name);
    for (const auto& extra : {default_preship_warehouse(), default_preship_vendor()}) {
        for (const auto& def : extra.features) {
            if (seen.insert(def.name).second) r.features.push_back(def);
        }
    }
    return r;
}

// --- day-indexed statistics ---

namespace {

struct DaySeries {
    std::vector<std::int64_t> days; // sorted
    std::vector<std::int64_t> cum_count;
    std::vector<double> cum_sum;
    std::vector<double> cum_sumsq;
    std::vector<std::vector<double>> day_values;

    struct Agg {
        std::int64_t count = 0;
        double sum = 0.0;
        double sumsq = 0.0;
    };

    void build(std::map<std::int64_t, std::vector<double>>&& by_day) {
        double sum = 0.0, sumsq = 0.0;
        std::int64_t count = 0;
        for (auto& [day, values] : by_day) {
            days.push_back(day);
            for (const double v : values) {
                sum += v;
                sumsq += v * v;
                ++count;
            }
            cum_count.push_back(count);
            cum_sum.push_back(sum);
            cum_sumsq.push_back(sumsq);
            day_values.push_back(std::move(values));
        }
    }

    // [from, to)
    Agg range(std::int64_t from, std::int64_t to) const {
        const auto lo = std::lower_bound(days.begin(), days.end(), from) - days.begin();
        const auto hi = std::lower_bound(days.begin(), days.end(), to) - days.begin();
        if (hi <= lo) return {};
        Agg out;
        const auto l = static_cast<std::size_t>(lo), h = static_cast<std::size_t>(hi);
        out.count = cum_count[h - 1] - (l > 0 ? cum_count[l - 1] : 0);
        out.sum = cum_sum[h - 1] - (l > 0 ? cum_sum[l - 1] : 0.0);
        out.sumsq = cum_sumsq[h - 1] - (l > 0 ? cum_sumsq[l - 1] : 0.0);
        return out;
    }

    std::vector<double> gather(std::int64_t from, std::int64_t to) const {
        std::vector<double> out;
        const auto lo = std::lower_bound(days.begin(), days.end(), from) - days.begin();
        const auto hi = std::lower_bound(days.begin(), days.end(), to) - days.begin();
        for (auto i = lo; i < hi; ++i) {
            const auto& v = day_values[static_cast<std::size_t>(i)];
            out.insert(out.end(), v.begin(), v.end());
        }
        return out;
    }

    double aggregate(std::int64_t from, std::int64_t to, Aggregation agg) const {
        const auto a = range(from, to);
        switch (agg) {
            case Aggregation::count: return static_cast<double>(a.count);
            case Aggregation::mean:
                return a.count > 0 ? a.sum / static_cast<double>(a.count) : kMissingValue;
            case Aggregation::sd: {
                if (a.count < 2) return kMissingValue;
                const double mean = a.sum / static_cast<double>(a.count);
                const double var =
                    std::max(0.0, a.sumsq / static_cast<double>(a.count) - mean * mean);
                return std::sqrt(var);
            }
            case Aggregation::median: {
                auto values = gather(from, to);
                if (values.empty()) return kMissingValue;
                return calendar::median(std::move(values));
            }
        }
        return kMissingValue;
    }
};

using KeyedSeries = std::unordered_map<std::string, DaySeries>;

struct CenterDayIndex {
    std::vector<std::int64_t> days;
    std::vector<double> arrivals, deliveries, backlog, capacity, manpower_own, manpower_contract;
    std::vector<double> cum_arrivals, cum_deliveries;

    double latest_before(std::int64_t day, const std::vector<double>& col) const {
        const auto it = std::lower_bound(days.begin(), days.end(), day);
        if (it == days.begin()) return kMissingValue;
        return col[static_cast<std::size_t>(it - days.begin() - 1)];
    }

    DaySeries::Agg range(std::int64_t from, std::int64_t to,
                         const std::vector<double>& col) const {
        DaySeries::Agg out;
        const auto lo = std::lower_bound(days.begin(), days.end(), from) - days.begin();
        const auto hi = std::lower_bound(days.begin(), days.end(), to) - days.begin();
        for (auto i = lo; i < hi; ++i) {
            const double v = col[static_cast<std::size_t>(i)];
            out.sum += v;
            out.sumsq += v * v;
            out.count += 1;
        }
        return out;
    }
};

std::string tier_key(CityTier t) {
    switch (t) {
        case CityTier::tier1: return "tier1";
        case CityTier::tier2: return "tier2";
        case CityTier::tier3: return "tier3";
    }
    return "tier2";
}

struct FeatureIndex {
    KeyedSeries lane_shipping;    // delivered-day -> shipping hours, key = lane
    KeyedSeries lane_linehaul;    // delivered-day -> linehaul hours, key = lane
    KeyedSeries source_preship;   // delivered-day -> preship hours, key = source id
    KeyedSeries geo_pincode, geo_prefix, geo_tier, geo_global;
    KeyedSeries placed_volume;    // placed-day -> 1.0 per order, key = origin/source
    KeyedSeries center_arrivals_records;   // arrival-day events from records
    KeyedSeries center_deliveries_records; // delivered-day events from records
    std::unordered_map<std::string, CenterDayIndex> center_days;
    std::unordered_map<std::string, const simnet::VendorSpec*> vendors;
    std::unordered_map<std::string, double> center_share; // share of network arrivals
    std::unordered_map<std::string, int> center_modal_transit_days;

    static FeatureIndex build(const FeatureInputs& inputs);
};

FeatureIndex FeatureIndex::build(const FeatureInputs& inputs) {
    if (!inputs.history) throw InputError("build_features: history is required");
    if (!inputs.calendar) throw InputError("build_features: calendar is required");
    FeatureIndex idx;

    std::map<std::string, std::map<std::int64_t, std::vector<double>>> lane_ship, lane_lh,
        source_pre, pin, prefix, tier, global, placed, arr_rec, del_rec;
    std::map<std::string, std::map<int, std::int64_t>> transit_day_counts;
    std::map<std::string, std::int64_t> arrivals_per_center;
    std::int64_t arrivals_total = 0;

    for (const auto& r : *inputs.history) {
        if (r.delivered_at.date() >= inputs.as_of) {
            throw InputError("history record " + r.order.order_id + " dated at or after as_of");
        }
        const auto delivered_day = r.delivered_at.date().days;
        const double shipping_hours = hours_between(r.shipped_at, r.delivered_at);
        const double preship_hours = hours_between(r.order.placed_at, r.shipped_at);
        const auto lane_key = r.order.lane.key();
        const auto& dest = r.order.lane.destination;

        lane_ship[lane_key][delivered_day].push_back(shipping_hours);
        const auto lh_it = r.leg_durations.find(kLegLinehaul);
        if (lh_it != r.leg_durations.end()) {
            lane_lh[lane_key][delivered_day].push_back(lh_it->second);
        }
        source_pre[r.order.source_id][delivered_day].push_back(preship_hours);
        pin[r.order.geo.pincode][delivered_day].push_back(shipping_hours);
        prefix[r.order.geo.prefix()][delivered_day].push_back(shipping_hours);
        tier[tier_key(r.order.geo.tier)][delivered_day].push_back(shipping_hours);
        global[""][delivered_day].push_back(shipping_hours);
        placed[r.order.lane.origin][r.order.placed_at.date().days].push_back(1.0);
        if (r.order.source_kind == SourceKind::vendor) {
            placed[r.order.source_id][r.order.placed_at.date().days].push_back(1.0);
        }

        const auto arrival_day = r.arrived_at_center().date().days;
        arr_rec[dest][arrival_day].push_back(1.0);
        del_rec[dest][delivered_day].push_back(1.0);
        const int transit_days = static_cast<int>(arrival_day - r.shipped_at.date().days);
        transit_day_counts[dest][transit_days] += 1;
        arrivals_per_center[dest] += 1;
        ++arrivals_total;
    }

    auto materialize = [](std::map<std::string, std::map<std::int64_t, std::vector<double>>>&& m,
                          KeyedSeries& out) {
        for (auto& [key, by_day] : m) out[key].build(std::move(by_day));
    };
    materialize(std::move(lane_ship), idx.lane_shipping);
    materialize(std::move(lane_lh), idx.lane_linehaul);
    materialize(std::move(source_pre), idx.source_preship);
    materialize(std::move(pin), idx.geo_pincode);
    materialize(std::move(prefix), idx.geo_prefix);
    materialize(std::move(tier), idx.geo_tier);
    materialize(std::move(global), idx.geo_global);
    materialize(std::move(placed), idx.placed_volume);
    materialize(std::move(arr_rec), idx.center_arrivals_records);
    materialize(std::move(del_rec), idx.center_deliveries_records);

    if (inputs.center_days) {
        std::map<std::string, std::vector<const simnet::CenterDayStats*>> grouped;
        for (const auto& s : *inputs.center_days) {
            if (s.date >= inputs.as_of) continue; // only realized days
            grouped[s.center].push_back(&s);
        }
        for (auto& [center, rows] : grouped) {
            std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
                return a->date < b->date;
            });
            auto& ci = idx.center_days[center];
            double ca = 0.0, cd = 0.0;
            for (const auto* s : rows) {
                ci.days.push_back(s->date.days);
                ci.arrivals.push_back(s->arrivals);
                ci.deliveries.push_back(s->deliveries);
                ci.backlog.push_back(s->backlog_end);
                ci.capacity.push_back(s->capacity);
                ci.manpower_own.push_back(s->manpower_own);
                ci.manpower_contract.push_back(s->manpower_contract);
                ca += s->arrivals;
                cd += s->deliveries;
                ci.cum_arrivals.push_back(ca);
                ci.cum_deliveries.push_back(cd);
            }
        }
    }
    if (inputs.vendors) {
        for (const auto& v : *inputs.vendors) idx.vendors[v.id] = &v;
    }
    for (const auto& [center, count] : arrivals_per_center) {
        idx.center_share[center] =
            arrivals_total > 0 ? static_cast<double>(count) / arrivals_total : 1.0;
        int best_days = 0;
        std::int64_t best_count = 0;
        for (const auto& [d, c] : transit_day_counts[center]) {
            if (c > best_count) {
                best_count = c;
                best_days = d;
            }
        }
        idx.center_modal_transit_days[center] = best_days;
    }
    return idx;
}

// Pendency projection against a prebuilt index.
PendencyProjection project_with_index(const FeatureIndex& idx, const simnet::PlanTables* plans,
                                      const std::string& center, Date landing, Date as_of) {
    PendencyProjection out;
    const auto share_it = idx.center_share.find(center);
    const double share = share_it == idx.center_share.end() ? 1.0 : share_it->second;
    const auto modal_it = idx.center_modal_transit_days.find(center);
    const int modal = modal_it == idx.center_modal_transit_days.end() ? 0 : modal_it->second;

    // Trailing 7-day mean daily ship volume reaching this center.
    auto trailing_ship = [&](Date upto) {
        const auto it = idx.center_arrivals_records.find(center);
        if (it == idx.center_arrivals_records.end()) return kMissingValue;
        const auto agg = it->second.range(upto.days - 7, upto.days);
        return agg.count > 0 ? agg.sum / 7.0 : kMissingValue;
    };
    auto trailing_outflow = [&](Date upto) {
        const auto ci = idx.center_days.find(center);
        if (ci != idx.center_days.end()) {
            const auto agg = ci->second.range(upto.days - 7, upto.days, ci->second.deliveries);
            if (agg.count > 0) return agg.sum / static_cast<double>(agg.count);
        }
        const auto it = idx.center_deliveries_records.find(center);
        if (it == idx.center_deliveries_records.end()) return kMissingValue;
        const auto agg = it->second.range(upto.days - 7, upto.days);
        return agg.count > 0 ? agg.sum / 7.0 : kMissingValue;
    };

    auto projected_arrivals_on = [&](Date d) {
        if (plans) {
            const auto it = plans->ship_volume.find(d.days - modal);
            if (it != plans->ship_volume.end()) return it->second * share;
        }
        const double t = trailing_ship(as_of);
        return std::isnan(t) ? 0.0 : t;
    };
    auto projected_outflow_on = [&](Date d) {
        if (plans) {
            const auto it = plans->capacity.find({center, d.days});
            if (it != plans->capacity.end()) return it->second;
        }
        const double t = trailing_outflow(as_of);
        return std::isnan(t) ? 0.0 : t;
    };

    // Seed with the realized backlog just before as_of, then roll the plan
    // forward to the eve of the landing date.
    double backlog = 0.0;
    const auto ci = idx.center_days.find(center);
    if (ci != idx.center_days.end()) {
        const double b = ci->second.latest_before(as_of.days, ci->second.backlog);
        if (!std::isnan(b)) backlog = b;
    } else {
        const auto arr_it = idx.center_arrivals_records.find(center);
        const auto del_it = idx.center_deliveries_records.find(center);
        if (arr_it != idx.center_arrivals_records.end() &&
            del_it != idx.center_deliveries_records.end()) {
            const double in = arr_it->second.range(0, as_of.days).sum;
            const double done = del_it->second.range(0, as_of.days).sum;
            backlog = std::max(0.0, in - done);
        }
    }
    for (Date d = as_of; d < landing; d = d + 1) {
        backlog = std::max(0.0, backlog + projected_arrivals_on(d) - projected_outflow_on(d));
    }
    out.projected_backlog = backlog;
    out.projected_arrivals = projected_arrivals_on(landing);
    out.planned_outflow = projected_outflow_on(landing);
    return out;
}

} // namespace

PendencyProjection project_pendency(const simnet::PlanTables* plans,
                                    std::span<const DeliveryRecord> history,
                                    std::span<const simnet::CenterDayStats> center_days,
                                    const std::string& center, Date landing_date, Date as_of) {
    FeatureInputs inputs;
    std::vector<DeliveryRecord> hist(history.begin(), history.end());
    std::vector<simnet::CenterDayStats> days(center_days.begin(), center_days.end());
    HolidayCalendar cal;
    inputs.history = &hist;
    inputs.calendar = &cal;
    inputs.center_days = days.empty() ? nullptr : &days;
    inputs.as_of = as_of;
    const auto idx = FeatureIndex::build(inputs);
    return project_with_index(idx, plans, center, landing_date, as_of);
}

namespace {

struct RowContext {
    const TargetOrder* target = nullptr;
    Date row_as_of;     // order date: feature visibility cutoff
    Date landing;       // estimated landing date at the destination center
    std::string lane_key;
};

double geo_backoff_mean(const FeatureIndex& idx, const FeatureRecipe& recipe,
                        const RowContext& row, int window) {
    const auto& geo = row.target->order.geo;
    const std::int64_t to = row.row_as_of.days;
    const std::int64_t from = to - window;
    const std::array<std::pair<const KeyedSeries*, std::string>, 4> levels = {{
        {&idx.geo_pincode, geo.pincode},
        {&idx.geo_prefix, geo.prefix()},
        {&idx.geo_tier, tier_key(geo.tier)},
        {&idx.geo_global, ""},
    }};
    for (std::size_t level = 0; level < levels.size(); ++level) {
        const auto it = levels[level].first->find(levels[level].second);
        if (it == levels[level].first->end()) continue;
        const auto agg = it->second.range(from, to);
        const bool is_global = level + 1 == levels.size();
        if (agg.count >= recipe.geo_backoff_min_obs || (is_global && agg.count > 0)) {
            return agg.sum / static_cast<double>(agg.count);
        }
    }
    return kMissingValue;
}

double keyed_aggregate(const KeyedSeries& series, const std::string& key, std::int64_t from,
                       std::int64_t to, Aggregation agg) {
    const auto it = series.find(key);
    if (it == series.end()) {
        return agg == Aggregation::count ? 0.0 : kMissingValue;
    }
    return it->second.aggregate(from, to, agg);
}

} // namespace

namespace {

Dataset build_features_indexed(const FeatureIndex& idx, const std::vector<TargetOrder>& targets,
                               const FeatureRecipe& recipe, const FeatureInputs& inputs) {
    recipe.validate();

    // Identity columns.
    const std::size_t n = targets.size();
    std::vector<std::string> lane(n), origin(n), destination(n), carrier(n), tier(n),
        address(n), prefix(n), source_id(n);
    std::vector<double> item_count(n), is_multi(n), placed_hour(n), anchor_hour(n);
    std::vector<RowContext> rows(n);

    for (std::size_t i = 0; i < n; ++i) {
        const auto& t = targets[i];
        rows[i].target = &t;
        // Visibility cutoff: the row's own order date, capped at the
        // snapshot as_of for orders quoted after it.
        rows[i].row_as_of = std::min(t.order.placed_at.date(), inputs.as_of);
        rows[i].lane_key = t.order.lane.key();

        lane[i] = rows[i].lane_key;
        origin[i] = t.order.lane.origin;
        destination[i] = t.order.lane.destination;
        carrier[i] = t.order.lane.carrier == Carrier::own_logistics ? "own" : "3pl";
        tier[i] = tier_key(t.order.geo.tier);
        address[i] = t.order.geo.address == AddressType::home ? "home" : "office";
        prefix[i] = t.order.geo.prefix();
        source_id[i] = t.order.source_id;
        item_count[i] = t.order.item_count;
        is_multi[i] = t.order.is_multi_item() ? 1.0 : 0.0;
        placed_hour[i] = static_cast<double>(t.order.placed_at.minute_of_day()) / 60.0;
        anchor_hour[i] = static_cast<double>(t.anchor.minute_of_day()) / 60.0;

        // Landing estimate: anchor date plus the lane's windowed mean
        // shipping days (fallback two days).
        const double lane_mean =
            keyed_aggregate(idx.lane_shipping, rows[i].lane_key, rows[i].row_as_of.days - 14,
                            rows[i].row_as_of.days, Aggregation::mean);
        const int transit_days =
            std::isnan(lane_mean) ? 2 : std::max(0, static_cast<int>(std::lround(lane_mean / 24.0)));
        rows[i].landing = t.anchor.date() + transit_days;
    }

    Dataset ds;
    ds.rows = n;
    ds.add_categorical("lane", lane);
    ds.add_categorical("origin", origin);
    ds.add_categorical("destination", destination);
    ds.add_categorical("carrier", carrier);
    ds.add_categorical("tier", tier);
    ds.add_categorical("address_type", address);
    ds.add_categorical("pincode_prefix", prefix);
    ds.add_categorical("source_id", source_id);
    ds.add_numeric("item_count", std::move(item_count));
    ds.add_numeric("is_multi", std::move(is_multi));
    ds.add_numeric("placed_hour", std::move(placed_hour));
    ds.add_numeric("anchor_hour", std::move(anchor_hour));
    ds.rows = n;

    auto handling_lookup = [&](const std::string& region, HolidayKind kind) {
        if (!inputs.handling) return 0.0;
        const auto it = inputs.handling->find({region, static_cast<int>(kind)});
        return it == inputs.handling->end() ? 0.0 : it->second.extra_hours;
    };

    for (const auto& def : recipe.features) {
        std::vector<double> numeric(n, kMissingValue);
        std::vector<std::string> categorical;
        const bool is_categorical = def.name == "ship_weekday" || def.name == "dest_holiday_kind";
        if (is_categorical) categorical.resize(n);

        for (std::size_t i = 0; i < n; ++i) {
            const auto& row = rows[i];
            const auto& order = row.target->order;
            const std::int64_t to = row.row_as_of.days;
            const std::int64_t from = to - def.window_days;
            const auto& dest = order.lane.destination;

            switch (def.family) {
                case FeatureFamily::historical_stats: {
                    if (def.name.rfind("lane_", 0) == 0) {
                        numeric[i] =
                            keyed_aggregate(idx.lane_shipping, row.lane_key, from, to, def.agg);
                    } else if (def.name.rfind("source_", 0) == 0) {
                        numeric[i] =
                            keyed_aggregate(idx.source_preship, order.source_id, from, to, def.agg);
                    } else {
                        throw ConfigError("unknown historical_stats feature: " + def.name);
                    }
                    break;
                }
                case FeatureFamily::geo:
                    numeric[i] = geo_backoff_mean(idx, recipe, row, def.window_days);
                    break;
                case FeatureFamily::load: {
                    const std::string key = def.name == "source_volume" &&
                                                    order.source_kind == SourceKind::vendor
                                                ? order.source_id
                                                : order.lane.origin;
                    const auto it = idx.placed_volume.find(key);
                    if (it != idx.placed_volume.end()) {
                        const auto agg = it->second.range(from, to);
                        switch (def.agg) {
                            case Aggregation::count: numeric[i] = agg.sum; break;
                            default:
                                numeric[i] = agg.sum / static_cast<double>(def.window_days);
                                break;
                        }
                    }
                    break;
                }
                case FeatureFamily::manpower: {
                    const auto ci = idx.center_days.find(dest);
                    if (ci == idx.center_days.end()) break;
                    const auto& col = def.name == "manpower_contract"
                                          ? ci->second.manpower_contract
                                          : ci->second.manpower_own;
                    // Same-weekday mean over the window, keyed to the landing
                    // weekday.
                    double sum = 0.0;
                    int count = 0;
                    const int want = row.landing.weekday();
                    for (std::size_t k = 0; k < ci->second.days.size(); ++k) {
                        const auto day = ci->second.days[k];
                        if (day < from || day >= to) continue;
                        if (Date{day}.weekday() != want) continue;
                        sum += col[k];
                        ++count;
                    }
                    if (count > 0) {
                        numeric[i] = sum / count;
                    } else {
                        const double latest = ci->second.latest_before(to, col);
                        if (!std::isnan(latest)) numeric[i] = latest;
                    }
                    break;
                }
                case FeatureFamily::lastmile_perf: {
                    const auto ci = idx.center_days.find(dest);
                    if (def.name == "dest_backlog") {
                        if (ci != idx.center_days.end()) {
                            const double b = ci->second.latest_before(to, ci->second.backlog);
                            if (!std::isnan(b)) numeric[i] = b;
                        } else {
                            const auto arr = keyed_aggregate(idx.center_arrivals_records, dest, 0,
                                                             to, Aggregation::count);
                            const auto del = keyed_aggregate(idx.center_deliveries_records, dest,
                                                             0, to, Aggregation::count);
                            numeric[i] = std::max(0.0, arr - del);
                        }
                        break;
                    }
                    const bool arrivals = def.name == "dest_arrivals";
                    if (ci != idx.center_days.end()) {
                        const auto agg = ci->second.range(
                            from, to, arrivals ? ci->second.arrivals : ci->second.deliveries);
                        if (agg.count > 0) numeric[i] = agg.sum / static_cast<double>(agg.count);
                    } else {
                        const auto& series = arrivals ? idx.center_arrivals_records
                                                      : idx.center_deliveries_records;
                        const auto it = series.find(dest);
                        if (it != series.end()) {
                            const auto agg = it->second.range(from, to);
                            numeric[i] = agg.sum / static_cast<double>(def.window_days);
                        }
                    }
                    break;
                }
                case FeatureFamily::holiday_seasonal: {
                    if (def.name == "ship_weekday") {
                        categorical[i] = std::to_string(row.target->anchor.weekday());
                    } else if (def.name == "dest_holiday_kind") {
                        const auto* entry = inputs.calendar->find(dest, row.landing);
                        categorical[i] = entry ? promise::to_string(entry->kind) : "none";
                    } else if (def.name == "handling_weekend") {
                        numeric[i] = handling_lookup(dest, HolidayKind::weekend);
                    } else if (def.name == "handling_holiday") {
                        const auto* entry = inputs.calendar->find(dest, row.landing);
                        numeric[i] = entry && entry->kind != HolidayKind::weekend
                                         ? handling_lookup(dest, entry->kind)
                                         : 0.0;
                    } else if (def.name == "holiday_adjacent_weekend") {
                        const auto* entry = inputs.calendar->find(dest, row.landing);
                        const bool adjacent =
                            entry && entry->kind != HolidayKind::weekend &&
                            ((row.landing - 1).is_weekend() || (row.landing + 1).is_weekend());
                        numeric[i] = adjacent ? 1.0 : 0.0;
                    } else {
                        throw ConfigError("unknown holiday_seasonal feature: " + def.name);
                    }
                    break;
                }
                case FeatureFamily::plan: {
                    if (!inputs.plans) break;
                    const auto proj = project_with_index(idx, inputs.plans, dest, row.landing,
                                                         row.row_as_of);
                    numeric[i] =
                        def.name == "plan_outflow" ? proj.planned_outflow : proj.projected_arrivals;
                    break;
                }
                case FeatureFamily::pendency: {
                    if (def.name == "pendency_balance") {
                        const auto ci = idx.center_days.find(dest);
                        if (ci != idx.center_days.end()) {
                            const auto in = ci->second.range(from, to, ci->second.arrivals);
                            const auto done = ci->second.range(from, to, ci->second.deliveries);
                            if (in.count > 0 || done.count > 0) numeric[i] = in.sum - done.sum;
                        } else {
                            const auto in = keyed_aggregate(idx.center_arrivals_records, dest,
                                                            from, to, Aggregation::count);
                            const auto done = keyed_aggregate(idx.center_deliveries_records, dest,
                                                              from, to, Aggregation::count);
                            numeric[i] = in - done;
                        }
                    } else if (def.name == "projected_backlog") {
                        const auto proj = project_with_index(
                            idx, inputs.plans ? inputs.plans : nullptr, dest, row.landing,
                            row.row_as_of);
                        numeric[i] = proj.projected_backlog;
                    } else {
                        throw ConfigError("unknown pendency feature: " + def.name);
                    }
                    break;
                }
                case FeatureFamily::vendor: {
                    const auto it = idx.vendors.find(order.source_id);
                    if (it == idx.vendors.end()) break;
                    const auto* v = it->second;
                    if (def.name == "vendor_first_po_hour") {
                        numeric[i] = v->po_hours.empty() ? kMissingValue
                                                         : static_cast<double>(v->po_hours[0]);
                    } else if (def.name == "vendor_first_pickup_hour") {
                        numeric[i] = v->pickup_hours.empty()
                                         ? kMissingValue
                                         : static_cast<double>(v->pickup_hours[0]);
                    } else if (def.name == "vendor_coloader") {
                        numeric[i] = v->coloader ? 1.0 : 0.0;
                    } else if (def.name == "vendor_max_processing") {
                        numeric[i] = v->max_processing_hours;
                    } else {
                        throw ConfigError("unknown vendor feature: " + def.name);
                    }
                    break;
                }
            }
        }
        if (is_categorical) {
            ds.add_categorical(def.name, categorical);
        } else {
            ds.add_numeric(def.name, std::move(numeric));
        }
        ds.rows = n;
    }

    ds.target.resize(n);
    ds.order_date.resize(n);
    bool any_target = false;
    for (std::size_t i = 0; i < n; ++i) {
        ds.target[i] = targets[i].target_hours;
        if (!std::isnan(targets[i].target_hours)) any_target = true;
        ds.order_date[i] = targets[i].order.placed_at.date();
    }
    if (!any_target) ds.target.clear();
    ds.validate();
    return ds;
}

} // namespace

Dataset build_features(const std::vector<TargetOrder>& targets, const FeatureRecipe& recipe,
                       const FeatureInputs& inputs) {
    const FeatureIndex idx = FeatureIndex::build(inputs);
    return build_features_indexed(idx, targets, recipe, inputs);
}

FlowStats flow_stats(const std::vector<DeliveryRecord>& history,
                     std::span<const simnet::CenterDayStats> center_days,
                     const std::string& lane_key, const std::string& center, Date as_of,
                     int window_days) {
    FlowStats out;
    const std::int64_t from = as_of.days - window_days;
    {
        std::vector<double> lh;
        for (const auto& r : history) {
            if (r.delivered_at.date() >= as_of) continue;
            if (r.delivered_at.date().days < from) continue;
            if (r.order.lane.key() != lane_key) continue;
            const auto it = r.leg_durations.find(kLegLinehaul);
            if (it != r.leg_durations.end()) lh.push_back(it->second);
        }
        if (lh.size() >= 2) {
            double sum = 0.0, sumsq = 0.0;
            for (const double v : lh) {
                sum += v;
                sumsq += v * v;
            }
            const double mean = sum / static_cast<double>(lh.size());
            out.linehaul_sd =
                std::sqrt(std::max(0.0, sumsq / static_cast<double>(lh.size()) - mean * mean));
        }
    }
    std::vector<double> inflow, outflow;
    for (const auto& s : center_days) {
        if (s.center != center || s.date >= as_of || s.date.days < from) continue;
        const double cap = std::max(1.0, s.capacity);
        inflow.push_back(s.arrivals / cap);
        outflow.push_back(s.deliveries / cap);
    }
    auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
        if (v.empty()) return;
        double sum = 0.0, sumsq = 0.0;
        for (const double x : v) {
            sum += x;
            sumsq += x * x;
        }
        mean = sum / static_cast<double>(v.size());
        sd = v.size() > 1
                 ? std::sqrt(std::max(0.0, sumsq / static_cast<double>(v.size()) - mean * mean))
                 : 0.0;
    };
    mean_sd(inflow, out.inflow_mean, out.inflow_sd);
    mean_sd(outflow, out.outflow_mean, out.outflow_sd);
    return out;
}

Dataset build_training_dataset(Leg leg, const std::vector<DeliveryRecord>& all_history,
                               const FeatureRecipe& recipe, const FeatureInputs& inputs,
                               Date train_from, Date train_to,
                               std::optional<SourceKind> source_filter) {
    std::vector<TargetOrder> targets;
    for (const auto& r : all_history) {
        const Date placed = r.order.placed_at.date();
        if (placed < train_from || placed >= train_to) continue;
        if (source_filter && r.order.source_kind != *source_filter) continue;
        TargetOrder t;
        t.order = r.order;
        if (leg == Leg::shipping) {
            t.anchor = r.shipped_at;
            t.target_hours = hours_between(r.shipped_at, r.delivered_at);
        } else {
            t.anchor = r.order.placed_at;
            t.target_hours = hours_between(r.order.placed_at, r.shipped_at);
        }
        targets.push_back(std::move(t));
    }
    if (targets.empty()) throw InputError("build_training_dataset: no rows in window");
    return build_features(targets, recipe, inputs);
}

std::vector<stsf::SeriesObservation> extract_leg_series(
    const std::vector<DeliveryRecord>& history, Leg leg,
    std::optional<SourceKind> source_filter) {
    std::map<std::int64_t, std::pair<double, int>> by_hour;
    for (const auto& r : history) {
        if (source_filter && r.order.source_kind != *source_filter) continue;
        const Timestamp at = leg == Leg::shipping ? r.shipped_at : r.order.placed_at;
        const double y = leg == Leg::shipping ? hours_between(r.shipped_at, r.delivered_at)
                                              : hours_between(r.order.placed_at, r.shipped_at);
        const std::int64_t hour = at.minutes / 60;
        auto& slot = by_hour[hour];
        slot.first += y;
        slot.second += 1;
    }
    std::vector<stsf::SeriesObservation> out;
    out.reserve(by_hour.size());
    for (const auto& [hour, acc] : by_hour) {
        out.push_back({Timestamp{hour * 60}, acc.first / acc.second});
    }
    return out;
}

// --- persistence ---

void save_leg_model(const LegModel& model, const std::string& path) {
    json j;
    j["format"] = "promise-leg";
    j["version"] = {{"major", 1}, {"minor", 0}};
    j["tag"] = model.tag;
    switch (model.kind) {
        case LegModelKind::rule:
            j["kind"] = "rule";
            j["rules"] = json::parse(model.rules.to_json_string());
            break;
        case LegModelKind::gbdt:
            j["kind"] = "gbdt";
            j["model"] = json::parse(model.booster.to_json_string());
            break;
        case LegModelKind::stsf:
            j["kind"] = "stsf";
            j["level"] = model.stsf_level;
            j["model"] = json::parse(model.seasonal.to_json_string());
            break;
    }
    atomic_write_file(path, j.dump(2) + "\n");
}

LegModel load_leg_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open leg model file: " + path);
    json j = json::parse(in);
    if (j.value("format", "") != "promise-leg") throw InputError("not a leg model file: " + path);
    LegModel m;
    m.tag = j.value("tag", "");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "rule") {
        m.kind = LegModelKind::rule;
        m.rules = baseline::RuleConfig::from_json_string(j.at("rules").dump());
    } else if (kind == "gbdt") {
        m.kind = LegModelKind::gbdt;
        m.booster = gbdt::BoostedModel::from_json_string(j.at("model").dump());
    } else if (kind == "stsf") {
        m.kind = LegModelKind::stsf;
        m.stsf_level = j.value("level", 0.95);
        m.seasonal = stsf::SeasonalModel::from_json_string(j.at("model").dump());
    } else {
        throw InputError("unknown leg model kind: " + kind);
    }
    return m;
}

void EngineContext::save(const std::string& path) const {
    json j;
    j["format"] = "promise-context";
    j["version"] = {{"major", 1}, {"minor", 0}};
    j["as_of"] = as_of.to_string();
    j["deliveries_csv"] = deliveries_csv;
    j["centers_csv"] = centers_csv;
    j["plans_csv"] = plans_csv;
    j["calendar_csv"] = calendar_csv;
    j["scenario_json"] = scenario_json;
    j["recipe"] = json::parse(recipe.to_json_string());
    j["stsf_level"] = stsf_level;
    j["cutoffs"] = cutoffs;
    atomic_write_file(path, j.dump(2) + "\n");
}

EngineContext EngineContext::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open context file: " + path);
    json j = json::parse(in);
    if (j.value("format", "") != "promise-context") {
        throw InputError("not an engine context file: " + path);
    }
    EngineContext c;
    c.as_of = Date::parse(j.at("as_of").get<std::string>());
    c.deliveries_csv = j.value("deliveries_csv", "");
    c.centers_csv = j.value("centers_csv", "");
    c.plans_csv = j.value("plans_csv", "");
    c.calendar_csv = j.value("calendar_csv", "");
    c.scenario_json = j.value("scenario_json", "");
    c.recipe = FeatureRecipe::from_json_string(j.at("recipe").dump());
    c.stsf_level = j.value("stsf_level", 0.95);
    c.cutoffs = j.value("cutoffs", std::map<std::string, std::vector<int>>{});
    return c;
}

QuoteEngine load_engine(const std::string& models_dir) {
    namespace fs = std::filesystem;
    const auto path = [&](const char* name) { return (fs::path(models_dir) / name).string(); };

    QuoteEngine engine;
    const auto context = EngineContext::load(path("context.json"));
    engine.as_of = context.as_of;
    engine.recipe = context.recipe;
    engine.cutoffs = context.cutoffs;

    if (context.deliveries_csv.empty()) throw ConfigError("context has no deliveries reference");
    for (auto& r : load_records_csv(context.deliveries_csv)) {
        if (r.delivered_at.date() < context.as_of) engine.history.push_back(std::move(r));
    }
    if (!context.calendar_csv.empty()) {
        engine.calendar = HolidayCalendar::load_csv(context.calendar_csv);
    }
    if (!context.centers_csv.empty()) {
        for (auto& s : simnet::load_center_days_csv(context.centers_csv)) {
            if (s.date < context.as_of) engine.center_days.push_back(std::move(s));
        }
    }
    if (!context.plans_csv.empty() && fs::exists(context.plans_csv)) {
        engine.plans = simnet::PlanTables::load_csv(context.plans_csv);
    }
    if (!context.scenario_json.empty() && fs::exists(context.scenario_json)) {
        engine.vendors = simnet::load_scenario(context.scenario_json).spec.vendors;
    }
    engine.handling = calendar::derive_table(engine.calendar, engine.history, engine.as_of);

    if (fs::exists(path("preship_warehouse.json"))) {
        engine.preship_warehouse = load_leg_model(path("preship_warehouse.json"));
    }
    if (fs::exists(path("preship_vendor.json"))) {
        engine.preship_vendor = load_leg_model(path("preship_vendor.json"));
    }
    if (fs::exists(path("shipping.json"))) {
        engine.shipping = load_leg_model(path("shipping.json"));
    }
    if (fs::exists(path("breach.json"))) {
        engine.corrector = breach::Corrector::load(path("breach.json"));
    }
    engine.prepare();
    return engine;
}

// --- quoting ---

std::string PromiseQuote::to_json_string() const {
    json j;
    j["order_id"] = order_id;
    j["leg_predictions"] = leg_predictions;
    j["promise_at"] = promise_at.to_string();
    j["model_tags"] = model_tags;
    return j.dump();
}

PromiseQuote PromiseQuote::from_json_string(const std::string& text) {
    json j = json::parse(text);
    PromiseQuote q;
    q.order_id = j.at("order_id").get<std::string>();
    q.leg_predictions = j.at("leg_predictions").get<std::map<std::string, double>>();
    q.promise_at = Timestamp::parse(j.at("promise_at").get<std::string>());
    q.model_tags = j.at("model_tags").get<std::map<std::string, std::string>>();
    return q;
}

FeatureInputs QuoteEngine::inputs() const {
    FeatureInputs in;
    in.history = &history;
    in.calendar = &calendar;
    in.handling = &handling;
    in.plans = plans ? &*plans : nullptr;
    in.center_days = center_days.empty() ? nullptr : &center_days;
    in.vendors = vendors.empty() ? nullptr : &vendors;
    in.as_of = as_of;
    return in;
}

namespace {

double eval_leg(const LegModel& model, const Order& order, Timestamp anchor, Leg leg,
                const FeatureRecipe& recipe, const FeatureInputs& inputs,
                const HolidayCalendar& calendar, const FeatureIndex* index) {
    switch (model.kind) {
        case LegModelKind::rule: {
            if (leg == Leg::preship) return baseline::rule_preship_hours(order, model.rules);
            // Shipping under rules: configured hop and last-mile times plus
            // pads for padded days crossed after the anchor.
            double hours = 0.0;
            for (const auto& [from, to] : order.lane.edges()) {
                const auto it = model.rules.hop_hours.find(baseline::RuleConfig::hop_key(from, to));
                if (it == model.rules.hop_hours.end()) {
                    throw ConfigError("missing configuration hop_times[" +
                                      baseline::RuleConfig::hop_key(from, to) + "]");
                }
                hours += it->second;
            }
            hours += model.rules.lastmile_hours;
            const Date landing = add_hours(anchor, hours).date();
            for (Date d = anchor.date() + 1; d < landing; d = d + 1) {
                if (d.is_weekend()) hours += model.rules.weekend_pad_hours;
                const auto* entry = calendar.find(order.lane.destination, d);
                if (entry && entry->kind != HolidayKind::weekend) {
                    hours += model.rules.holiday_pad_hours;
                }
            }
            return hours;
        }
        case LegModelKind::gbdt: {
            TargetOrder t;
            t.order = order;
            t.anchor = anchor;
            const Dataset row = index ? build_features_indexed(*index, {t}, recipe, inputs)
                                      : build_features({t}, recipe, inputs);
            return gbdt::predict(model.booster, row)[0];
        }
        case LegModelKind::stsf:
            return model.seasonal.forecast(anchor, model.stsf_level).upper;
    }
    return 0.0;
}

} // namespace

breach::FeedbackExample QuoteEngine::feedback_features(const Order& order, Timestamp ship_at,
                                                       double base_shipping_hours) const {
    breach::FeedbackExample fe;
    fe.base_prediction = base_shipping_hours;
    const Timestamp eta = add_hours(ship_at, base_shipping_hours);
    fe.delivery_date = eta.date();
    fe.weekday = eta.weekday();
    const auto stats = flow_stats(history, center_days, order.lane.key(),
                                  order.lane.destination, as_of);
    fe.linehaul_sd = stats.linehaul_sd;
    fe.inflow_mean = stats.inflow_mean;
    fe.inflow_sd = stats.inflow_sd;
    fe.outflow_mean = stats.outflow_mean;
    fe.outflow_sd = stats.outflow_sd;
    const auto weekend_it =
        handling.find({order.lane.destination, static_cast<int>(HolidayKind::weekend)});
    if (weekend_it != handling.end()) fe.handling_weekend = weekend_it->second.extra_hours;
    const auto* entry = calendar.find(order.lane.destination, eta.date());
    if (entry && entry->kind != HolidayKind::weekend) {
        const auto it = handling.find({order.lane.destination, static_cast<int>(entry->kind)});
        if (it != handling.end()) fe.handling_holiday = it->second.extra_hours;
    }
    return fe;
}

void QuoteEngine::prepare() {
    prepared_ = std::make_shared<const FeatureIndex>(FeatureIndex::build(inputs()));
}

PromiseQuote QuoteEngine::quote(const Order& order) const {
    order.validate();
    const bool vendor_sourced = order.source_kind == SourceKind::vendor;
    const auto& preship_model = vendor_sourced ? preship_vendor : preship_warehouse;
    if (!preship_model) {
        throw ConfigError(std::string("no trained model for the ") +
                          (vendor_sourced ? "vendor" : "warehouse") + " leg");
    }
    if (!shipping) throw ConfigError("no trained model for the shipping leg");

    const auto in = inputs();
    const auto* index = static_cast<const FeatureIndex*>(prepared_.get());
    PromiseQuote quote;
    quote.order_id = order.order_id;

    double preship_hours =
        eval_leg(*preship_model, order, order.placed_at, Leg::preship, recipe, in, calendar, index);
    preship_hours = std::max(0.0, preship_hours);

    const Timestamp ready = add_hours(order.placed_at, preship_hours);
    Timestamp ship_at = ready;
    const auto cut_it = cutoffs.find(order.lane.origin);
    if (cut_it != cutoffs.end()) ship_at = baseline::roll_to_cutoff(ready, cut_it->second);

    double shipping_hours =
        eval_leg(*shipping, order, ship_at, Leg::shipping, recipe, in, calendar, index);
    shipping_hours = std::max(0.0, shipping_hours);

    if (corrector) {
        const auto fe = feedback_features(order, ship_at, shipping_hours);
        shipping_hours = breach::correct(*corrector, shipping_hours, fe);
        quote.model_tags["breach"] = "corrector";
    }

    quote.leg_predictions[vendor_sourced ? kQuoteLegVendor : kQuoteLegWarehouse] = preship_hours;
    quote.leg_predictions[kQuoteLegShipping] = shipping_hours;
    quote.model_tags[vendor_sourced ? kQuoteLegVendor : kQuoteLegWarehouse] = preship_model->tag;
    quote.model_tags[kQuoteLegShipping] = shipping->tag;
    quote.promise_at = add_hours(ship_at, shipping_hours);
    return quote;
}

} // namespace promise::pipeline
