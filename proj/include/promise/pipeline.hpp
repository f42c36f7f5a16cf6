#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "promise/baseline.hpp"
#include "promise/breach.hpp"
#include "promise/calendar.hpp"
#include "promise/domain.hpp"
#include "promise/gbdt.hpp"
#include "promise/simnet.hpp"
#include "promise/stsf.hpp"

namespace promise::pipeline {

enum class FeatureFamily {
    historical_stats,
    geo,
    load,
    manpower,
    lastmile_perf,
    holiday_seasonal,
    plan,
    pendency,
    vendor,
};

enum class Aggregation { mean, sd, median, count };

std::string to_string(FeatureFamily family);
FeatureFamily feature_family_from_string(const std::string& text);
std::string to_string(Aggregation agg);
Aggregation aggregation_from_string(const std::string& text);

/// One derived feature column. The family plus the name select the
/// computation; window and aggregation parameterize it.
struct FeatureDef {
    std::string name;
    FeatureFamily family = FeatureFamily::historical_stats;
    int window_days = 14;
    Aggregation agg = Aggregation::mean;
};

/**
 * Ordered derived-feature definitions plus the geo backoff threshold.
 * Identity columns (lane, destination, carrier, tier, address type,
 * pincode prefix, item count, placement hour) are always emitted.
 */
struct FeatureRecipe {
    std::vector<FeatureDef> features;
    int geo_backoff_min_obs = 30;

    void validate() const;
    FeatureRecipe without_families(const std::set<FeatureFamily>& drop) const;
    std::string to_json_string() const;
    static FeatureRecipe from_json_string(const std::string& text);

    static FeatureRecipe default_shipping();
    static FeatureRecipe default_preship_warehouse();
    static FeatureRecipe default_preship_vendor();
    /// Union of the per-leg defaults; the usual choice for a QuoteEngine.
    static FeatureRecipe default_full();
};

/// A row to featurize: the order, the leg anchor clock (ship time for the
/// shipping leg, placement time for pre-ship legs), and the label when known.
struct TargetOrder {
    Order order;
    Timestamp anchor;
    double target_hours = kMissingValue;
};

/// Immutable inputs to feature building; optional tables may be null.
struct FeatureInputs {
    const std::vector<DeliveryRecord>* history = nullptr; // delivered before as_of
    const HolidayCalendar* calendar = nullptr;
    const std::map<std::pair<std::string, int>, calendar::HandlingTime>* handling = nullptr;
    const simnet::PlanTables* plans = nullptr;
    const std::vector<simnet::CenterDayStats>* center_days = nullptr;
    const std::vector<simnet::VendorSpec>* vendors = nullptr;
    Date as_of;
};

/**
 * One row per target order. Every feature is computed from data strictly
 * before the row's own order date (and never at or after as_of). Geo
 * statistics back off pincode -> prefix -> city tier -> global at the
 * recipe's observation threshold.
 */
Dataset build_features(const std::vector<TargetOrder>& targets, const FeatureRecipe& recipe,
                       const FeatureInputs& inputs);

struct PendencyProjection {
    double projected_arrivals = 0.0;
    double projected_backlog = 0.0;
    double planned_outflow = 0.0;
};

/**
 * Arrivals from the plan where available (allocated by the center's
 * historical share, shifted by its modal transit days), else from
 * trailing-7-day ship volumes; backlog is the running
 * max(0, cumulative arrivals - cumulative outflow) up to the day before
 * landing, seeded with actuals before as_of.
 */
PendencyProjection project_pendency(const simnet::PlanTables* plans,
                                    std::span<const DeliveryRecord> history,
                                    std::span<const simnet::CenterDayStats> center_days,
                                    const std::string& center, Date landing_date, Date as_of);

// --- leg models and quoting ---

enum class LegModelKind { rule, gbdt, stsf };

struct LegModel {
    LegModelKind kind = LegModelKind::rule;
    std::string tag;
    baseline::RuleConfig rules;            // rule
    gbdt::BoostedModel booster;            // gbdt
    stsf::SeasonalModel seasonal;          // stsf
    double stsf_level = 0.95;
};

struct PromiseQuote {
    std::string order_id;
    std::map<std::string, double> leg_predictions; // leg name -> hours
    Timestamp promise_at;
    std::map<std::string, std::string> model_tags;

    std::string to_json_string() const;
    static PromiseQuote from_json_string(const std::string& text);
};

/// Leg names inside PromiseQuote.
inline constexpr const char* kQuoteLegVendor = "vendor";
inline constexpr const char* kQuoteLegWarehouse = "warehouse";
inline constexpr const char* kQuoteLegShipping = "shipping";

/**
 * Immutable serving bundle: leg models, the feature snapshot they quote
 * against, dispatch cutoffs, and an optional breach corrector applied to
 * the shipping leg. Safe for concurrent quoting.
 */
class QuoteEngine {
public:
    FeatureRecipe recipe;
    std::vector<DeliveryRecord> history;
    HolidayCalendar calendar;
    std::map<std::pair<std::string, int>, calendar::HandlingTime> handling;
    std::optional<simnet::PlanTables> plans;
    std::vector<simnet::CenterDayStats> center_days;
    std::vector<simnet::VendorSpec> vendors;
    Date as_of;
    std::map<std::string, std::vector<int>> cutoffs; // dispatch node -> minutes of day

    std::optional<LegModel> preship_warehouse;
    std::optional<LegModel> preship_vendor;
    std::optional<LegModel> shipping;
    std::optional<breach::Corrector> corrector;

    PromiseQuote quote(const Order& order) const;

    /// Precomputes the feature index over the snapshot; quote() falls back
    /// to an on-the-fly build when not called. Prepared engines are
    /// immutable and safe to share across threads.
    void prepare();

    FeatureInputs inputs() const;
    /// Feedback features for the breach corrector at quote time.
    breach::FeedbackExample feedback_features(const Order& order, Timestamp ship_at,
                                              double base_shipping_hours) const;

private:
    std::shared_ptr<const void> prepared_; // opaque feature index
};

/// Windowed linehaul sd and capacity-normalized flow statistics for one
/// destination center, computed from data strictly before as_of.
struct FlowStats {
    double linehaul_sd = 0.0;
    double inflow_mean = 0.0;
    double inflow_sd = 0.0;
    double outflow_mean = 0.0;
    double outflow_sd = 0.0;
};
FlowStats flow_stats(const std::vector<DeliveryRecord>& history,
                     std::span<const simnet::CenterDayStats> center_days,
                     const std::string& lane_key, const std::string& center, Date as_of,
                     int window_days = 14);

void save_leg_model(const LegModel& model, const std::string& path);
LegModel load_leg_model(const std::string& path);

/**
 * Serving context persisted next to the models: data file references, the
 * recipe, cutoffs and the as_of date. load_engine reads it, loads data and
 * models, and returns a ready QuoteEngine.
 */
struct EngineContext {
    Date as_of;
    std::string deliveries_csv;
    std::string centers_csv;   // optional, empty when absent
    std::string plans_csv;     // optional
    std::string calendar_csv;  // optional
    std::string scenario_json; // optional, supplies vendor metadata
    FeatureRecipe recipe;
    double stsf_level = 0.95;
    std::map<std::string, std::vector<int>> cutoffs;

    void save(const std::string& path) const;
    static EngineContext load(const std::string& path);
};

QuoteEngine load_engine(const std::string& models_dir);

/// Builds the supervised dataset for one leg from delivery history.
enum class Leg { preship, shipping };
Dataset build_training_dataset(Leg leg, const std::vector<DeliveryRecord>& all_history,
                               const FeatureRecipe& recipe, const FeatureInputs& inputs,
                               Date train_from, Date train_to,
                               std::optional<SourceKind> source_filter = std::nullopt);

/// Hourly-mean series of a leg duration, for the stsf models.
std::vector<stsf::SeriesObservation> extract_leg_series(
    const std::vector<DeliveryRecord>& history, Leg leg,
    std::optional<SourceKind> source_filter = std::nullopt);

} // namespace promise::pipeline
