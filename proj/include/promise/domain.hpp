#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace promise {

/// Rejected caller input (bad values, leaky dates, non-finite numbers).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Missing or inconsistent configuration; the message names the offending key.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr std::int64_t kMinutesPerDay = 1440;

/// Calendar day as days since 1970-01-01.
struct Date {
    std::int64_t days = 0;

    friend auto operator<=>(const Date&, const Date&) = default;
    Date operator+(std::int64_t d) const { return Date{days + d}; }
    Date operator-(std::int64_t d) const { return Date{days - d}; }
    std::int64_t operator-(Date other) const { return days - other.days; }

    /// 0 = Monday ... 6 = Sunday.
    int weekday() const {
        std::int64_t w = (days + 3) % 7;
        return static_cast<int>(w < 0 ? w + 7 : w);
    }
    bool is_weekend() const { return weekday() >= 5; }

    static Date from_civil(int year, unsigned month, unsigned day);
    std::string to_string() const; // YYYY-MM-DD
    static Date parse(const std::string& text);
};

/**
 * Point in time at minute resolution. Durations across the code base are
 * fractional hours; conversions round to the nearest minute.
 */
struct Timestamp {
    std::int64_t minutes = 0;

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

    Date date() const {
        std::int64_t d = minutes >= 0 ? minutes / kMinutesPerDay
                                      : -((-minutes + kMinutesPerDay - 1) / kMinutesPerDay);
        return Date{d};
    }
    /// Minutes past local midnight.
    std::int64_t minute_of_day() const { return minutes - date().days * kMinutesPerDay; }
    int weekday() const { return date().weekday(); }

    static Timestamp from_date(Date d, std::int64_t minute_of_day = 0) {
        return Timestamp{d.days * kMinutesPerDay + minute_of_day};
    }

    std::string to_string() const; // YYYY-MM-DD HH:MM
    static Timestamp parse(const std::string& text);
};

inline double hours_between(Timestamp from, Timestamp to) {
    return static_cast<double>(to.minutes - from.minutes) / 60.0;
}

Timestamp add_hours(Timestamp t, double hours);

enum class Carrier { own_logistics, third_party };

/// Origin-to-destination route through an ordered hub sequence.
struct Lane {
    std::string origin;
    std::string destination;
    std::vector<std::string> hops;
    Carrier carrier = Carrier::own_logistics;

    /// Stable key used for per-lane statistics.
    std::string key() const;
    /// Consecutive (from, to) pairs covering origin -> hops... -> destination.
    std::vector<std::pair<std::string, std::string>> edges() const;
    void validate() const;
};

enum class CityTier { tier1, tier2, tier3 };
enum class AddressType { home, office };

struct GeoKey {
    std::string pincode; // 6 digits
    CityTier tier = CityTier::tier2;
    AddressType address = AddressType::home;

    std::string prefix() const { return pincode.substr(0, 4); }
    void validate() const;
};

enum class SourceKind { warehouse, vendor };

struct Order {
    std::string order_id;
    Timestamp placed_at;
    SourceKind source_kind = SourceKind::warehouse;
    std::string source_id;
    Lane lane;
    GeoKey geo;
    int item_count = 1;

    bool is_multi_item() const { return item_count > 1; }
    void validate() const;
};

/// Leg names used in DeliveryRecord::leg_durations.
inline constexpr const char* kLegPreship = "preship";
inline constexpr const char* kLegLinehaul = "linehaul";
inline constexpr const char* kLegLastmile = "lastmile";

struct DeliveryRecord {
    Order order;
    Timestamp shipped_at;
    Timestamp delivered_at;
    std::map<std::string, double> leg_durations; // hours

    Timestamp arrived_at_center() const; // shipped_at + linehaul leg
    void validate() const;
};

enum class HolidayKind { fixed, flexible, weekend };

std::string to_string(HolidayKind kind);
HolidayKind holiday_kind_from_string(const std::string& text);

struct HolidayEntry {
    std::string region;
    Date date;
    HolidayKind kind = HolidayKind::fixed;
    double absenteeism_rate = 0.0; // [0, 1]
};

/// At most one entry per (region, date).
class HolidayCalendar {
public:
    void add(HolidayEntry entry);
    const HolidayEntry* find(const std::string& region, Date date) const;
    bool empty() const { return entries_.empty(); }

    /// Entries for one region sorted by date.
    std::vector<HolidayEntry> region_entries(const std::string& region) const;
    const std::map<std::pair<std::string, std::int64_t>, HolidayEntry>& all() const {
        return entries_;
    }

    void save_csv(const std::string& path) const;
    static HolidayCalendar load_csv(const std::string& path);

private:
    std::map<std::pair<std::string, std::int64_t>, HolidayEntry> entries_;
};

/// Dictionary encoding for one categorical column. Unseen levels map to kMissing.
class CategoricalDict {
public:
    static constexpr std::int32_t kMissing = -1;

    std::int32_t encode(const std::string& level) const {
        auto it = index_.find(level);
        return it == index_.end() ? kMissing : it->second;
    }
    std::int32_t encode_or_add(const std::string& level);
    const std::string& decode(std::int32_t id) const;
    std::size_t size() const { return levels_.size(); }
    const std::vector<std::string>& levels() const { return levels_; }
    static CategoricalDict from_levels(std::vector<std::string> levels);

private:
    std::vector<std::string> levels_;
    std::unordered_map<std::string, std::int32_t> index_;
};

/// First-appearance dictionary encoding of a raw string column.
std::pair<std::vector<std::int32_t>, CategoricalDict>
encode_categorical(const std::vector<std::string>& raw);

constexpr double kMissingValue = std::numeric_limits<double>::quiet_NaN();

/**
 * Columnar feature matrix. Numeric missing values are NaN; categorical
 * missing is CategoricalDict::kMissing. Missing values are never imputed
 * here; the booster routes them by per-split default direction.
 */
struct Dataset {
    std::size_t rows = 0;
    std::vector<std::string> numeric_names;
    std::vector<std::vector<double>> numeric;
    std::vector<std::string> categorical_names;
    std::vector<std::vector<std::int32_t>> categorical;
    std::vector<CategoricalDict> dicts;
    std::vector<double> target;   // hours; empty when unknown
    std::vector<double> weight;   // empty means unit weights
    std::vector<Date> order_date; // may be empty

    void add_numeric(std::string name, std::vector<double> values);
    void add_categorical(std::string name, const std::vector<std::string>& raw);
    void add_categorical_encoded(std::string name, std::vector<std::int32_t> ids,
                                 CategoricalDict dict);
    int numeric_index(const std::string& name) const;
    int categorical_index(const std::string& name) const;
    double weight_at(std::size_t row) const { return weight.empty() ? 1.0 : weight[row]; }

    void validate() const;

    /// Writes the CSV plus a "<path>.meta.json" sidecar with column roles and dictionaries.
    void save_csv(const std::string& path) const;
    static Dataset load_csv(const std::string& path);
};

/**
 * Returns a copy whose sample weights decay exponentially with row age:
 * weight = 0.5 ^ (age_days / half_life_days). Rows dated after
 * reference_date are rejected.
 */
Dataset decay_weights(const Dataset& rows, Date reference_date, double half_life_days);

// deliveries.csv round trip (simulator output, training input).
void save_records_csv(const std::vector<DeliveryRecord>& records, const std::string& path);
std::vector<DeliveryRecord> load_records_csv(const std::string& path);

std::string order_to_json(const Order& order);
Order order_from_json(const std::string& text);

/// Writes content to a temp file in the target directory, then renames atomically.
void atomic_write_file(const std::string& path, const std::string& content);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

} // namespace promise
