#include "promise/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace promise {

namespace {

using json = nlohmann::ordered_json;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

} // namespace

// Civil-date conversion after Howard Hinnant's algorithms.
Date Date::from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = floor_div(y, 400);
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return Date{era * 146097 + static_cast<std::int64_t>(doe) - 719468};
}

std::string Date::to_string() const {
    std::int64_t z = days + 719468;
    const std::int64_t era = floor_div(z, 146097);
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u",
                  static_cast<long long>(y + (m <= 2)), m, d);
    return buf;
}

Date Date::parse(const std::string& text) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(text.c_str(), "%d-%u-%u", &y, &m, &d) != 3 || m < 1 || m > 12 || d < 1 ||
        d > 31) {
        throw InputError("bad date: " + text);
    }
    return from_civil(y, m, d);
}

std::string Timestamp::to_string() const {
    const std::int64_t mod = minute_of_day();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s %02lld:%02lld", date().to_string().c_str(),
                  static_cast<long long>(mod / 60), static_cast<long long>(mod % 60));
    return buf;
}

Timestamp Timestamp::parse(const std::string& text) {
    const auto space = text.find(' ');
    if (space == std::string::npos) throw InputError("bad timestamp: " + text);
    Date d = Date::parse(text.substr(0, space));
    int hh = 0, mm = 0;
    if (std::sscanf(text.c_str() + space + 1, "%d:%d", &hh, &mm) != 2 || hh < 0 || hh > 23 ||
        mm < 0 || mm > 59) {
        throw InputError("bad timestamp: " + text);
    }
    return Timestamp::from_date(d, hh * 60 + mm);
}

Timestamp add_hours(Timestamp t, double hours) {
    return Timestamp{t.minutes + static_cast<std::int64_t>(std::llround(hours * 60.0))};
}

std::string Lane::key() const {
    std::string k = origin;
    for (const auto& h : hops) {
        k += '>';
        k += h;
    }
    k += '>';
    k += destination;
    return k;
}

std::vector<std::pair<std::string, std::string>> Lane::edges() const {
    std::vector<std::pair<std::string, std::string>> out;
    std::string prev = origin;
    for (const auto& h : hops) {
        out.emplace_back(prev, h);
        prev = h;
    }
    out.emplace_back(prev, destination);
    return out;
}

void Lane::validate() const {
    if (hops.empty()) throw InputError("lane " + key() + ": hop sequence empty");
    std::set<std::string> seen{origin, destination};
    for (const auto& h : hops) {
        if (!seen.insert(h).second) throw InputError("lane " + key() + ": repeated node " + h);
    }
}

void GeoKey::validate() const {
    if (pincode.size() != 6 ||
        !std::all_of(pincode.begin(), pincode.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw InputError("bad pincode: " + pincode);
    }
}

void Order::validate() const {
    if (item_count < 1) throw InputError("order " + order_id + ": item_count < 1");
    lane.validate();
    geo.validate();
}

Timestamp DeliveryRecord::arrived_at_center() const {
    auto it = leg_durations.find(kLegLinehaul);
    const double linehaul = it == leg_durations.end() ? 0.0 : it->second;
    return add_hours(shipped_at, linehaul);
}

void DeliveryRecord::validate() const {
    order.validate();
    if (order.placed_at > shipped_at || shipped_at > delivered_at) {
        throw InputError("record " + order.order_id + ": timestamps out of order");
    }
    double total = 0.0;
    for (const auto& [name, hours] : leg_durations) {
        if (hours < 0.0) throw InputError("record " + order.order_id + ": negative leg " + name);
        total += hours;
    }
    const double span = hours_between(order.placed_at, delivered_at);
    if (std::fabs(total - span) > 1.0 / 60.0 + 1e-9) {
        throw InputError("record " + order.order_id + ": leg sum " + format_double(total) +
                         " != span " + format_double(span));
    }
}

std::string to_string(HolidayKind kind) {
    switch (kind) {
        case HolidayKind::fixed: return "fixed";
        case HolidayKind::flexible: return "flexible";
        case HolidayKind::weekend: return "weekend";
    }
    return "fixed";
}

HolidayKind holiday_kind_from_string(const std::string& text) {
    if (text == "fixed") return HolidayKind::fixed;
    if (text == "flexible") return HolidayKind::flexible;
    if (text == "weekend") return HolidayKind::weekend;
    throw InputError("unknown holiday kind: " + text);
}

void HolidayCalendar::add(HolidayEntry entry) {
    if (entry.absenteeism_rate < 0.0 || entry.absenteeism_rate > 1.0) {
        throw InputError("absenteeism rate out of [0,1] for region " + entry.region);
    }
    entries_[{entry.region, entry.date.days}] = std::move(entry);
}

const HolidayEntry* HolidayCalendar::find(const std::string& region, Date date) const {
    auto it = entries_.find({region, date.days});
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<HolidayEntry> HolidayCalendar::region_entries(const std::string& region) const {
    std::vector<HolidayEntry> out;
    for (auto it = entries_.lower_bound({region, std::numeric_limits<std::int64_t>::min()});
         it != entries_.end() && it->first.first == region; ++it) {
        out.push_back(it->second);
    }
    return out;
}

void HolidayCalendar::save_csv(const std::string& path) const {
    std::string out = "region,date,kind,absenteeism_rate\n";
    for (const auto& [key, e] : entries_) {
        out += e.region;
        out += ',';
        out += e.date.to_string();
        out += ',';
        out += to_string(e.kind);
        out += ',';
        out += format_double(e.absenteeism_rate);
        out += '\n';
    }
    atomic_write_file(path, out);
}

HolidayCalendar HolidayCalendar::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open calendar file: " + path);
    HolidayCalendar cal;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string region, date, kind, rate;
        std::getline(ss, region, ',');
        std::getline(ss, date, ',');
        std::getline(ss, kind, ',');
        std::getline(ss, rate, ',');
        cal.add({region, Date::parse(date), holiday_kind_from_string(kind), std::stod(rate)});
    }
    return cal;
}

std::int32_t CategoricalDict::encode_or_add(const std::string& level) {
    auto it = index_.find(level);
    if (it != index_.end()) return it->second;
    const auto id = static_cast<std::int32_t>(levels_.size());
    levels_.push_back(level);
    index_.emplace(level, id);
    return id;
}

const std::string& CategoricalDict::decode(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= levels_.size()) {
        throw InputError("categorical id out of range: " + std::to_string(id));
    }
    return levels_[static_cast<std::size_t>(id)];
}

CategoricalDict CategoricalDict::from_levels(std::vector<std::string> levels) {
    CategoricalDict d;
    for (auto& l : levels) d.encode_or_add(l);
    return d;
}

std::pair<std::vector<std::int32_t>, CategoricalDict>
encode_categorical(const std::vector<std::string>& raw) {
    CategoricalDict dict;
    std::vector<std::int32_t> ids;
    ids.reserve(raw.size());
    for (const auto& level : raw) ids.push_back(dict.encode_or_add(level));
    return {std::move(ids), std::move(dict)};
}

void Dataset::add_numeric(std::string name, std::vector<double> values) {
    if (rows == 0 && numeric.empty() && categorical.empty()) rows = values.size();
    numeric_names.push_back(std::move(name));
    numeric.push_back(std::move(values));
}

void Dataset::add_categorical(std::string name, const std::vector<std::string>& raw) {
    auto [ids, dict] = encode_categorical(raw);
    add_categorical_encoded(std::move(name), std::move(ids), std::move(dict));
}

void Dataset::add_categorical_encoded(std::string name, std::vector<std::int32_t> ids,
                                      CategoricalDict dict) {
    if (rows == 0 && numeric.empty() && categorical.empty()) rows = ids.size();
    categorical_names.push_back(std::move(name));
    categorical.push_back(std::move(ids));
    dicts.push_back(std::move(dict));
}

int Dataset::numeric_index(const std::string& name) const {
    auto it = std::find(numeric_names.begin(), numeric_names.end(), name);
    return it == numeric_names.end() ? -1 : static_cast<int>(it - numeric_names.begin());
}

int Dataset::categorical_index(const std::string& name) const {
    auto it = std::find(categorical_names.begin(), categorical_names.end(), name);
    return it == categorical_names.end() ? -1 : static_cast<int>(it - categorical_names.begin());
}

void Dataset::validate() const {
    for (const auto& col : numeric) {
        if (col.size() != rows) throw InputError("numeric column length mismatch");
    }
    for (std::size_t c = 0; c < categorical.size(); ++c) {
        if (categorical[c].size() != rows) throw InputError("categorical column length mismatch");
        const auto card = static_cast<std::int32_t>(dicts[c].size());
        for (auto id : categorical[c]) {
            if (id != CategoricalDict::kMissing && (id < 0 || id >= card)) {
                throw InputError("categorical id outside dictionary in column " +
                                 categorical_names[c]);
            }
        }
    }
    if (!target.empty() && target.size() != rows) throw InputError("target length mismatch");
    if (!weight.empty()) {
        if (weight.size() != rows) throw InputError("weight length mismatch");
        for (double w : weight) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("weights must be finite and >= 0");
        }
    }
    if (!order_date.empty() && order_date.size() != rows) {
        throw InputError("order_date length mismatch");
    }
}

Dataset decay_weights(const Dataset& rows, Date reference_date, double half_life_days) {
    if (!(half_life_days > 0.0)) throw InputError("half_life_days must be > 0");
    if (rows.order_date.size() != rows.rows) throw InputError("decay_weights needs row dates");
    Dataset out = rows;
    out.weight.assign(rows.rows, 1.0);
    for (std::size_t i = 0; i < rows.rows; ++i) {
        const auto age = reference_date - rows.order_date[i];
        if (age < 0) {
            throw InputError("row " + std::to_string(i) + " dated after reference date");
        }
        out.weight[i] = std::exp2(-static_cast<double>(age) / half_life_days);
    }
    return out;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write file: " + path);
        out << content;
        if (!out.good()) throw ConfigError("write failed: " + path);
    }
    fs::rename(tmp, target);
}

namespace {

double parse_double_or_nan(const std::string& s) {
    if (s.empty()) return kMissingValue;
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc()) throw InputError("bad numeric value: " + s);
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

void Dataset::save_csv(const std::string& path) const {
    validate();
    json meta;
    meta["version"] = 1;
    meta["columns"] = json::array();
    std::string csv;
    std::vector<std::string> header;

    auto add_col = [&](const std::string& name, const std::string& role) {
        header.push_back(name);
        json col;
        col["name"] = name;
        col["role"] = role;
        meta["columns"].push_back(col);
    };

    if (!order_date.empty()) add_col("order_date", "order_date");
    if (!target.empty()) add_col("target", "target");
    if (!weight.empty()) add_col("weight", "weight");
    for (const auto& n : numeric_names) add_col(n, "numeric");
    for (std::size_t c = 0; c < categorical_names.size(); ++c) {
        add_col(categorical_names[c], "categorical");
        meta["columns"].back()["levels"] = dicts[c].levels();
    }

    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) csv += ',';
        csv += header[i];
    }
    csv += '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        std::string line;
        bool first = true;
        auto append = [&line, &first](const std::string& s) {
            if (!first) line += ',';
            first = false;
            line += s;
        };
        if (!order_date.empty()) append(order_date[r].to_string());
        if (!target.empty()) append(format_double(target[r]));
        if (!weight.empty()) append(format_double(weight[r]));
        for (const auto& col : numeric) append(format_double(col[r]));
        for (std::size_t c = 0; c < categorical.size(); ++c) {
            const auto id = categorical[c][r];
            append(id == CategoricalDict::kMissing ? "" : dicts[c].decode(id));
        }
        csv += line;
        csv += '\n';
    }
    atomic_write_file(path, csv);
    atomic_write_file(path + ".meta.json", meta.dump(2) + "\n");
}

Dataset Dataset::load_csv(const std::string& path) {
    std::ifstream meta_in(path + ".meta.json");
    if (!meta_in) throw ConfigError("missing dataset sidecar: " + path + ".meta.json");
    json meta = json::parse(meta_in);
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset: " + path);

    std::string line;
    std::getline(in, line);
    const auto header = split_csv_line(line);
    if (header.size() != meta["columns"].size()) {
        throw InputError("dataset header does not match sidecar: " + path);
    }

    struct ColSpec {
        std::string role;
        CategoricalDict dict;
    };
    std::vector<ColSpec> specs;
    for (const auto& col : meta["columns"]) {
        ColSpec s;
        s.role = col["role"].get<std::string>();
        if (s.role == "categorical") {
            s.dict = CategoricalDict::from_levels(col["levels"].get<std::vector<std::string>>());
        }
        specs.push_back(std::move(s));
    }

    Dataset ds;
    std::vector<std::vector<std::string>> raw(header.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) throw InputError("ragged CSV row in " + path);
        for (std::size_t c = 0; c < cells.size(); ++c) raw[c].push_back(std::move(cells[c]));
    }
    const std::size_t n = raw.empty() ? 0 : raw[0].size();
    ds.rows = n;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& role = specs[c].role;
        if (role == "order_date") {
            ds.order_date.reserve(n);
            for (const auto& s : raw[c]) ds.order_date.push_back(Date::parse(s));
        } else if (role == "target") {
            for (const auto& s : raw[c]) ds.target.push_back(parse_double_or_nan(s));
        } else if (role == "weight") {
            for (const auto& s : raw[c]) ds.weight.push_back(parse_double_or_nan(s));
        } else if (role == "numeric") {
            std::vector<double> col;
            col.reserve(n);
            for (const auto& s : raw[c]) col.push_back(parse_double_or_nan(s));
            ds.add_numeric(header[c], std::move(col));
            ds.rows = n;
        } else if (role == "categorical") {
            std::vector<std::int32_t> ids;
            ids.reserve(n);
            for (const auto& s : raw[c]) {
                ids.push_back(s.empty() ? CategoricalDict::kMissing : specs[c].dict.encode(s));
            }
            ds.add_categorical_encoded(header[c], std::move(ids), specs[c].dict);
            ds.rows = n;
        } else {
            throw ConfigError("unknown column role in sidecar: " + role);
        }
    }
    ds.rows = n;
    ds.validate();
    return ds;
}

namespace {

std::string carrier_to_string(Carrier c) {
    return c == Carrier::own_logistics ? "own" : "3pl";
}

Carrier carrier_from_string(const std::string& s) {
    if (s == "own") return Carrier::own_logistics;
    if (s == "3pl") return Carrier::third_party;
    throw InputError("unknown carrier: " + s);
}

std::string tier_to_string(CityTier t) {
    switch (t) {
        case CityTier::tier1: return "tier1";
        case CityTier::tier2: return "tier2";
        case CityTier::tier3: return "tier3";
    }
    return "tier2";
}

CityTier tier_from_string(const std::string& s) {
    if (s == "tier1") return CityTier::tier1;
    if (s == "tier2") return CityTier::tier2;
    if (s == "tier3") return CityTier::tier3;
    throw InputError("unknown city tier: " + s);
}

std::string join_hops(const std::vector<std::string>& hops) {
    std::string out;
    for (std::size_t i = 0; i < hops.size(); ++i) {
        if (i) out += '|';
        out += hops[i];
    }
    return out;
}

std::vector<std::string> split_hops(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == '|') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

} // namespace

std::string order_to_json(const Order& order) {
    json j;
    j["order_id"] = order.order_id;
    j["placed_at"] = order.placed_at.to_string();
    j["source_kind"] = order.source_kind == SourceKind::warehouse ? "warehouse" : "vendor";
    j["source_id"] = order.source_id;
    j["lane"] = {{"origin", order.lane.origin},
                 {"hops", order.lane.hops},
                 {"destination", order.lane.destination},
                 {"carrier", carrier_to_string(order.lane.carrier)}};
    j["pincode"] = order.geo.pincode;
    j["tier"] = tier_to_string(order.geo.tier);
    j["address"] = order.geo.address == AddressType::home ? "home" : "office";
    j["item_count"] = order.item_count;
    return j.dump();
}

Order order_from_json(const std::string& text) {
    json j = json::parse(text);
    Order o;
    o.order_id = j.at("order_id").get<std::string>();
    o.placed_at = Timestamp::parse(j.at("placed_at").get<std::string>());
    o.source_kind = j.at("source_kind").get<std::string>() == "vendor" ? SourceKind::vendor
                                                                       : SourceKind::warehouse;
    o.source_id = j.at("source_id").get<std::string>();
    o.lane.origin = j.at("lane").at("origin").get<std::string>();
    o.lane.hops = j.at("lane").at("hops").get<std::vector<std::string>>();
    o.lane.destination = j.at("lane").at("destination").get<std::string>();
    o.lane.carrier = carrier_from_string(j.at("lane").at("carrier").get<std::string>());
    o.geo.pincode = j.at("pincode").get<std::string>();
    o.geo.tier = tier_from_string(j.at("tier").get<std::string>());
    o.geo.address = j.at("address").get<std::string>() == "office" ? AddressType::office
                                                                   : AddressType::home;
    o.item_count = j.value("item_count", 1);
    o.validate();
    return o;
}

void save_records_csv(const std::vector<DeliveryRecord>& records, const std::string& path) {
    std::string out =
        "order_id,placed_at,shipped_at,delivered_at,source_kind,source_id,origin,hops,"
        "destination,carrier,pincode,tier,address,items,preship_h,linehaul_h,lastmile_h\n";
    for (const auto& r : records) {
        const auto& o = r.order;
        auto leg = [&r](const char* name) {
            auto it = r.leg_durations.find(name);
            return it == r.leg_durations.end() ? 0.0 : it->second;
        };
        out += o.order_id;
        out += ',';
        out += o.placed_at.to_string();
        out += ',';
        out += r.shipped_at.to_string();
        out += ',';
        out += r.delivered_at.to_string();
        out += ',';
        out += o.source_kind == SourceKind::warehouse ? "warehouse" : "vendor";
        out += ',';
        out += o.source_id;
        out += ',';
        out += o.lane.origin;
        out += ',';
        out += join_hops(o.lane.hops);
        out += ',';
        out += o.lane.destination;
        out += ',';
        out += carrier_to_string(o.lane.carrier);
        out += ',';
        out += o.geo.pincode;
        out += ',';
        out += tier_to_string(o.geo.tier);
        out += ',';
        out += o.geo.address == AddressType::home ? "home" : "office";
        out += ',';
        out += std::to_string(o.item_count);
        out += ',';
        out += format_double(leg(kLegPreship));
        out += ',';
        out += format_double(leg(kLegLinehaul));
        out += ',';
        out += format_double(leg(kLegLastmile));
        out += '\n';
    }
    atomic_write_file(path, out);
}

std::vector<DeliveryRecord> load_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open deliveries file: " + path);
    std::vector<DeliveryRecord> records;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto c = split_csv_line(line);
        if (c.size() != 17) throw InputError("ragged deliveries row in " + path);
        DeliveryRecord r;
        r.order.order_id = c[0];
        r.order.placed_at = Timestamp::parse(c[1]);
        r.shipped_at = Timestamp::parse(c[2]);
        r.delivered_at = Timestamp::parse(c[3]);
        r.order.source_kind = c[4] == "warehouse" ? SourceKind::warehouse : SourceKind::vendor;
        r.order.source_id = c[5];
        r.order.lane.origin = c[6];
        r.order.lane.hops = split_hops(c[7]);
        r.order.lane.destination = c[8];
        r.order.lane.carrier = carrier_from_string(c[9]);
        r.order.geo.pincode = c[10];
        r.order.geo.tier = tier_from_string(c[11]);
        r.order.geo.address = c[12] == "home" ? AddressType::home : AddressType::office;
        r.order.item_count = std::stoi(c[13]);
        r.leg_durations[kLegPreship] = parse_double_or_nan(c[14]);
        r.leg_durations[kLegLinehaul] = parse_double_or_nan(c[15]);
        r.leg_durations[kLegLastmile] = parse_double_or_nan(c[16]);
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace promise
