#include "promise/evalkit.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

namespace promise::evalkit {

using json = nlohmann::ordered_json;

MetricsReport metrics(const std::vector<OutcomePair>& pairs, int early_window) {
    if (pairs.empty()) throw InputError("metrics: no outcome pairs");
    if (early_window < 0) throw InputError("metrics: early_window must be >= 0");
    std::map<std::int64_t, DayMetrics> by_day;
    std::map<std::int64_t, int> hits, breaches, totals;
    for (const auto& p : pairs) {
        if (p.delivered_date < p.order_date) {
            throw InputError("metrics: delivered before ordering");
        }
        const auto day = p.order_date.days;
        const auto early = p.promised_date - p.delivered_date; // >= 0 means on time
        if (early >= 0 && early <= early_window) ++hits[day];
        if (p.delivered_date > p.promised_date) ++breaches[day];
        ++totals[day];
    }
    MetricsReport report;
    for (const auto& [day, total] : totals) {
        DayMetrics d;
        d.order_date = Date{day};
        d.n = total;
        d.accuracy = static_cast<double>(hits[day]) / total;
        d.breach = static_cast<double>(breaches[day]) / total;
        report.days.push_back(d);
        report.accuracy += d.accuracy;
        report.breach += d.breach;
    }
    report.accuracy /= static_cast<double>(report.days.size());
    report.breach /= static_cast<double>(report.days.size());
    return report;
}

std::vector<OutcomePair> outcome_pairs(const std::vector<DeliveryRecord>& records,
                                       const PromiseFn& promise) {
    std::vector<OutcomePair> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        OutcomePair p;
        p.order_date = r.order.placed_at.date();
        p.promised_date = promise(r.order).date();
        p.delivered_date = r.delivered_at.date();
        out.push_back(p);
    }
    return out;
}

ComparisonReport compare(
    const std::vector<std::pair<std::string, std::vector<OutcomePair>>>& per_model,
    int early_window) {
    if (per_model.empty()) throw InputError("compare: no models");
    std::set<std::int64_t> reference_dates;
    ComparisonReport report;
    report.early_window = early_window;
    for (std::size_t m = 0; m < per_model.size(); ++m) {
        const auto& [name, pairs] = per_model[m];
        std::set<std::int64_t> dates;
        for (const auto& p : pairs) dates.insert(p.order_date.days);
        if (m == 0) {
            reference_dates = dates;
        } else if (dates != reference_dates) {
            throw InputError("compare: model " + name +
                             " evaluated over a mismatched order-date window");
        }
        const auto m_report = metrics(pairs, early_window);
        report.rows.push_back({name, m_report.accuracy, m_report.breach});
    }
    return report;
}

std::string ComparisonReport::to_csv() const {
    std::string out = "model,accuracy,breach\n";
    for (const auto& r : rows) {
        out += r.model;
        out += ',';
        out += format_double(r.accuracy);
        out += ',';
        out += format_double(r.breach);
        out += '\n';
    }
    return out;
}

std::string ComparisonReport::to_markdown() const {
    std::string out = "| Model | Accuracy(0 to -" + std::to_string(early_window) +
                      ") | Breach |\n|---|---|---|\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "| %s | %.2f%% | %.2f%% |\n", r.model.c_str(),
                      100.0 * r.accuracy, 100.0 * r.breach);
        out += buf;
    }
    return out;
}

std::string ComparisonReport::to_json_string() const {
    json j;
    j["early_window"] = early_window;
    j["models"] = json::array();
    for (const auto& r : rows) {
        j["models"].push_back(
            {{"model", r.model}, {"accuracy", r.accuracy}, {"breach", r.breach}});
    }
    return j.dump(2) + "\n";
}

} // namespace promise::evalkit
