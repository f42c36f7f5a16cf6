#pragma once

#include <functional>
#include <string>
#include <vector>

#include "promise/domain.hpp"

namespace promise::evalkit {

struct OutcomePair {
    Date order_date;
    Date promised_date;
    Date delivered_date;
};

struct DayMetrics {
    Date order_date;
    double accuracy = 0.0;
    double breach = 0.0;
    int n = 0;
};

struct MetricsReport {
    std::vector<DayMetrics> days; // sorted by order date
    double accuracy = 0.0;        // unweighted mean over order dates
    double breach = 0.0;
};

/**
 * Order-day metrics: accuracy counts deliveries landing on the promised
 * date or up to early_window days before it; breach counts deliveries
 * after the promised date. The period value is the unweighted mean of the
 * per-order-date values. early_window is 1 for Accuracy(0 to -1) and 2
 * for the HRD Accuracy(0 to -2).
 */
MetricsReport metrics(const std::vector<OutcomePair>& pairs, int early_window);

using PromiseFn = std::function<Timestamp(const Order&)>;

std::vector<OutcomePair> outcome_pairs(const std::vector<DeliveryRecord>& records,
                                       const PromiseFn& promise);

struct ComparisonRow {
    std::string model;
    double accuracy = 0.0;
    double breach = 0.0;
};

struct ComparisonReport {
    int early_window = 1;
    std::vector<ComparisonRow> rows;

    std::string to_csv() const;
    std::string to_markdown() const;
    std::string to_json_string() const;
};

/**
 * Period metrics per named model over identical outcome sets; models
 * evaluated over different order-date windows are rejected.
 */
ComparisonReport compare(
    const std::vector<std::pair<std::string, std::vector<OutcomePair>>>& per_model,
    int early_window);

} // namespace promise::evalkit
