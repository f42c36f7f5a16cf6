#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "promise/domain.hpp"

namespace promise::stsf {

struct SeriesObservation {
    Timestamp t;
    double y = 0.0; // hours
};

struct SeasonalityConfig {
    std::string name;
    double period_hours = 168.0;
    int fourier_order = 3;
};

inline std::vector<SeasonalityConfig> default_seasonalities() {
    return {{"weekly", 168.0, 3}, {"daily", 24.0, 4}};
}

struct StsfConfig {
    int n_changepoints = 20;
    double changepoint_prior_scale = 0.05;
    std::vector<SeasonalityConfig> seasonalities = default_seasonalities();
    const HolidayCalendar* calendar = nullptr; // fixed/flexible entries become regressors
    std::vector<std::string> regions;
    int holiday_window_days = 1;
    double floor = -std::numeric_limits<double>::infinity();
    double cap = std::numeric_limits<double>::infinity();
    std::vector<double> quantile_levels = {0.5, 0.8, 0.95};
};

struct Forecast {
    double point = 0.0;
    double upper = 0.0;
};

/**
 * Additive model y(t) = g(t) + s(t) + h(t) + residual, with a continuous
 * piecewise-linear trend (L1-penalized slope changes), Fourier
 * seasonalities, shared per-(kind, region) holiday effects, and empirical
 * residual quantiles for the prediction interval.
 */
class SeasonalModel {
public:
    struct FittedSeasonality {
        std::string name;
        double period_hours = 0.0;
        int fourier_order = 0;
        std::vector<double> cos_coef;
        std::vector<double> sin_coef;
    };

    struct FittedHoliday {
        HolidayKind kind = HolidayKind::fixed;
        std::string region;
        double effect = 0.0;                // hours
        int window_days = 1;
        std::vector<std::int64_t> dates;    // sorted day indices from the calendar
    };

    Timestamp origin;                  // t = hours since origin
    double base_slope = 0.0;           // k
    double offset = 0.0;               // m
    std::vector<double> changepoints;  // hours since origin, strictly inside the span
    std::vector<double> slope_adjustments;
    std::vector<FittedSeasonality> seasonalities;
    std::vector<FittedHoliday> holiday_effects;
    std::vector<std::pair<double, double>> residual_quantiles; // (level, offset), level-sorted
    double floor = -std::numeric_limits<double>::infinity();
    double cap = std::numeric_limits<double>::infinity();

    double trend_at(Timestamp t) const;
    double seasonal_at(Timestamp t) const;
    double holiday_at(Timestamp t) const;

    Forecast forecast(Timestamp t, double level) const;

    std::string to_json_string() const;
    static SeasonalModel from_json_string(const std::string& text);
    void save(const std::string& path) const;
    static SeasonalModel load(const std::string& path);
};

/**
 * Penalized least squares fit: squared residuals plus
 * (1 / changepoint_prior_scale) * sum |slope adjustment|, solved by
 * coordinate descent to a relative objective change below 1e-8.
 * Changepoints are placed uniformly over the first 80% of the span.
 */
SeasonalModel fit(const std::vector<SeriesObservation>& series, const StsfConfig& config);

/// Series from a Dataset with a designated time column (minutes since epoch).
std::vector<SeriesObservation> series_from_dataset(const Dataset& data,
                                                   const std::string& time_column);

} // namespace promise::stsf
