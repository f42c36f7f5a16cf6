#include "promise/stsf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "promise/losses.hpp"

namespace promise::stsf {

using json = nlohmann::ordered_json;

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kObjectiveTolerance = 1e-8;
constexpr int kMaxSweeps = 50000;

double hours_since(Timestamp origin, Timestamp t) {
    return static_cast<double>(t.minutes - origin.minutes) / 60.0;
}

bool within_window(const std::vector<std::int64_t>& dates, std::int64_t day, int window) {
    const auto it = std::lower_bound(dates.begin(), dates.end(), day - window);
    return it != dates.end() && *it <= day + window;
}

} // namespace

double SeasonalModel::trend_at(Timestamp ts) const {
    const double t = hours_since(origin, ts);
    double g = offset + base_slope * t;
    for (std::size_t j = 0; j < changepoints.size(); ++j) {
        const double over = t - changepoints[j];
        if (over > 0.0) g += slope_adjustments[j] * over;
    }
    return g;
}

double SeasonalModel::seasonal_at(Timestamp ts) const {
    const double t = hours_since(origin, ts);
    double s = 0.0;
    for (const auto& block : seasonalities) {
        for (int n = 1; n <= block.fourier_order; ++n) {
            const double angle = kTwoPi * n * t / block.period_hours;
            s += block.cos_coef[static_cast<std::size_t>(n - 1)] * std::cos(angle) +
                 block.sin_coef[static_cast<std::size_t>(n - 1)] * std::sin(angle);
        }
    }
    return s;
}

double SeasonalModel::holiday_at(Timestamp ts) const {
    const auto day = ts.date().days;
    double h = 0.0;
    for (const auto& effect : holiday_effects) {
        if (within_window(effect.dates, day, effect.window_days)) h += effect.effect;
    }
    return h;
}

Forecast SeasonalModel::forecast(Timestamp ts, double level) const {
    const auto it = std::find_if(
        residual_quantiles.begin(), residual_quantiles.end(),
        [&](const auto& q) { return std::fabs(q.first - level) < 1e-9; });
    if (it == residual_quantiles.end()) {
        throw InputError("forecast level " + format_double(level) + " was not fitted");
    }
    const double raw = trend_at(ts) + seasonal_at(ts) + holiday_at(ts);
    Forecast f;
    f.point = std::clamp(raw, floor, cap);
    f.upper = std::clamp(f.point + it->second, floor, cap);
    return f;
}

SeasonalModel fit(const std::vector<SeriesObservation>& series, const StsfConfig& config) {
    if (config.cap < config.floor) throw InputError("cap < floor");
    if (series.size() < 3) throw InputError("insufficient data: need at least 3 observations");
    for (std::size_t i = 1; i < series.size(); ++i) {
        if (!(series[i].t > series[i - 1].t)) {
            throw InputError("series timestamps must be strictly increasing");
        }
    }
    const Timestamp origin = series.front().t;
    const double span = hours_since(origin, series.back().t);
    for (const auto& s : config.seasonalities) {
        if (span < 2.0 * s.period_hours) {
            throw InputError("insufficient data: seasonality " + s.name + " needs " +
                             format_double(2.0 * s.period_hours) + "h of history");
        }
    }

    const std::size_t n = series.size();
    std::vector<double> t_rel(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        t_rel[i] = hours_since(origin, series[i].t);
        y[i] = series[i].y;
    }

    SeasonalModel model;
    model.origin = origin;
    model.floor = config.floor;
    model.cap = config.cap;

    for (int j = 1; j <= config.n_changepoints; ++j) {
        const double cp = 0.8 * span * static_cast<double>(j) / (config.n_changepoints);
        if (cp > 0.0 && cp < span) model.changepoints.push_back(cp);
    }
    model.slope_adjustments.assign(model.changepoints.size(), 0.0);

    // Holiday regressors: one shared effect per (kind, region); weekend
    // entries are left to the weekly seasonality.
    if (config.calendar) {
        std::set<std::pair<int, std::string>> keys;
        for (const auto& region : config.regions) {
            for (const auto& entry : config.calendar->region_entries(region)) {
                if (entry.kind == HolidayKind::weekend) continue;
                keys.insert({static_cast<int>(entry.kind), region});
            }
        }
        for (const auto& [kind_int, region] : keys) {
            SeasonalModel::FittedHoliday h;
            h.kind = static_cast<HolidayKind>(kind_int);
            h.region = region;
            h.window_days = config.holiday_window_days;
            for (const auto& entry : config.calendar->region_entries(region)) {
                if (entry.kind == h.kind) h.dates.push_back(entry.date.days);
            }
            std::sort(h.dates.begin(), h.dates.end());
            model.holiday_effects.push_back(std::move(h));
        }
    }

    // Design matrix: intercept, slope, changepoint hinges (L1-penalized),
    // Fourier pairs, holiday indicators.
    struct Column {
        std::vector<double> x;
        bool penalized = false;
        double* coef = nullptr;
    };
    std::vector<Column> columns;

    std::vector<double> intercept_col(n, 1.0);
    model.offset = 0.0;
    columns.push_back({intercept_col, false, &model.offset});
    columns.push_back({t_rel, false, &model.base_slope});
    for (std::size_t j = 0; j < model.changepoints.size(); ++j) {
        Column c;
        c.x.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            c.x[i] = std::max(0.0, t_rel[i] - model.changepoints[j]);
        }
        c.penalized = true;
        c.coef = &model.slope_adjustments[j];
        columns.push_back(std::move(c));
    }
    for (const auto& sc : config.seasonalities) {
        SeasonalModel::FittedSeasonality block;
        block.name = sc.name;
        block.period_hours = sc.period_hours;
        block.fourier_order = sc.fourier_order;
        block.cos_coef.assign(static_cast<std::size_t>(sc.fourier_order), 0.0);
        block.sin_coef.assign(static_cast<std::size_t>(sc.fourier_order), 0.0);
        model.seasonalities.push_back(std::move(block));
    }
    for (std::size_t b = 0; b < model.seasonalities.size(); ++b) {
        auto& block = model.seasonalities[b];
        for (int k = 1; k <= block.fourier_order; ++k) {
            Column ccos, csin;
            ccos.x.resize(n);
            csin.x.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double angle = kTwoPi * k * t_rel[i] / block.period_hours;
                ccos.x[i] = std::cos(angle);
                csin.x[i] = std::sin(angle);
            }
            ccos.coef = &block.cos_coef[static_cast<std::size_t>(k - 1)];
            csin.coef = &block.sin_coef[static_cast<std::size_t>(k - 1)];
            columns.push_back(std::move(ccos));
            columns.push_back(std::move(csin));
        }
    }
    for (auto& effect : model.holiday_effects) {
        Column c;
        c.x.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            c.x[i] = within_window(effect.dates, series[i].t.date().days, effect.window_days)
                         ? 1.0
                         : 0.0;
        }
        c.coef = &effect.effect;
        columns.push_back(std::move(c));
    }

    const double l1 = config.changepoint_prior_scale > 0.0
                          ? 1.0 / config.changepoint_prior_scale
                          : std::numeric_limits<double>::infinity();

    // Standardize columns for conditioning. This is an exact
    // reparametrization: centering shifts into the unpenalized intercept and
    // scaling a penalized column by s rescales its shrinkage by 1/s, so the
    // minimized objective is unchanged.
    const std::size_t n_cols = columns.size();
    std::vector<double> mean(n_cols, 0.0), scale(n_cols, 1.0), beta(n_cols, 0.0),
        shrink(n_cols, 0.0), ssq(n_cols, 0.0);
    for (std::size_t c = 1; c < n_cols; ++c) {
        auto& col = columns[c];
        double m = 0.0;
        for (const double v : col.x) m += v;
        m /= static_cast<double>(n);
        double var = 0.0;
        for (auto& v : col.x) {
            v -= m;
            var += v * v;
        }
        mean[c] = m;
        scale[c] = var > 0.0 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
        if (scale[c] > 0.0) {
            for (auto& v : col.x) v /= scale[c];
        }
        if (col.penalized) {
            shrink[c] = std::isinf(l1) ? std::numeric_limits<double>::infinity()
                                       : l1 / (2.0 * (scale[c] > 0.0 ? scale[c] : 1.0));
        }
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
        for (const double v : columns[c].x) ssq[c] += v * v;
    }

    // Gram-matrix form of the coordinate updates: rho and the objective are
    // O(n_cols) per step instead of O(n).
    std::vector<double> gram(n_cols * n_cols, 0.0), xy(n_cols, 0.0), cross(n_cols, 0.0);
    for (std::size_t c = 0; c < n_cols; ++c) {
        for (std::size_t d = c; d < n_cols; ++d) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += columns[c].x[i] * columns[d].x[i];
            gram[c * n_cols + d] = acc;
            gram[d * n_cols + c] = acc;
        }
        for (std::size_t i = 0; i < n; ++i) xy[c] += columns[c].x[i] * y[i];
    }
    double yy = 0.0;
    for (const double v : y) yy += v * v;

    auto objective = [&]() {
        double obj = yy;
        for (std::size_t c = 0; c < n_cols; ++c) {
            obj += beta[c] * (cross[c] - 2.0 * xy[c]);
            if (!std::isinf(l1) && columns[c].penalized && scale[c] > 0.0) {
                obj += l1 * std::fabs(beta[c] / scale[c]);
            }
        }
        return obj;
    };

    double prev_obj = objective();
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        for (std::size_t c = 0; c < n_cols; ++c) {
            if (ssq[c] <= 0.0) continue;
            const double old = beta[c];
            const double rho = xy[c] - cross[c] + old * ssq[c];
            double next;
            if (columns[c].penalized) {
                if (std::isinf(shrink[c])) {
                    next = 0.0;
                } else if (rho > shrink[c]) {
                    next = (rho - shrink[c]) / ssq[c];
                } else if (rho < -shrink[c]) {
                    next = (rho + shrink[c]) / ssq[c];
                } else {
                    next = 0.0;
                }
            } else {
                next = rho / ssq[c];
            }
            if (next != old) {
                const double diff = next - old;
                const double* grow = &gram[c * n_cols];
                for (std::size_t d = 0; d < n_cols; ++d) cross[d] += diff * grow[d];
                beta[c] = next;
            }
        }
        const double obj = objective();
        if (std::fabs(prev_obj - obj) <= kObjectiveTolerance * std::max(1.0, std::fabs(prev_obj))) {
            break;
        }
        prev_obj = obj;
    }

    std::vector<double> residual = y;
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (beta[c] == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) residual[i] -= beta[c] * columns[c].x[i];
    }

    // Back-transform to the original column units.
    double intercept = beta[0];
    for (std::size_t c = 1; c < n_cols; ++c) {
        const double coef = scale[c] > 0.0 ? beta[c] / scale[c] : 0.0;
        *columns[c].coef = coef;
        intercept -= coef * mean[c];
    }
    *columns[0].coef = intercept;

    for (const double level : config.quantile_levels) {
        model.residual_quantiles.emplace_back(
            level, losses::weighted_quantile(residual, {}, level));
    }
    std::sort(model.residual_quantiles.begin(), model.residual_quantiles.end());
    return model;
}

std::vector<SeriesObservation> series_from_dataset(const Dataset& data,
                                                   const std::string& time_column) {
    const int c = data.numeric_index(time_column);
    if (c < 0) throw InputError("series time column not found: " + time_column);
    if (data.target.size() != data.rows) throw InputError("series dataset needs a target");
    std::vector<SeriesObservation> out;
    out.reserve(data.rows);
    for (std::size_t i = 0; i < data.rows; ++i) {
        const double minutes = data.numeric[static_cast<std::size_t>(c)][i];
        if (std::isnan(minutes) || std::isnan(data.target[i])) continue;
        out.push_back({Timestamp{static_cast<std::int64_t>(std::llround(minutes))},
                       data.target[i]});
    }
    std::sort(out.begin(), out.end(),
              [](const SeriesObservation& a, const SeriesObservation& b) { return a.t < b.t; });
    return out;
}

// --- serialization ---

namespace {
constexpr int kFormatMajor = 1;
}

std::string SeasonalModel::to_json_string() const {
    json j;
    j["format"] = "promise-stsf";
    j["version"] = {{"major", kFormatMajor}, {"minor", 0}};
    j["origin_minutes"] = origin.minutes;
    j["base_slope"] = base_slope;
    j["offset"] = offset;
    j["changepoints"] = changepoints;
    j["slope_adjustments"] = slope_adjustments;
    j["seasonalities"] = json::array();
    for (const auto& s : seasonalities) {
        j["seasonalities"].push_back({{"name", s.name},
                                      {"period_hours", s.period_hours},
                                      {"fourier_order", s.fourier_order},
                                      {"cos", s.cos_coef},
                                      {"sin", s.sin_coef}});
    }
    j["holiday_effects"] = json::array();
    for (const auto& h : holiday_effects) {
        j["holiday_effects"].push_back({{"kind", to_string(h.kind)},
                                        {"region", h.region},
                                        {"effect", h.effect},
                                        {"window_days", h.window_days},
                                        {"dates", h.dates}});
    }
    j["residual_quantiles"] = json::array();
    for (const auto& [level, offset_v] : residual_quantiles) {
        j["residual_quantiles"].push_back({{"level", level}, {"offset", offset_v}});
    }
    j["floor"] = std::isinf(floor) ? json(nullptr) : json(floor);
    j["cap"] = std::isinf(cap) ? json(nullptr) : json(cap);
    return j.dump(2) + "\n";
}

SeasonalModel SeasonalModel::from_json_string(const std::string& text) {
    json j = json::parse(text);
    if (j.value("format", "") != "promise-stsf") throw InputError("not a stsf model file");
    const int major = j.at("version").at("major").get<int>();
    if (major > kFormatMajor) {
        throw InputError("stsf model format version " + std::to_string(major) +
                         " is newer than supported " + std::to_string(kFormatMajor));
    }
    SeasonalModel m;
    m.origin = Timestamp{j.at("origin_minutes").get<std::int64_t>()};
    m.base_slope = j.at("base_slope").get<double>();
    m.offset = j.at("offset").get<double>();
    m.changepoints = j.at("changepoints").get<std::vector<double>>();
    m.slope_adjustments = j.at("slope_adjustments").get<std::vector<double>>();
    for (const auto& s : j.at("seasonalities")) {
        FittedSeasonality block;
        block.name = s.at("name").get<std::string>();
        block.period_hours = s.at("period_hours").get<double>();
        block.fourier_order = s.at("fourier_order").get<int>();
        block.cos_coef = s.at("cos").get<std::vector<double>>();
        block.sin_coef = s.at("sin").get<std::vector<double>>();
        m.seasonalities.push_back(std::move(block));
    }
    for (const auto& h : j.at("holiday_effects")) {
        FittedHoliday effect;
        effect.kind = holiday_kind_from_string(h.at("kind").get<std::string>());
        effect.region = h.at("region").get<std::string>();
        effect.effect = h.at("effect").get<double>();
        effect.window_days = h.at("window_days").get<int>();
        effect.dates = h.at("dates").get<std::vector<std::int64_t>>();
        m.holiday_effects.push_back(std::move(effect));
    }
    for (const auto& q : j.at("residual_quantiles")) {
        m.residual_quantiles.emplace_back(q.at("level").get<double>(),
                                          q.at("offset").get<double>());
    }
    m.floor = j.at("floor").is_null() ? -std::numeric_limits<double>::infinity()
                                      : j.at("floor").get<double>();
    m.cap = j.at("cap").is_null() ? std::numeric_limits<double>::infinity()
                                  : j.at("cap").get<double>();
    return m;
}

void SeasonalModel::save(const std::string& path) const {
    atomic_write_file(path, to_json_string());
}

SeasonalModel SeasonalModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

} // namespace promise::stsf
