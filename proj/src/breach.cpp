#include "promise/breach.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

namespace promise::breach {

using json = nlohmann::ordered_json;

void BreachTargetWeights::validate() const {
    if (w_linehaul_sd < 0.0 || w_flow_mean < 0.0 || w_flow_sd < 0.0) {
        throw InputError("breach target weights must be >= 0");
    }
}

std::vector<double> construct_targets(const std::vector<FeedbackExample>& examples,
                                      const BreachTargetWeights& weights) {
    weights.validate();
    std::vector<double> targets;
    targets.reserve(examples.size());
    for (const auto& e : examples) {
        if (!std::isfinite(e.linehaul_sd) || !std::isfinite(e.flow_mean()) ||
            !std::isfinite(e.flow_sd())) {
            throw InputError("feedback example carries non-finite statistics");
        }
        const double t = weights.w_linehaul_sd * e.linehaul_sd +
                         weights.w_flow_mean * e.flow_mean() + weights.w_flow_sd * e.flow_sd();
        targets.push_back(std::max(0.0, t));
    }
    return targets;
}

std::vector<BreachTargetWeights> default_weight_grid() {
    const double levels[] = {0.0, 0.25, 0.5, 1.0, 2.0};
    std::vector<BreachTargetWeights> grid;
    grid.reserve(125);
    for (const double a : levels) {
        for (const double b : levels) {
            for (const double c : levels) grid.push_back({a, b, c});
        }
    }
    return grid;
}

std::vector<std::pair<Date, double>> breach_by_date(const std::vector<FeedbackExample>& history,
                                                    const std::vector<double>& added_hours) {
    if (history.size() != added_hours.size()) throw InputError("breach_by_date size mismatch");
    std::map<std::int64_t, std::pair<int, int>> by_date; // day -> (breaches, total)
    for (std::size_t i = 0; i < history.size(); ++i) {
        auto& slot = by_date[history[i].delivery_date.days];
        if (history[i].actual > history[i].base_prediction + added_hours[i]) ++slot.first;
        ++slot.second;
    }
    std::vector<std::pair<Date, double>> out;
    out.reserve(by_date.size());
    for (const auto& [day, counts] : by_date) {
        out.emplace_back(Date{day}, static_cast<double>(counts.first) / counts.second);
    }
    return out;
}

BreachTargetWeights tune_weights(const std::vector<FeedbackExample>& history,
                                 double breach_cutoff,
                                 const std::vector<BreachTargetWeights>& grid) {
    if (history.empty()) throw InputError("tune_weights: empty history");
    if (grid.empty()) throw InputError("tune_weights: empty grid");
    {
        std::map<std::int64_t, bool> dates;
        for (const auto& e : history) dates[e.delivery_date.days] = true;
        if (dates.size() < 7) {
            throw InputError("tune_weights: history must span at least 7 delivery dates");
        }
    }

    bool have_feasible = false;
    BreachTargetWeights best_feasible{};
    double best_mean_added = std::numeric_limits<double>::infinity();
    BreachTargetWeights best_fallback{};
    double best_worst_breach = std::numeric_limits<double>::infinity();

    for (const auto& candidate : grid) {
        const auto targets = construct_targets(history, candidate);
        const auto daily = breach_by_date(history, targets);
        double worst = 0.0;
        for (const auto& [date, rate] : daily) worst = std::max(worst, rate);

        if (worst <= breach_cutoff) {
            double mean_added = 0.0;
            for (const double t : targets) mean_added += t;
            mean_added /= static_cast<double>(targets.size());
            if (!have_feasible || mean_added < best_mean_added) {
                have_feasible = true;
                best_mean_added = mean_added;
                best_feasible = candidate;
            }
        }
        if (worst < best_worst_breach) {
            best_worst_breach = worst;
            best_fallback = candidate;
        }
    }
    return have_feasible ? best_feasible : best_fallback;
}

Dataset feedback_dataset(const std::vector<FeedbackExample>& examples) {
    Dataset ds;
    ds.rows = examples.size();
    auto col = [&](auto getter) {
        std::vector<double> v;
        v.reserve(examples.size());
        for (const auto& e : examples) v.push_back(getter(e));
        return v;
    };
    ds.add_numeric("base_prediction", col([](const auto& e) { return e.base_prediction; }));
    ds.add_numeric("handling_weekend", col([](const auto& e) { return e.handling_weekend; }));
    ds.add_numeric("handling_holiday", col([](const auto& e) { return e.handling_holiday; }));
    ds.add_numeric("linehaul_sd", col([](const auto& e) { return e.linehaul_sd; }));
    ds.add_numeric("inflow_mean", col([](const auto& e) { return e.inflow_mean; }));
    ds.add_numeric("inflow_sd", col([](const auto& e) { return e.inflow_sd; }));
    ds.add_numeric("outflow_mean", col([](const auto& e) { return e.outflow_mean; }));
    ds.add_numeric("outflow_sd", col([](const auto& e) { return e.outflow_sd; }));
    std::vector<std::string> weekdays;
    weekdays.reserve(examples.size());
    for (const auto& e : examples) weekdays.push_back(std::to_string(e.weekday));
    ds.add_categorical("weekday", weekdays);
    ds.rows = examples.size();
    return ds;
}

gbdt::BoosterParams default_corrector_params() {
    gbdt::BoosterParams p;
    p.boosting_iterations = 120;
    p.learning_rate = 0.1;
    p.num_leaves = 15;
    p.data_fraction = 1.0;
    p.feature_fraction = 1.0;
    p.min_data_in_leaf = 10;
    p.loss = losses::LossSpec::mse();
    p.seed = 17;
    return p;
}

Corrector train_corrector(const std::vector<FeedbackExample>& examples,
                          const BreachTargetWeights& weights, gbdt::BoosterParams params) {
    if (examples.empty()) throw InputError("train_corrector: no examples");
    Corrector c;
    c.weights = weights;
    Dataset ds = feedback_dataset(examples);
    ds.target = construct_targets(examples, weights);
    c.model = gbdt::train(ds, params);
    return c;
}

double correct(const Corrector& corrector, double base_prediction,
               const FeedbackExample& features) {
    const std::unordered_map<std::string, double> numerics = {
        {"base_prediction", features.base_prediction},
        {"handling_weekend", features.handling_weekend},
        {"handling_holiday", features.handling_holiday},
        {"linehaul_sd", features.linehaul_sd},
        {"inflow_mean", features.inflow_mean},
        {"inflow_sd", features.inflow_sd},
        {"outflow_mean", features.outflow_mean},
        {"outflow_sd", features.outflow_sd},
    };
    const std::unordered_map<std::string, std::string> categoricals = {
        {"weekday", std::to_string(features.weekday)},
    };
    const double added = gbdt::predict_row(corrector.model, numerics, categoricals);
    return base_prediction + std::max(0.0, added);
}

void Corrector::save(const std::string& path) const {
    json j;
    j["format"] = "promise-breach";
    j["version"] = {{"major", 1}, {"minor", 0}};
    j["weights"] = {{"w_linehaul_sd", weights.w_linehaul_sd},
                    {"w_flow_mean", weights.w_flow_mean},
                    {"w_flow_sd", weights.w_flow_sd}};
    j["model"] = json::parse(model.to_json_string());
    atomic_write_file(path, j.dump(2) + "\n");
}

Corrector Corrector::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open breach corrector file: " + path);
    json j = json::parse(in);
    if (j.value("format", "") != "promise-breach") throw InputError("not a breach corrector file");
    Corrector c;
    c.weights = {j.at("weights").at("w_linehaul_sd").get<double>(),
                 j.at("weights").at("w_flow_mean").get<double>(),
                 j.at("weights").at("w_flow_sd").get<double>()};
    c.model = gbdt::BoostedModel::from_json_string(j.at("model").dump());
    return c;
}

} // namespace promise::breach
