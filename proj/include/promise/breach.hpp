#pragma once

#include <string>
#include <vector>

#include "promise/domain.hpp"
#include "promise/gbdt.hpp"

namespace promise::breach {

/**
 * One recent prediction outcome used to tune and train the corrector.
 * Flow statistics are expressed in days-of-capacity so the weighted
 * target combination stays in hour-comparable units.
 */
struct FeedbackExample {
    double base_prediction = 0.0; // hours
    double actual = 0.0;          // hours
    Date delivery_date;
    // features
    double handling_weekend = 0.0;
    double handling_holiday = 0.0;
    int weekday = 0;              // of the delivery date
    double linehaul_sd = 0.0;     // hours
    double inflow_mean = 0.0;
    double inflow_sd = 0.0;
    double outflow_mean = 0.0;
    double outflow_sd = 0.0;

    double flow_mean() const { return (inflow_mean + outflow_mean) / 2.0; }
    double flow_sd() const { return (inflow_sd + outflow_sd) / 2.0; }
};

struct BreachTargetWeights {
    double w_linehaul_sd = 0.0;
    double w_flow_mean = 0.0;
    double w_flow_sd = 0.0;

    void validate() const;
};

/// target_i = w_lh * sd_lh + w_fm * flow_mean + w_fs * flow_sd, floored at 0.
std::vector<double> construct_targets(const std::vector<FeedbackExample>& examples,
                                      const BreachTargetWeights& weights);

/// Default tuning grid: each weight in {0, 0.25, 0.5, 1, 2}.
std::vector<BreachTargetWeights> default_weight_grid();

/**
 * Over the candidate grid, simulate corrected predictions on history and
 * keep candidates whose breach rate meets the cutoff on every delivery
 * date; of those, pick the one adding the least mean time. When no
 * candidate is feasible, pick the one minimizing the worst-date breach.
 * Grid order breaks ties.
 */
BreachTargetWeights tune_weights(const std::vector<FeedbackExample>& history,
                                 double breach_cutoff,
                                 const std::vector<BreachTargetWeights>& grid);

struct Corrector {
    BreachTargetWeights weights;
    gbdt::BoostedModel model;

    void save(const std::string& path) const;
    static Corrector load(const std::string& path);
};

gbdt::BoosterParams default_corrector_params();

/// Fits an mse booster on the constructed targets over the feedback features.
Corrector train_corrector(const std::vector<FeedbackExample>& examples,
                          const BreachTargetWeights& weights,
                          gbdt::BoosterParams params = default_corrector_params());

/// base + max(0, model output): the correction only delays promises.
double correct(const Corrector& corrector, double base_prediction,
               const FeedbackExample& features);

/// Per-delivery-date breach rates of corrected predictions; returns pairs
/// (delivery date, breach fraction) sorted by date.
std::vector<std::pair<Date, double>> breach_by_date(const std::vector<FeedbackExample>& history,
                                                    const std::vector<double>& added_hours);

Dataset feedback_dataset(const std::vector<FeedbackExample>& examples);

} // namespace promise::breach
