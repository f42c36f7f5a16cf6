#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "promise/breach.hpp"
#include "promise/rng.hpp"

using namespace promise;
namespace br = promise::breach;

namespace {

br::FeedbackExample example(double base, double actual, Date date, double sd_lh = 0.0,
                            double inflow = 0.0, double outflow = 0.0, double in_sd = 0.0,
                            double out_sd = 0.0) {
    br::FeedbackExample e;
    e.base_prediction = base;
    e.actual = actual;
    e.delivery_date = date;
    e.weekday = date.weekday();
    e.linehaul_sd = sd_lh;
    e.inflow_mean = inflow;
    e.outflow_mean = outflow;
    e.inflow_sd = in_sd;
    e.outflow_sd = out_sd;
    return e;
}

} // namespace

TEST_CASE("construct_targets composes the weighted statistics") {
    const Date d = Date::parse("2024-02-01");
    std::vector<br::FeedbackExample> ex;
    ex.push_back(example(10, 11, d, 2.0, 0.0, 0.0));
    ex.push_back(example(10, 11, d, 0.0, 0.0, 0.0));
    // stats (sd_lh, flow_mean, flow_sd) = (2, 4, 2)
    ex.push_back(example(10, 11, d, 2.0, 4.0, 4.0, 2.0, 2.0));

    const auto only_lh = br::construct_targets(ex, {1.0, 0.0, 0.0});
    CHECK(only_lh[0] == doctest::Approx(2.0));
    CHECK(only_lh[1] == doctest::Approx(0.0));

    const auto mixed = br::construct_targets(ex, {1.0, 0.5, 0.5});
    CHECK(mixed[2] == doctest::Approx(5.0));
}

TEST_CASE("breach-free history tunes to the all-zero grid point") {
    std::vector<br::FeedbackExample> history;
    const Date start = Date::parse("2024-02-01");
    for (int d = 0; d < 8; ++d) {
        for (int i = 0; i < 5; ++i) {
            history.push_back(example(30.0, 25.0, start + d, 1.0, 1.0, 1.0));
        }
    }
    const auto w = br::tune_weights(history, 0.05, br::default_weight_grid());
    CHECK(w.w_linehaul_sd == 0.0);
    CHECK(w.w_flow_mean == 0.0);
    CHECK(w.w_flow_sd == 0.0);
}

TEST_CASE("tuning selects the linehaul-sd candidate that removes all breaches") {
    // 20 examples over 10 dates; two per date, one breaches by just under
    // its linehaul sd, the other is safe. Adding 1.0 * sd_lh fixes every
    // breach; flow stats are zero so flow weights cannot help.
    std::vector<br::FeedbackExample> history;
    const Date start = Date::parse("2024-03-01");
    for (int d = 0; d < 10; ++d) {
        history.push_back(example(24.0, 24.0 + 1.8, start + d, 2.0));
        history.push_back(example(24.0, 20.0, start + d, 2.0));
    }
    const auto w = br::tune_weights(history, 0.0, br::default_weight_grid());
    CHECK(w.w_linehaul_sd == doctest::Approx(1.0));
    CHECK(w.w_flow_mean == 0.0);
    CHECK(w.w_flow_sd == 0.0);
}

TEST_CASE("infeasible cutoff falls back to the worst-date minimizer") {
    // One date breaches no matter what (zero statistics, actual >> base).
    std::vector<br::FeedbackExample> history;
    const Date start = Date::parse("2024-03-01");
    for (int d = 0; d < 7; ++d) {
        history.push_back(example(10.0, 50.0, start + d, 0.0));
        history.push_back(example(10.0, 9.0, start + d, 0.0));
    }
    const auto grid = br::default_weight_grid();
    const auto w = br::tune_weights(history, 0.0, grid);
    // All candidates give identical breach (stats are zero); grid order
    // keeps the first.
    CHECK(w.w_linehaul_sd == grid.front().w_linehaul_sd);
    CHECK(w.w_flow_mean == grid.front().w_flow_mean);
    CHECK(w.w_flow_sd == grid.front().w_flow_sd);
}

TEST_CASE("tune_weights is invariant to history order") {
    Rng rng(31);
    std::vector<br::FeedbackExample> history;
    const Date start = Date::parse("2024-03-01");
    for (int d = 0; d < 9; ++d) {
        for (int i = 0; i < 6; ++i) {
            const double sd = rng.next_uniform(0.5, 3.0);
            const double base = rng.next_uniform(20.0, 30.0);
            const double actual = base + rng.next_uniform(-6.0, 1.5 * sd);
            history.push_back(example(base, actual, start + d, sd, rng.next_double(),
                                      rng.next_double()));
        }
    }
    const auto w1 = br::tune_weights(history, 0.1, br::default_weight_grid());
    auto shuffled = history;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[rng.next_below(i)]);
    }
    const auto w2 = br::tune_weights(shuffled, 0.1, br::default_weight_grid());
    CHECK(w1.w_linehaul_sd == w2.w_linehaul_sd);
    CHECK(w1.w_flow_mean == w2.w_flow_mean);
    CHECK(w1.w_flow_sd == w2.w_flow_sd);
}

TEST_CASE("tune_weights rejects degenerate input") {
    std::vector<br::FeedbackExample> short_history;
    for (int d = 0; d < 3; ++d) {
        short_history.push_back(example(10, 9, Date::parse("2024-03-01") + d));
    }
    CHECK_THROWS_AS(br::tune_weights(short_history, 0.05, br::default_weight_grid()), InputError);
    CHECK_THROWS_AS(br::tune_weights({}, 0.05, br::default_weight_grid()), InputError);
}

TEST_CASE("all-zero targets leave the base prediction unchanged") {
    std::vector<br::FeedbackExample> ex;
    const Date start = Date::parse("2024-04-01");
    Rng rng(5);
    for (int i = 0; i < 60; ++i) {
        auto e = example(20.0 + rng.next_double(), 21.0, start + (i % 7),
                         rng.next_double(), rng.next_double(), rng.next_double());
        ex.push_back(e);
    }
    const auto corrector = br::train_corrector(ex, {0.0, 0.0, 0.0});
    for (const auto& e : ex) {
        CHECK(br::correct(corrector, e.base_prediction, e) ==
              doctest::Approx(e.base_prediction).epsilon(1e-9));
    }
}

TEST_CASE("constant three-hour targets shift corrections by three hours") {
    std::vector<br::FeedbackExample> ex;
    const Date start = Date::parse("2024-04-01");
    Rng rng(6);
    for (int i = 0; i < 80; ++i) {
        ex.push_back(example(20.0 + 2.0 * rng.next_double(), 22.0, start + (i % 10), 3.0));
    }
    // w_linehaul_sd = 1 and sd fixed at 3h: every target is exactly 3h.
    const auto corrector = br::train_corrector(ex, {1.0, 0.0, 0.0});
    for (const auto& e : ex) {
        const double corrected = br::correct(corrector, e.base_prediction, e);
        CHECK(corrected == doctest::Approx(e.base_prediction + 3.0).epsilon(0.1 / 23.0));
    }
}

TEST_CASE("corrected prediction never falls below the base") {
    Rng rng(7);
    std::vector<br::FeedbackExample> ex;
    const Date start = Date::parse("2024-04-01");
    for (int i = 0; i < 120; ++i) {
        // Noisy targets around zero force some negative raw outputs.
        auto e = example(15.0 + rng.next_double() * 10.0, 15.0, start + (i % 9),
                         rng.next_uniform(-0.2, 0.4));
        e.linehaul_sd = rng.next_uniform(-0.5, 0.5);
        ex.push_back(e);
    }
    const auto corrector = br::train_corrector(ex, {2.0, 0.0, 0.0});
    for (const auto& e : ex) {
        CHECK(br::correct(corrector, e.base_prediction, e) >= e.base_prediction);
    }
}

TEST_CASE("corrector persists with its tuned weights") {
    std::vector<br::FeedbackExample> ex;
    const Date start = Date::parse("2024-04-01");
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        ex.push_back(example(18.0, 19.0 + rng.next_double(), start + (i % 8),
                             rng.next_double() * 2.0, rng.next_double(), rng.next_double()));
    }
    const auto corrector = br::train_corrector(ex, {0.5, 0.25, 0.0});
    const auto dir = std::filesystem::temp_directory_path() / "promise_test_breach";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "breach.json").string();
    corrector.save(path);
    const auto back = br::Corrector::load(path);
    CHECK(back.weights.w_linehaul_sd == 0.5);
    CHECK(back.weights.w_flow_mean == 0.25);
    for (const auto& e : ex) {
        CHECK(br::correct(back, e.base_prediction, e) ==
              br::correct(corrector, e.base_prediction, e));
    }
}
