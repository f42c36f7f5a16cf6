#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "promise/gbdt.hpp"

using namespace promise;
namespace g = promise::gbdt;

namespace {

g::BoosterParams exact_params() {
    g::BoosterParams p;
    p.boosting_iterations = 1;
    p.learning_rate = 1.0;
    p.num_leaves = 2;
    p.data_fraction = 1.0;
    p.feature_fraction = 1.0;
    p.min_data_in_leaf = 1;
    p.max_bins = 255;
    p.loss = losses::LossSpec::mse();
    return p;
}

// Weighted gradient/hessian arrays for an mse fit around prediction 0.
void mse_gradients(const Dataset& ds, std::vector<double>& grad_w, std::vector<double>& hess_w) {
    grad_w.resize(ds.rows);
    hess_w.resize(ds.rows);
    for (std::size_t i = 0; i < ds.rows; ++i) {
        const auto gh = losses::gradient_hessian(losses::LossSpec::mse(), ds.target[i], 0.0);
        const double w = ds.weight_at(i);
        grad_w[i] = gh.grad * w;
        hess_w[i] = gh.hess * w;
    }
}

std::vector<std::uint32_t> all_rows(std::size_t n) {
    std::vector<std::uint32_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0u);
    return rows;
}

g::NodeTotals totals_from(const std::vector<double>& grad_w, const std::vector<double>& hess_w) {
    g::NodeTotals t;
    for (std::size_t i = 0; i < grad_w.size(); ++i) {
        t.grad += grad_w[i];
        t.hess += hess_w[i];
        t.count += 1;
    }
    return t;
}

} // namespace

TEST_CASE("binning: constant column collapses to one bin") {
    Dataset ds;
    ds.add_numeric("x", std::vector<double>(40, 3.5));
    ds.rows = 40;
    const auto binned = g::bin_dataset(ds, 255);
    CHECK(binned.features[0].n_bins == 1);
    for (auto b : binned.features[0].bins) CHECK(b == 1);
}

TEST_CASE("binning: 1000 distinct values into 255 quantile bins of 3 or 4") {
    Dataset ds;
    std::vector<double> col(1000);
    std::iota(col.begin(), col.end(), 1.0);
    ds.add_numeric("x", std::move(col));
    ds.rows = 1000;
    const auto binned = g::bin_dataset(ds, 255);
    REQUIRE(binned.features[0].n_bins == 255);
    std::vector<int> counts(256, 0);
    for (auto b : binned.features[0].bins) counts[b]++;
    CHECK(counts[0] == 0);
    for (int b = 1; b <= 255; ++b) {
        CHECK(counts[b] >= 3);
        CHECK(counts[b] <= 4);
    }
}

TEST_CASE("binning: all-missing column populates only the missing bin") {
    Dataset ds;
    ds.add_numeric("x", std::vector<double>(10, kMissingValue));
    ds.rows = 10;
    const auto binned = g::bin_dataset(ds, 255);
    for (auto b : binned.features[0].bins) CHECK(b == 0);

    std::vector<double> gw(10, 1.0), hw(10, 2.0);
    const auto hists = g::build_histograms(binned, all_rows(10), gw, hw);
    CHECK(hists[0][0].count == 10);
    for (std::size_t b = 1; b < hists[0].size(); ++b) CHECK(hists[0][b].count == 0);
}

TEST_CASE("best_split separates the step target exactly") {
    Dataset ds;
    ds.add_numeric("x", {1.0, 2.0, 3.0, 4.0});
    ds.target = {1.0, 1.0, 10.0, 10.0};
    ds.rows = 4;

    std::vector<double> gw, hw;
    mse_gradients(ds, gw, hw);
    const auto binned = g::bin_dataset(ds, 255);
    const auto hists = g::build_histograms(binned, all_rows(4), gw, hw);
    const std::vector<int> features{0};
    auto params = exact_params();
    const auto split = g::best_split(hists, totals_from(gw, hw), binned, params, features);

    REQUIRE(split.has_value());
    CHECK(split->feature == 0);
    CHECK_FALSE(split->is_categorical);
    CHECK(split->threshold >= 2.0);
    CHECK(split->threshold < 3.0);

    // Exhaustive oracle over all (feature, threshold) pairs agrees.
    const auto ref = oracle::best_split(ds, gw, hw, 1);
    REQUIRE(ref.has_value());
    CHECK(split->gain == doctest::Approx(ref->gain).epsilon(1e-12));
}

TEST_CASE("best_split returns none on a pure node") {
    Dataset ds;
    ds.add_numeric("x", {1.0, 2.0, 3.0, 4.0});
    ds.target = {5.0, 5.0, 5.0, 5.0};
    ds.rows = 4;
    std::vector<double> gw, hw;
    mse_gradients(ds, gw, hw);
    const auto binned = g::bin_dataset(ds, 255);
    const auto hists = g::build_histograms(binned, all_rows(4), gw, hw);
    const std::vector<int> features{0};
    auto params = exact_params();
    CHECK_FALSE(g::best_split(hists, totals_from(gw, hw), binned, params, features).has_value());
}

TEST_CASE("best_split finds the two-level categorical partition") {
    Dataset ds;
    std::vector<std::string> raw;
    std::vector<double> y;
    for (int i = 0; i < 10; ++i) {
        raw.push_back("a");
        y.push_back(0.0);
    }
    for (int i = 0; i < 10; ++i) {
        raw.push_back("b");
        y.push_back(10.0);
    }
    ds.add_categorical("lvl", raw);
    ds.target = y;
    ds.rows = 20;

    std::vector<double> gw, hw;
    mse_gradients(ds, gw, hw);
    const auto binned = g::bin_dataset(ds, 255);
    const auto hists = g::build_histograms(binned, all_rows(20), gw, hw);
    const std::vector<int> features{0};
    auto params = exact_params();
    const auto split = g::best_split(hists, totals_from(gw, hw), binned, params, features);

    REQUIRE(split.has_value());
    CHECK(split->is_categorical);
    REQUIRE(split->left_categories.size() == 1);

    const auto ref = oracle::best_split(ds, gw, hw, 1);
    REQUIRE(ref.has_value());
    CHECK(split->gain == doctest::Approx(ref->gain).epsilon(1e-12));
}

TEST_CASE("split oracle equivalence on random mixed datasets") {
    Rng rng(101);
    for (int trial = 0; trial < 40; ++trial) {
        const Dataset ds = oracle::random_split_dataset(rng);
        std::vector<double> gw, hw;
        mse_gradients(ds, gw, hw);
        const auto binned = g::bin_dataset(ds, 255);
        const auto hists = g::build_histograms(binned, all_rows(ds.rows), gw, hw);
        std::vector<int> features(binned.features.size());
        std::iota(features.begin(), features.end(), 0);
        auto params = exact_params();

        const auto got = g::best_split(hists, totals_from(gw, hw), binned, params, features);
        const auto want = oracle::best_split(ds, gw, hw, params.min_data_in_leaf);

        REQUIRE(got.has_value() == want.has_value());
        if (got) {
            CHECK(std::fabs(got->gain - want->gain) <= 1e-9);
        }
    }
}

TEST_CASE("goss keeps everything when the top rate covers all rows") {
    std::vector<double> grads{1.0, -2.0, 3.0, -4.0};
    Rng rng(5);
    const auto s = g::goss_sample(grads, 1.0, 0.5, rng);
    CHECK(s.rows.size() == 4);
    for (double m : s.multipliers) CHECK(m == 1.0);
}

TEST_CASE("goss arithmetic at n=10, a=b=0.2") {
    std::vector<double> grads{10.0, -9.0, 8.0, -7.0, 6.0, -5.0, 4.0, -3.0, 2.0, -1.0};
    Rng rng(6);
    const auto s = g::goss_sample(grads, 0.2, 0.2, rng);
    REQUIRE(s.rows.size() == 4);
    int amplified = 0, kept = 0;
    for (std::size_t k = 0; k < s.rows.size(); ++k) {
        if (s.multipliers[k] == 1.0) {
            ++kept;
            CHECK(s.rows[k] <= 1); // the two largest |gradient| rows
        } else {
            CHECK(s.multipliers[k] == doctest::Approx(4.0));
            ++amplified;
        }
    }
    CHECK(kept == 2);
    CHECK(amplified == 2);
}

TEST_CASE("goss amplified remainder sum is unbiased over many draws") {
    Rng data_rng(77);
    std::vector<double> grads(200);
    for (auto& v : grads) v = data_rng.next_uniform(0.5, 3.0); // positive so the ratio is stable

    const double a = 0.2, b = 0.2;
    const auto top_n = static_cast<std::size_t>(std::ceil(a * grads.size()));
    std::vector<std::size_t> order(grads.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::fabs(grads[x]) > std::fabs(grads[y]);
    });
    double remainder_sum = 0.0;
    for (std::size_t k = top_n; k < order.size(); ++k) remainder_sum += grads[order[k]];

    double mean_amplified = 0.0;
    const int draws = 1000;
    for (int d = 0; d < draws; ++d) {
        Rng rng(static_cast<std::uint64_t>(d) + 1);
        const auto s = g::goss_sample(grads, a, b, rng);
        double acc = 0.0;
        for (std::size_t k = 0; k < s.rows.size(); ++k) {
            if (s.multipliers[k] != 1.0) acc += grads[s.rows[k]] * s.multipliers[k];
        }
        mean_amplified += acc;
    }
    mean_amplified /= draws;
    CHECK(std::fabs(mean_amplified - remainder_sum) / std::fabs(remainder_sum) < 0.02);
}

TEST_CASE("training on a constant target is exact after one iteration") {
    Dataset ds;
    ds.add_numeric("x", {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
    ds.target = std::vector<double>(6, 7.25);
    ds.rows = 6;
    auto params = exact_params();
    params.boosting_iterations = 1;
    const auto model = g::train(ds, params);
    for (double p : g::predict(model, ds)) CHECK(p == doctest::Approx(7.25));
}

TEST_CASE("single tree reproduces the step function") {
    Dataset ds;
    ds.add_numeric("x", {1.0, 2.0, 3.0, 4.0});
    ds.target = {1.0, 1.0, 10.0, 10.0};
    ds.rows = 4;
    const auto model = g::train(ds, exact_params());
    const auto preds = g::predict(model, ds);
    CHECK(preds[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(preds[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(preds[2] == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(preds[3] == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("pinball training loss is monotone non-increasing") {
    Rng rng(303);
    Dataset ds;
    std::vector<double> x1, x2, y;
    for (int i = 0; i < 300; ++i) {
        x1.push_back(rng.next_uniform(0.0, 10.0));
        x2.push_back(rng.next_uniform(0.0, 5.0));
        y.push_back(2.0 * x1.back() + x2.back() + rng.next_lognormal(0.0, 0.5));
    }
    ds.add_numeric("x1", std::move(x1));
    ds.add_numeric("x2", std::move(x2));
    ds.target = std::move(y);
    ds.rows = 300;

    g::BoosterParams params;
    params.boosting_iterations = 40;
    params.learning_rate = 0.1;
    params.num_leaves = 7;
    params.data_fraction = 1.0;
    params.feature_fraction = 1.0;
    params.min_data_in_leaf = 5;
    params.loss = losses::LossSpec::quantile(0.8);
    const auto model = g::train(ds, params);
    REQUIRE(model.training_loss.size() == 40);
    for (std::size_t i = 1; i < model.training_loss.size(); ++i) {
        CHECK(model.training_loss[i] <= model.training_loss[i - 1] + 1e-9);
    }
}

TEST_CASE("weighted training loss is monotone for all three objectives") {
    Rng rng(304);
    Dataset base;
    std::vector<double> x, y, w;
    for (int i = 0; i < 240; ++i) {
        x.push_back(rng.next_uniform(0.0, 10.0));
        y.push_back(std::sin(x.back()) * 4.0 + x.back() + rng.next_normal());
        w.push_back(0.2 + rng.next_double());
    }
    base.add_numeric("x", std::move(x));
    base.target = std::move(y);
    base.weight = std::move(w);
    base.rows = 240;

    for (const auto& loss : {losses::LossSpec::mse(), losses::LossSpec::asymmetric(2.0),
                             losses::LossSpec::quantile(0.9)}) {
        g::BoosterParams params;
        params.boosting_iterations = 25;
        params.learning_rate = 0.05;
        params.num_leaves = 6;
        params.data_fraction = 1.0;
        params.feature_fraction = 1.0;
        params.min_data_in_leaf = 5;
        params.loss = loss;
        const auto model = g::train(base, params);
        for (std::size_t i = 1; i < model.training_loss.size(); ++i) {
            CHECK(model.training_loss[i] <= model.training_loss[i - 1] + 1e-9);
        }
    }
}

TEST_CASE("zero trees predict the base score") {
    Dataset ds;
    ds.add_numeric("x", {1.0, 2.0, 3.0});
    ds.target = {4.0, 5.0, 9.0};
    ds.rows = 3;
    auto params = exact_params();
    params.boosting_iterations = 0;
    const auto model = g::train(ds, params);
    CHECK(model.trees.empty());
    for (double p : g::predict(model, ds)) CHECK(p == doctest::Approx(6.0));
}

TEST_CASE("fully grown tree memorizes eight distinct rows") {
    Dataset ds;
    ds.add_numeric("x", {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0});
    ds.target = {3.0, -1.0, 7.0, 2.5, 9.0, 0.5, 4.0, 11.0};
    ds.rows = 8;
    auto params = exact_params();
    params.num_leaves = 8;
    const auto model = g::train(ds, params);
    const auto preds = g::predict(model, ds);
    for (std::size_t i = 0; i < ds.rows; ++i) {
        CHECK(preds[i] == doctest::Approx(ds.target[i]).epsilon(1e-9));
    }
}

TEST_CASE("all-missing row routes by default directions to a finite value") {
    Rng rng(55);
    Dataset ds = oracle::random_split_dataset(rng, /*allow_missing=*/true);
    auto params = exact_params();
    params.boosting_iterations = 5;
    params.num_leaves = 4;
    params.learning_rate = 0.3;
    const auto model = g::train(ds, params);

    Dataset probe;
    probe.rows = 1;
    for (std::size_t c = 0; c < ds.numeric_names.size(); ++c) {
        probe.add_numeric(ds.numeric_names[c], {kMissingValue});
    }
    for (std::size_t c = 0; c < ds.categorical_names.size(); ++c) {
        probe.add_categorical_encoded(ds.categorical_names[c], {CategoricalDict::kMissing},
                                      ds.dicts[c]);
    }
    const auto preds = g::predict(model, probe);
    REQUIRE(preds.size() == 1);
    CHECK(std::isfinite(preds[0]));
}

TEST_CASE("quantile training stays calibrated under GOSS sampling") {
    Rng rng(505);
    auto make = [&rng](std::size_t n) {
        Dataset ds;
        std::vector<double> x1, x2, y;
        for (std::size_t i = 0; i < n; ++i) {
            x1.push_back(rng.next_uniform(0.0, 10.0));
            x2.push_back(std::floor(rng.next_uniform(0.0, 4.0)));
            y.push_back(5.0 + 2.0 * x1.back() + 3.0 * x2.back() +
                        rng.next_lognormal(1.0, 0.6));
        }
        ds.add_numeric("x1", std::move(x1));
        ds.add_numeric("x2", std::move(x2));
        ds.target = std::move(y);
        ds.rows = n;
        return ds;
    };
    const Dataset train = make(4000);
    const Dataset test = make(1500);

    g::BoosterParams params;
    params.boosting_iterations = 150;
    params.learning_rate = 0.1;
    params.num_leaves = 15;
    params.feature_fraction = 1.0;
    params.min_data_in_leaf = 20;
    params.goss = g::GossConfig{0.2, 0.2};
    params.loss = losses::LossSpec::quantile(0.8);
    params.seed = 7;
    const auto model = g::train(train, params);
    const auto preds = g::predict(model, test);
    std::size_t above = 0;
    for (std::size_t i = 0; i < test.rows; ++i) {
        if (test.target[i] > preds[i]) ++above;
    }
    const double exceedance = static_cast<double>(above) / static_cast<double>(test.rows);
    CHECK(exceedance > 0.14);
    CHECK(exceedance < 0.26);
}

TEST_CASE("identical data, params and seed give a bit-identical model file") {
    Rng rng(77);
    Dataset ds = oracle::random_split_dataset(rng);
    g::BoosterParams params;
    params.boosting_iterations = 12;
    params.learning_rate = 0.2;
    params.num_leaves = 5;
    params.data_fraction = 0.7;
    params.feature_fraction = 0.8;
    params.min_data_in_leaf = 2;
    params.seed = 99;
    params.loss = losses::LossSpec::quantile(0.7);

    const auto a = g::train(ds, params).to_json_string();
    const auto b = g::train(ds, params).to_json_string();
    CHECK(a == b);

    params.goss = g::GossConfig{0.3, 0.3};
    const auto c = g::train(ds, params).to_json_string();
    const auto d = g::train(ds, params).to_json_string();
    CHECK(c == d);
    CHECK(a != c);
}

TEST_CASE("adding a constant feature changes no prediction") {
    Rng rng(88);
    Dataset ds = oracle::random_split_dataset(rng);
    g::BoosterParams params;
    params.boosting_iterations = 15;
    params.learning_rate = 0.15;
    params.num_leaves = 6;
    params.data_fraction = 0.8;
    params.feature_fraction = 1.0;
    params.min_data_in_leaf = 2;
    params.seed = 3;

    const auto before = g::predict(g::train(ds, params), ds);

    Dataset with_const = ds;
    with_const.add_numeric("constant", std::vector<double>(ds.rows, 42.0));
    with_const.rows = ds.rows;
    const auto after = g::predict(g::train(with_const, params), with_const);

    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("model JSON round trip preserves predictions and rejects newer majors") {
    Rng rng(99);
    Dataset ds = oracle::random_split_dataset(rng);
    g::BoosterParams params;
    params.boosting_iterations = 8;
    params.num_leaves = 4;
    params.min_data_in_leaf = 2;
    params.learning_rate = 0.3;
    const auto model = g::train(ds, params);

    const auto text = model.to_json_string();
    const auto back = g::BoostedModel::from_json_string(text);
    CHECK(back.to_json_string() == text);
    const auto p1 = g::predict(model, ds);
    const auto p2 = g::predict(back, ds);
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);

    auto doctored = text;
    const auto pos = doctored.find("\"major\": 1");
    REQUIRE(pos != std::string::npos);
    doctored.replace(pos, 10, "\"major\": 2");
    CHECK_THROWS_AS(g::BoostedModel::from_json_string(doctored), InputError);
}

TEST_CASE("train rejects empty and non-finite input") {
    Dataset empty;
    CHECK_THROWS_AS(g::train(empty, exact_params()), InputError);

    Dataset bad;
    bad.add_numeric("x", {1.0, 2.0});
    bad.target = {1.0, std::numeric_limits<double>::infinity()};
    bad.rows = 2;
    CHECK_THROWS_AS(g::train(bad, exact_params()), InputError);
}

TEST_CASE("predict rejects schema mismatches") {
    Dataset ds;
    ds.add_numeric("x", {1.0, 2.0, 3.0, 4.0});
    ds.target = {1.0, 1.0, 2.0, 2.0};
    ds.rows = 4;
    const auto model = g::train(ds, exact_params());

    Dataset other;
    other.add_numeric("y", {1.0});
    other.rows = 1;
    CHECK_THROWS_AS(g::predict(model, other), InputError);
}
