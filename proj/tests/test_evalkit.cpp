#include <doctest.h>

#include <algorithm>

#include "promise/evalkit.hpp"
#include "promise/rng.hpp"

using namespace promise;
namespace ev = promise::evalkit;

namespace {

ev::OutcomePair pair(Date order, std::int64_t promised_offset, std::int64_t delivered_offset) {
    return {order, order + promised_offset, order + delivered_offset};
}

} // namespace

TEST_CASE("perfect promises give accuracy one and breach zero") {
    const Date d = Date::parse("2024-05-01");
    std::vector<ev::OutcomePair> pairs;
    for (int i = 0; i < 10; ++i) pairs.push_back(pair(d + (i % 3), 3, 3));
    const auto report = ev::metrics(pairs, 1);
    CHECK(report.accuracy == doctest::Approx(1.0));
    CHECK(report.breach == doctest::Approx(0.0));
}

TEST_CASE("definition arithmetic on the three-order fixture") {
    const Date d = Date::parse("2024-05-01");
    // promised {d, d, d+1}, delivered {d, d-1, d+3}: accuracy 2/3, breach 1/3.
    std::vector<ev::OutcomePair> pairs = {
        {d - 2, d, d},
        {d - 2, d, d - 1},
        {d - 2, d + 1, d + 3},
    };
    const auto report = ev::metrics(pairs, 1);
    CHECK(report.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(report.breach == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("deliveries earlier than the window count in neither metric") {
    const Date d = Date::parse("2024-05-01");
    std::vector<ev::OutcomePair> pairs = {pair(d, 5, 3)}; // two days early, window 1
    const auto w1 = ev::metrics(pairs, 1);
    CHECK(w1.accuracy == 0.0);
    CHECK(w1.breach == 0.0);
    // The HRD window 2 admits it.
    const auto w2 = ev::metrics(pairs, 2);
    CHECK(w2.accuracy == 1.0);
}

TEST_CASE("accuracy plus breach never exceeds one per order date") {
    Rng rng(3);
    std::vector<ev::OutcomePair> pairs;
    const Date start = Date::parse("2024-05-01");
    for (int i = 0; i < 400; ++i) {
        pairs.push_back(pair(start + static_cast<std::int64_t>(rng.next_below(10)),
                             static_cast<std::int64_t>(rng.next_below(5)),
                             static_cast<std::int64_t>(rng.next_below(7))));
    }
    const auto report = ev::metrics(pairs, 1);
    for (const auto& day : report.days) {
        CHECK(day.accuracy + day.breach <= 1.0 + 1e-12);
    }
}

TEST_CASE("metrics are invariant under reordering") {
    Rng rng(5);
    std::vector<ev::OutcomePair> pairs;
    const Date start = Date::parse("2024-05-01");
    for (int i = 0; i < 200; ++i) {
        pairs.push_back(pair(start + static_cast<std::int64_t>(rng.next_below(7)),
                             static_cast<std::int64_t>(rng.next_below(4)),
                             static_cast<std::int64_t>(rng.next_below(6))));
    }
    const auto a = ev::metrics(pairs, 1);
    auto shuffled = pairs;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[rng.next_below(i)]);
    }
    const auto b = ev::metrics(shuffled, 1);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.breach == b.breach);
}

TEST_CASE("per-order-date splitting reproduces the period metric exactly") {
    Rng rng(7);
    std::vector<ev::OutcomePair> pairs;
    const Date start = Date::parse("2024-05-01");
    for (int i = 0; i < 300; ++i) {
        pairs.push_back(pair(start + static_cast<std::int64_t>(rng.next_below(8)),
                             1 + static_cast<std::int64_t>(rng.next_below(4)),
                             static_cast<std::int64_t>(rng.next_below(6))));
    }
    const auto whole = ev::metrics(pairs, 1);

    double acc = 0.0, breach = 0.0;
    int n_days = 0;
    for (const auto& day : whole.days) {
        std::vector<ev::OutcomePair> subset;
        for (const auto& p : pairs) {
            if (p.order_date == day.order_date) subset.push_back(p);
        }
        const auto part = ev::metrics(subset, 1);
        acc += part.accuracy;
        breach += part.breach;
        ++n_days;
    }
    CHECK(whole.accuracy == doctest::Approx(acc / n_days).epsilon(1e-12));
    CHECK(whole.breach == doctest::Approx(breach / n_days).epsilon(1e-12));
}

TEST_CASE("metrics reject empty input") {
    CHECK_THROWS_AS(ev::metrics({}, 1), InputError);
}

TEST_CASE("comparing a model against itself yields identical rows") {
    Rng rng(9);
    std::vector<ev::OutcomePair> pairs;
    const Date start = Date::parse("2024-05-01");
    for (int i = 0; i < 120; ++i) {
        pairs.push_back(pair(start + static_cast<std::int64_t>(rng.next_below(7)),
                             1 + static_cast<std::int64_t>(rng.next_below(3)),
                             static_cast<std::int64_t>(rng.next_below(5))));
    }
    const auto report = ev::compare({{"a", pairs}, {"b", pairs}}, 1);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].accuracy == report.rows[1].accuracy);
    CHECK(report.rows[0].breach == report.rows[1].breach);

    const auto csv = report.to_csv();
    CHECK(csv.find("model,accuracy,breach") == 0);
    const auto md = report.to_markdown();
    CHECK(md.find("| a |") != std::string::npos);
    CHECK(report.to_json_string().find("\"models\"") != std::string::npos);
}

TEST_CASE("mismatched evaluation windows are rejected") {
    const Date d = Date::parse("2024-05-01");
    std::vector<ev::OutcomePair> a = {pair(d, 1, 1), pair(d + 1, 1, 1)};
    std::vector<ev::OutcomePair> b = {pair(d, 1, 1)};
    CHECK_THROWS_AS(ev::compare({{"a", a}, {"b", b}}, 1), InputError);
}
