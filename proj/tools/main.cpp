#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "promise/baseline.hpp"
#include "promise/breach.hpp"
#include "promise/calendar.hpp"
#include "promise/domain.hpp"
#include "promise/evalkit.hpp"
#include "promise/gbdt.hpp"
#include "promise/pipeline.hpp"
#include "promise/simnet.hpp"
#include "promise/stsf.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace promise;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct SimulateArgs {
    std::string scenario;
    int days = 0;
    int orders_per_day = 0;
    std::uint64_t seed = 1;
    std::string out_dir;
};

void cmd_simulate(const SimulateArgs& args) {
    auto scenario = simnet::load_scenario(args.scenario);
    const int days = args.days > 0 ? args.days : scenario.default_days;
    const int orders = args.orders_per_day > 0 ? args.orders_per_day : scenario.orders_per_day;
    const auto out = simnet::generate(scenario.spec, scenario.events, days, orders, args.seed);

    const fs::path dir(args.out_dir);
    save_records_csv(out.records, (dir / "deliveries.csv").string());
    out.plans.save_csv((dir / "plans.csv").string());
    simnet::save_center_days_csv(out.center_days, (dir / "centers.csv").string());
    scenario.spec.calendar.save_csv((dir / "calendar.csv").string());
    simnet::save_scenario(scenario, (dir / "scenario.json").string());
    simnet::default_rules(scenario).save((dir / "rules.json").string());
    std::printf("simulated %zu deliveries over %d days into %s\n", out.records.size(), days,
                args.out_dir.c_str());
}

struct TrainArgs {
    std::string leg;   // vendor | warehouse | shipping
    std::string model; // gbdt | stsf | baseline
    std::string loss = "mse";
    std::string data;
    std::string out;
    std::string calendar_csv;
    std::string centers_csv;
    std::string plans_csv;
    std::string scenario_json;
    std::string rules_json;
    std::string recipe_json;
    std::string drop_families;
    std::string as_of;
    int train_days = 45;
    int iterations = 0;
    double half_life_days = 14.0;
    double level = 0.95;
    std::uint64_t seed = 1;
};

struct LoadedInputs {
    std::vector<DeliveryRecord> history; // delivered before as_of
    HolidayCalendar calendar;
    std::vector<simnet::CenterDayStats> center_days;
    std::optional<simnet::PlanTables> plans;
    std::vector<simnet::VendorSpec> vendors;
    std::map<std::pair<std::string, int>, calendar::HandlingTime> handling;
    Date as_of;

    pipeline::FeatureInputs inputs() const {
        pipeline::FeatureInputs in;
        in.history = &history;
        in.calendar = &calendar;
        in.handling = &handling;
        in.plans = plans ? &*plans : nullptr;
        in.center_days = center_days.empty() ? nullptr : &center_days;
        in.vendors = vendors.empty() ? nullptr : &vendors;
        in.as_of = as_of;
        return in;
    }
};

LoadedInputs load_inputs(const std::string& data, const std::string& calendar_csv,
                         const std::string& centers_csv, const std::string& plans_csv,
                         const std::string& scenario_json, const std::string& as_of_flag) {
    LoadedInputs li;
    auto all = load_records_csv(data);
    if (all.empty()) throw InputError("no delivery records in " + data);
    Date max_delivered = all.front().delivered_at.date();
    for (const auto& r : all) max_delivered = std::max(max_delivered, r.delivered_at.date());
    li.as_of = as_of_flag.empty() ? max_delivered + 1 : Date::parse(as_of_flag);
    for (auto& r : all) {
        if (r.delivered_at.date() < li.as_of) li.history.push_back(std::move(r));
    }
    if (!calendar_csv.empty()) li.calendar = HolidayCalendar::load_csv(calendar_csv);
    if (!centers_csv.empty()) {
        for (auto& s : simnet::load_center_days_csv(centers_csv)) {
            if (s.date < li.as_of) li.center_days.push_back(std::move(s));
        }
    }
    if (!plans_csv.empty()) li.plans = simnet::PlanTables::load_csv(plans_csv);
    if (!scenario_json.empty()) {
        li.vendors = simnet::load_scenario(scenario_json).spec.vendors;
    }
    li.handling = calendar::derive_table(li.calendar, li.history, li.as_of);
    return li;
}

pipeline::FeatureRecipe recipe_for(const TrainArgs& args) {
    pipeline::FeatureRecipe recipe = args.recipe_json.empty()
                                         ? pipeline::FeatureRecipe::default_full()
                                         : pipeline::FeatureRecipe::from_json_string(
                                               read_file(args.recipe_json));
    if (!args.drop_families.empty()) {
        std::set<pipeline::FeatureFamily> drop;
        std::string token;
        std::stringstream ss(args.drop_families);
        while (std::getline(ss, token, ',')) {
            if (!token.empty()) drop.insert(pipeline::feature_family_from_string(token));
        }
        recipe = recipe.without_families(drop);
    }
    return recipe;
}

void write_context(const TrainArgs& args, const LoadedInputs& li,
                   const pipeline::FeatureRecipe& recipe) {
    pipeline::EngineContext context;
    context.as_of = li.as_of;
    context.deliveries_csv = fs::absolute(args.data).string();
    context.centers_csv = args.centers_csv.empty() ? "" : fs::absolute(args.centers_csv).string();
    context.plans_csv = args.plans_csv.empty() ? "" : fs::absolute(args.plans_csv).string();
    context.calendar_csv =
        args.calendar_csv.empty() ? "" : fs::absolute(args.calendar_csv).string();
    context.scenario_json =
        args.scenario_json.empty() ? "" : fs::absolute(args.scenario_json).string();
    context.recipe = recipe;
    context.stsf_level = args.level;

    const auto dir = fs::path(args.out).parent_path();
    const auto context_path = (dir.empty() ? fs::path(".") / "context.json" : dir / "context.json")
                                  .string();
    if (!args.rules_json.empty()) {
        context.cutoffs = baseline::RuleConfig::load(args.rules_json).cutoffs;
    } else if (fs::exists(context_path)) {
        context.cutoffs = pipeline::EngineContext::load(context_path).cutoffs;
    }
    context.save(context_path);
}

void cmd_train(const TrainArgs& args) {
    const auto li = load_inputs(args.data, args.calendar_csv, args.centers_csv, args.plans_csv,
                                args.scenario_json, args.as_of);
    const auto recipe = recipe_for(args);

    pipeline::Leg leg;
    std::optional<SourceKind> filter;
    if (args.leg == "shipping") {
        leg = pipeline::Leg::shipping;
    } else if (args.leg == "warehouse") {
        leg = pipeline::Leg::preship;
        filter = SourceKind::warehouse;
    } else if (args.leg == "vendor") {
        leg = pipeline::Leg::preship;
        filter = SourceKind::vendor;
    } else {
        throw ConfigError("unknown leg: " + args.leg);
    }

    pipeline::LegModel model;
    if (args.model == "baseline") {
        if (args.rules_json.empty()) throw ConfigError("baseline model needs --rules");
        model.kind = pipeline::LegModelKind::rule;
        model.rules = baseline::RuleConfig::load(args.rules_json);
        model.tag = "rule";
    } else if (args.model == "gbdt") {
        const Date train_from = li.as_of - args.train_days;
        auto ds = pipeline::build_training_dataset(leg, li.history, recipe, li.inputs(),
                                                   train_from, li.as_of, filter);
        ds = decay_weights(ds, li.as_of - 1, args.half_life_days);
        gbdt::BoosterParams params;
        params.loss = losses::LossSpec::parse(args.loss);
        params.seed = args.seed;
        if (args.iterations > 0) params.boosting_iterations = args.iterations;
        model.kind = pipeline::LegModelKind::gbdt;
        model.booster = gbdt::train(ds, params);
        model.tag = "gbdt-" + params.loss.describe();
        for (std::size_t i = 0; i < model.booster.training_loss.size(); ++i) {
            std::printf("iter %zu loss %s\n", i + 1,
                        format_double(model.booster.training_loss[i]).c_str());
        }
    } else if (args.model == "stsf") {
        auto series = pipeline::extract_leg_series(li.history, leg, filter);
        const Timestamp from = Timestamp::from_date(li.as_of - args.train_days, 0);
        std::vector<stsf::SeriesObservation> window;
        for (const auto& obs : series) {
            if (obs.t >= from) window.push_back(obs);
        }
        stsf::StsfConfig config;
        config.calendar = &li.calendar;
        std::set<std::string> regions;
        for (const auto& r : li.history) regions.insert(r.order.lane.destination);
        config.regions.assign(regions.begin(), regions.end());
        config.floor = 0.0;
        double max_y = 0.0;
        for (const auto& obs : window) max_y = std::max(max_y, obs.y);
        config.cap = 2.0 * max_y;
        config.quantile_levels = {0.5, 0.8, 0.9, 0.95};
        model.kind = pipeline::LegModelKind::stsf;
        model.seasonal = stsf::fit(window, config);
        // The fit runs on hourly means; the interval must cover individual
        // shipments, so recompute the residual quantiles per record.
        {
            std::vector<double> residuals;
            const Date from_day = li.as_of - args.train_days;
            for (const auto& r : li.history) {
                if (filter && r.order.source_kind != *filter) continue;
                const Timestamp at = leg == pipeline::Leg::shipping ? r.shipped_at
                                                                    : r.order.placed_at;
                if (at.date() < from_day) continue;
                const double y = leg == pipeline::Leg::shipping
                                     ? hours_between(r.shipped_at, r.delivered_at)
                                     : hours_between(r.order.placed_at, r.shipped_at);
                const double fitted = model.seasonal.trend_at(at) +
                                      model.seasonal.seasonal_at(at) +
                                      model.seasonal.holiday_at(at);
                residuals.push_back(y - fitted);
            }
            if (!residuals.empty()) {
                for (auto& [level, offset] : model.seasonal.residual_quantiles) {
                    offset = losses::weighted_quantile(residuals, {}, level);
                }
            }
        }
        model.stsf_level = args.level;
        model.tag = "stsf";
    } else {
        throw ConfigError("unknown model kind: " + args.model);
    }

    pipeline::save_leg_model(model, args.out);
    write_context(args, li, recipe);
    std::printf("trained %s model for the %s leg -> %s\n", model.tag.c_str(), args.leg.c_str(),
                args.out.c_str());
}

struct TuneBreachArgs {
    std::string history_csv;
    double cutoff = 0.05;
    std::string out;
    std::string models_dir;
    int tune_days = 14;
};

std::vector<breach::FeedbackExample> collect_feedback(const pipeline::QuoteEngine& engine,
                                                      int tune_days) {
    // Base shipping predictions replayed over the most recent delivered
    // orders; statistics are taken as of each order's placement date.
    const Date from = engine.as_of - tune_days;
    std::map<std::pair<std::string, std::int64_t>, pipeline::FlowStats> stats_cache;
    std::vector<breach::FeedbackExample> examples;
    if (!engine.shipping) throw ConfigError("no trained model for the shipping leg");

    std::vector<const DeliveryRecord*> recent;
    for (const auto& r : engine.history) {
        if (r.delivered_at.date() >= from) recent.push_back(&r);
    }
    std::vector<double> base_predictions(recent.size(), 0.0);
    if (engine.shipping->kind == pipeline::LegModelKind::gbdt) {
        std::vector<pipeline::TargetOrder> targets;
        targets.reserve(recent.size());
        for (const auto* r : recent) {
            pipeline::TargetOrder t;
            t.order = r->order;
            t.anchor = r->shipped_at;
            targets.push_back(std::move(t));
        }
        const auto ds = pipeline::build_features(targets, engine.recipe, engine.inputs());
        base_predictions = gbdt::predict(engine.shipping->booster, ds);
    } else if (engine.shipping->kind == pipeline::LegModelKind::stsf) {
        for (std::size_t i = 0; i < recent.size(); ++i) {
            base_predictions[i] = engine.shipping->seasonal
                                      .forecast(recent[i]->shipped_at, engine.shipping->stsf_level)
                                      .upper;
        }
    } else {
        throw ConfigError("tune-breach needs a gbdt or stsf shipping model");
    }

    for (std::size_t ri = 0; ri < recent.size(); ++ri) {
        const auto& r = *recent[ri];
        breach::FeedbackExample fe;
        fe.base_prediction = std::max(0.0, base_predictions[ri]);
        fe.actual = hours_between(r.shipped_at, r.delivered_at);
        fe.delivery_date = r.delivered_at.date();
        fe.weekday = fe.delivery_date.weekday();
        const auto key = std::make_pair(r.order.lane.key() + "|" + r.order.lane.destination,
                                        r.order.placed_at.date().days);
        auto it = stats_cache.find(key);
        if (it == stats_cache.end()) {
            it = stats_cache
                     .emplace(key, pipeline::flow_stats(engine.history, engine.center_days,
                                                        r.order.lane.key(),
                                                        r.order.lane.destination,
                                                        r.order.placed_at.date()))
                     .first;
        }
        fe.linehaul_sd = it->second.linehaul_sd;
        fe.inflow_mean = it->second.inflow_mean;
        fe.inflow_sd = it->second.inflow_sd;
        fe.outflow_mean = it->second.outflow_mean;
        fe.outflow_sd = it->second.outflow_sd;
        const auto weekend_it = engine.handling.find(
            {r.order.lane.destination, static_cast<int>(HolidayKind::weekend)});
        if (weekend_it != engine.handling.end()) {
            fe.handling_weekend = weekend_it->second.extra_hours;
        }
        const auto* entry = engine.calendar.find(r.order.lane.destination, fe.delivery_date);
        if (entry && entry->kind != HolidayKind::weekend) {
            const auto hit =
                engine.handling.find({r.order.lane.destination, static_cast<int>(entry->kind)});
            if (hit != engine.handling.end()) fe.handling_holiday = hit->second.extra_hours;
        }
        examples.push_back(std::move(fe));
    }
    return examples;
}

void cmd_tune_breach(const TuneBreachArgs& args) {
    auto engine = pipeline::load_engine(args.models_dir);
    if (!args.history_csv.empty()) {
        engine.history.clear();
        for (auto& r : load_records_csv(args.history_csv)) {
            if (r.delivered_at.date() < engine.as_of) engine.history.push_back(std::move(r));
        }
    }
    const auto examples = collect_feedback(engine, args.tune_days);
    const auto weights = breach::tune_weights(examples, args.cutoff, breach::default_weight_grid());
    const auto corrector = breach::train_corrector(examples, weights);
    corrector.save(args.out);
    std::printf("tuned breach weights (lh_sd %s, flow_mean %s, flow_sd %s) over %zu examples\n",
                format_double(weights.w_linehaul_sd).c_str(),
                format_double(weights.w_flow_mean).c_str(),
                format_double(weights.w_flow_sd).c_str(), examples.size());
}

void cmd_quote(const std::string& order_arg, const std::string& models_dir) {
    const auto engine = pipeline::load_engine(models_dir);
    const std::string text = !order_arg.empty() && order_arg.front() == '{'
                                 ? order_arg
                                 : read_file(order_arg);
    const Order order = order_from_json(text);
    std::printf("%s\n", engine.quote(order).to_json_string().c_str());
}

void cmd_serve(const std::string& models_dir, int port) {
    const auto engine = pipeline::load_engine(models_dir);
    httplib::Server server;
    server.Post("/quote", [&engine](const httplib::Request& req, httplib::Response& res) {
        try {
            const Order order = order_from_json(req.body);
            res.set_content(engine.quote(order).to_json_string(), "application/json");
        } catch (const std::exception& e) {
            json err{{"error", e.what()}};
            res.status = 400;
            res.set_content(err.dump(), "application/json");
        }
    });
    server.Get("/health", [&engine](const httplib::Request&, httplib::Response& res) {
        json j;
        j["status"] = "ok";
        j["as_of"] = engine.as_of.to_string();
        json models = json::object();
        if (engine.preship_warehouse) models["preship_warehouse"] = engine.preship_warehouse->tag;
        if (engine.preship_vendor) models["preship_vendor"] = engine.preship_vendor->tag;
        if (engine.shipping) models["shipping"] = engine.shipping->tag;
        if (engine.corrector) models["breach"] = "corrector";
        j["models"] = models;
        res.set_content(j.dump(), "application/json");
    });
    std::printf("serving quotes on port %d\n", port);
    std::fflush(stdout);
    if (!server.listen("0.0.0.0", port)) {
        throw ConfigError("cannot bind port " + std::to_string(port));
    }
}

struct EvaluateArgs {
    std::string models_dir;
    std::string data;
    int window = 1;
    std::string out;
};

void cmd_evaluate(const EvaluateArgs& args) {
    if (args.window != 1 && args.window != 2) throw ConfigError("window must be 1 or 2");
    const auto engine = pipeline::load_engine(args.models_dir);
    const auto records = load_records_csv(args.data);
    if (records.empty()) throw InputError("no delivery records in " + args.data);

    std::vector<std::pair<std::string, std::vector<evalkit::OutcomePair>>> per_model;
    per_model.emplace_back("pipeline",
                           evalkit::outcome_pairs(records, [&engine](const Order& o) {
                               return engine.quote(o).promise_at;
                           }));

    const auto rules_path = (fs::path(args.models_dir) / "rules.json").string();
    if (fs::exists(rules_path)) {
        const auto rules = baseline::RuleConfig::load(rules_path);
        per_model.emplace_back(
            "rule-baseline", evalkit::outcome_pairs(records, [&](const Order& o) {
                return baseline::rule_promise(o, rules, engine.calendar);
            }));
    }

    const auto report = evalkit::compare(per_model, args.window);
    atomic_write_file(args.out + ".csv", report.to_csv());
    atomic_write_file(args.out + ".md", report.to_markdown());
    atomic_write_file(args.out + ".json", report.to_json_string());
    std::printf("%s", report.to_markdown().c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"delivery promise date engine"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "generate synthetic deliveries");
    simulate->add_option("--scenario", sim.scenario, "scenario JSON (preset or full)")->required();
    simulate->add_option("--days", sim.days, "days to simulate");
    simulate->add_option("--orders-per-day", sim.orders_per_day, "base order volume");
    simulate->add_option("--seed", sim.seed, "random seed");
    simulate->add_option("--out", sim.out_dir, "output directory")->required();

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "train a leg model");
    train_cmd->add_option("--leg", train.leg, "vendor | warehouse | shipping")->required();
    train_cmd->add_option("--model", train.model, "gbdt | stsf | baseline")->required();
    train_cmd->add_option("--loss", train.loss, "mse | asymmetric:a | quantile:t");
    train_cmd->add_option("--data", train.data, "deliveries.csv")->required();
    train_cmd->add_option("--out", train.out, "model file to write")->required();
    train_cmd->add_option("--calendar", train.calendar_csv, "calendar.csv");
    train_cmd->add_option("--centers", train.centers_csv, "centers.csv");
    train_cmd->add_option("--plans", train.plans_csv, "plans.csv");
    train_cmd->add_option("--scenario", train.scenario_json, "scenario.json (vendor metadata)");
    train_cmd->add_option("--rules", train.rules_json, "rules.json (baseline / cutoffs)");
    train_cmd->add_option("--recipe", train.recipe_json, "feature recipe JSON");
    train_cmd->add_option("--drop-families", train.drop_families,
                          "comma-separated feature families to ablate");
    train_cmd->add_option("--as-of", train.as_of, "training as-of date (YYYY-MM-DD)");
    train_cmd->add_option("--train-days", train.train_days, "training window length");
    train_cmd->add_option("--iterations", train.iterations, "boosting iterations override");
    train_cmd->add_option("--half-life", train.half_life_days, "sample weight half-life days");
    train_cmd->add_option("--level", train.level, "stsf interval level");
    train_cmd->add_option("--seed", train.seed, "random seed");

    TuneBreachArgs tune;
    auto* tune_cmd = app.add_subcommand("tune-breach", "tune the feedback breach corrector");
    tune_cmd->add_option("--history", tune.history_csv, "deliveries.csv with recent outcomes");
    tune_cmd->add_option("--cutoff", tune.cutoff, "target breach fraction")->required();
    tune_cmd->add_option("--out", tune.out, "corrector file to write")->required();
    tune_cmd->add_option("--models", tune.models_dir, "models directory with the base model")
        ->required();
    tune_cmd->add_option("--tune-days", tune.tune_days, "delivery dates to tune over");

    std::string quote_order, quote_models;
    auto* quote_cmd = app.add_subcommand("quote", "quote one order");
    quote_cmd->add_option("--order", quote_order, "order JSON file or inline JSON")->required();
    quote_cmd->add_option("--models", quote_models, "models directory")->required();

    std::string serve_models;
    int serve_port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "HTTP quote endpoint");
    serve_cmd->add_option("--models", serve_models, "models directory")->required();
    serve_cmd->add_option("--port", serve_port, "port to listen on");

    EvaluateArgs eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "order-day accuracy and breach report");
    eval_cmd->add_option("--models", eval.models_dir, "models directory")->required();
    eval_cmd->add_option("--data", eval.data, "deliveries.csv with realized outcomes")->required();
    eval_cmd->add_option("--window", eval.window, "early window: 1 or 2");
    eval_cmd->add_option("--out", eval.out, "report stem (.csv/.md/.json)")->required();

    try {
        app.parse(argc, argv);
        if (*simulate) cmd_simulate(sim);
        if (*train_cmd) cmd_train(train);
        if (*tune_cmd) cmd_tune_breach(tune);
        if (*quote_cmd) cmd_quote(quote_order, quote_models);
        if (*serve_cmd) cmd_serve(serve_models, serve_port);
        if (*eval_cmd) cmd_evaluate(eval);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        json err{{"error", e.what()}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 1;
    }
    return 0;
}
