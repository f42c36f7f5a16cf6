#include <doctest.h>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string kCli = PROMISE_CLI_PATH;

fs::path work_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "promise_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct RunResult {
    int exit_code = 0;
    std::string out;
    std::string err;
};

RunResult run(const std::string& args) {
    const auto out_path = work_dir() / "stdout.txt";
    const auto err_path = work_dir() / "stderr.txt";
    const std::string cmd =
        kCli + " " + args + " >" + out_path.string() + " 2>" + err_path.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

std::string slurp_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

// Shared tiny simulation + trained models for the pipeline smoke tests.
const fs::path& fixture() {
    static const fs::path dir = [] {
        const auto d = work_dir() / "fixture";
        fs::create_directories(d / "models");
        write_file(d / "scenario.json", "{\"preset\": \"default\", \"horizon_days\": 40}");
        auto r = run("simulate --scenario " + (d / "scenario.json").string() +
                     " --days 24 --orders-per-day 120 --seed 5 --out " + (d / "sim").string());
        REQUIRE(r.exit_code == 0);
        const std::string common =
            " --data " + (d / "sim/deliveries.csv").string() + " --calendar " +
            (d / "sim/calendar.csv").string() + " --centers " + (d / "sim/centers.csv").string() +
            " --scenario " + (d / "sim/scenario.json").string() + " --rules " +
            (d / "sim/rules.json").string() + " --as-of 2024-01-19 --train-days 14";
        r = run("train --leg shipping --model gbdt --loss quantile:0.85" + common +
                " --iterations 12 --out " + (d / "models/shipping.json").string());
        REQUIRE(r.exit_code == 0);
        REQUIRE(r.out.find("iter 12 loss") != std::string::npos);
        r = run("train --leg warehouse --model baseline" + common + " --out " +
                (d / "models/preship_warehouse.json").string());
        REQUIRE(r.exit_code == 0);
        r = run("train --leg vendor --model baseline" + common + " --out " +
                (d / "models/preship_vendor.json").string());
        REQUIRE(r.exit_code == 0);
        fs::copy_file(d / "sim/rules.json", d / "models/rules.json");
        return d;
    }();
    return dir;
}

} // namespace

TEST_CASE("simulate is byte-identical for one seed") {
    const auto dir = work_dir() / "determinism";
    fs::create_directories(dir);
    write_file(dir / "scenario.json", "{\"preset\": \"hrd\", \"horizon_days\": 30}");
    for (const char* out : {"a", "b"}) {
        const auto r = run("simulate --scenario " + (dir / "scenario.json").string() +
                           " --days 18 --orders-per-day 60 --seed 9 --out " +
                           (dir / out).string());
        CHECK(r.exit_code == 0);
    }
    for (const char* name : {"deliveries.csv", "plans.csv", "centers.csv", "calendar.csv"}) {
        CHECK(slurp_file(dir / "a" / name) == slurp_file(dir / "b" / name));
    }
    const auto rerun = run("simulate --scenario " + (dir / "scenario.json").string() +
                           " --days 18 --orders-per-day 60 --seed 10 --out " +
                           (dir / "c").string());
    CHECK(rerun.exit_code == 0);
    CHECK(slurp_file(dir / "a/deliveries.csv") != slurp_file(dir / "c/deliveries.csv"));
}

TEST_CASE("train then evaluate produces a report with accuracy and breach") {
    const auto& d = fixture();
    const auto r = run("evaluate --models " + (d / "models").string() + " --data " +
                       (d / "sim/deliveries.csv").string() + " --window 1 --out " +
                       (d / "report").string());
    CHECK(r.exit_code == 0);
    const auto csv = slurp_file(d / "report.csv");
    CHECK(csv.find("model,accuracy,breach") == 0);
    CHECK(csv.find("pipeline,") != std::string::npos);
    CHECK(csv.find("rule-baseline,") != std::string::npos);
    CHECK(fs::exists(d / "report.md"));
    const auto summary = json::parse(slurp_file(d / "report.json"));
    CHECK(summary["early_window"] == 1);
    CHECK(summary["models"].size() == 2);
}

TEST_CASE("quote emits leg predictions for the order's source only") {
    const auto& d = fixture();
    write_file(d / "order.json",
               R"({"order_id": "q1", "placed_at": "2024-01-20 11:00",
                   "source_kind": "warehouse", "source_id": "W1",
                   "lane": {"origin": "W1", "hops": ["H1"], "destination": "C1",
                            "carrier": "own"},
                   "pincode": "560001", "tier": "tier1", "address": "home",
                   "item_count": 1})");
    const auto r = run("quote --order " + (d / "order.json").string() + " --models " +
                       (d / "models").string());
    REQUIRE(r.exit_code == 0);
    const auto quote = json::parse(r.out);
    CHECK(quote["leg_predictions"].contains("warehouse"));
    CHECK(quote["leg_predictions"].contains("shipping"));
    CHECK_FALSE(quote["leg_predictions"].contains("vendor"));
    CHECK(quote["model_tags"]["shipping"] == "gbdt-quantile:0.85");
}

TEST_CASE("quote accepts inline order JSON") {
    const auto& d = fixture();
    const std::string inline_order =
        "{\"order_id\": \"inline1\", \"placed_at\": \"2024-01-20 12:00\","
        "\"source_kind\": \"warehouse\", \"source_id\": \"W1\","
        "\"lane\": {\"origin\": \"W1\", \"hops\": [\"H1\"],"
        "\"destination\": \"C1\", \"carrier\": \"own\"},"
        "\"pincode\": \"560002\", \"tier\": \"tier1\","
        "\"address\": \"home\", \"item_count\": 1}";
    const auto r = run("quote --order '" + inline_order + "' --models " +
                       (d / "models").string());
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out)["order_id"] == "inline1");
}

TEST_CASE("tune-breach writes a corrector the engine picks up") {
    const auto& d = fixture();
    const auto r = run("tune-breach --history " + (d / "sim/deliveries.csv").string() +
                       " --cutoff 0.1 --tune-days 10 --models " + (d / "models").string() +
                       " --out " + (d / "models/breach.json").string());
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(d / "models/breach.json"));
    write_file(d / "order2.json",
               R"({"order_id": "q2", "placed_at": "2024-01-20 09:00",
                   "source_kind": "warehouse", "source_id": "W1",
                   "lane": {"origin": "W1", "hops": ["H1"], "destination": "C2",
                            "carrier": "own"},
                   "pincode": "400001", "tier": "tier1", "address": "home",
                   "item_count": 1})");
    const auto q = run("quote --order " + (d / "order2.json").string() + " --models " +
                       (d / "models").string());
    REQUIRE(q.exit_code == 0);
    CHECK(json::parse(q.out)["model_tags"].contains("breach"));
    fs::remove(d / "models/breach.json");
}

TEST_CASE("bad configuration exits nonzero with a one-line JSON error") {
    const auto r = run("train --leg shipping --model gbdt --data /nonexistent.csv --out /tmp/x");
    CHECK(r.exit_code != 0);
    REQUIRE_FALSE(r.err.empty());
    const auto line_end = r.err.find('\n');
    CHECK(line_end == r.err.size() - 1); // single line
    const auto err = json::parse(r.err.substr(0, line_end));
    CHECK(err.contains("error"));

    const auto r2 = run("evaluate --models /nonexistent --data /nonexistent.csv --out /tmp/y");
    CHECK(r2.exit_code != 0);
    CHECK(json::parse(r2.err).contains("error"));
}

TEST_CASE("failed writes leave no partial output file") {
    const auto& d = fixture();
    // /proc rejects file creation even for root.
    const auto r = run("evaluate --models " + (d / "models").string() + " --data " +
                       (d / "sim/deliveries.csv").string() + " --window 1 --out " +
                       "/proc/sys/promise_report");
    CHECK(r.exit_code != 0);
    CHECK(json::parse(r.err).contains("error"));
    CHECK_FALSE(fs::exists("/proc/sys/promise_report.csv"));
    CHECK_FALSE(fs::exists("/proc/sys/promise_report.csv.tmp"));
}

TEST_CASE("serve answers health and quote requests quickly") {
    const auto& d = fixture();
    const int port = 18234 + static_cast<int>(getpid() % 1000);

    const pid_t pid = fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
        const std::string models = (d / "models").string();
        const std::string port_str = std::to_string(port);
        execl(kCli.c_str(), kCli.c_str(), "serve", "--models", models.c_str(), "--port",
              port_str.c_str(), (char*)nullptr);
        _exit(127);
    }

    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(1, 0);
    bool healthy = false;
    for (int attempt = 0; attempt < 100 && !healthy; ++attempt) {
        usleep(100 * 1000);
        if (auto res = client.Get("/health")) {
            healthy = res->status == 200;
            if (healthy) {
                const auto body = json::parse(res->body);
                CHECK(body["status"] == "ok");
                CHECK(body["models"].contains("shipping"));
            }
        }
    }
    REQUIRE(healthy);

    const std::string order =
        R"({"order_id": "s1", "placed_at": "2024-01-20 10:00",
            "source_kind": "warehouse", "source_id": "W2",
            "lane": {"origin": "W2", "hops": ["H2"], "destination": "C3",
                     "carrier": "own"},
            "pincode": "110001", "tier": "tier2", "address": "office",
            "item_count": 2})";
    // Warm once, then time a request.
    auto first = client.Post("/quote", order, "application/json");
    REQUIRE(first);
    REQUIRE(first->status == 200);
    const auto t0 = std::chrono::steady_clock::now();
    auto res = client.Post("/quote", order, "application/json");
    const auto elapsed = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(elapsed < 50.0);
    const auto quote = json::parse(res->body);
    CHECK(quote["order_id"] == "s1");
    CHECK(quote["leg_predictions"].contains("shipping"));

    auto bad = client.Post("/quote", "{\"nope\": 1}", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    // Concurrent clients against the immutable engine.
    std::vector<std::thread> workers;
    std::atomic<int> ok{0};
    for (int t = 0; t < 8; ++t) {
        workers.emplace_back([&, t] {
            httplib::Client c("127.0.0.1", port);
            if (auto res2 = c.Post("/quote", order, "application/json")) {
                if (res2->status == 200 && json::parse(res2->body)["order_id"] == "s1") ++ok;
            }
            (void)t;
        });
    }
    for (auto& w : workers) w.join();
    CHECK(ok == 8);

    kill(pid, SIGTERM);
    int status = 0;
    waitpid(pid, &status, 0);
}
