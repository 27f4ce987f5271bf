#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

using json = nlohmann::json;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(RETRIALQ_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult res;
    char buf[4096];
    size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

json run_json(const std::string& args, int expect_exit = 0) {
    const auto res = run_cli(args + " --format json");
    CHECK(res.exit_code == expect_exit);
    return json::parse(res.out);
}

}  // namespace

TEST_CASE("bound emits the closed-form table and the server upper bound") {
    const auto report = run_json(
        "bound --n 26 --n-max 27 --arrival-rate 10 --retrial-rate 2 --mu 1 --alpha 1e-4");
    CHECK(report["upper_bound_servers"] == 27);
    CHECK(report["results"].size() == 2);
    CHECK(std::abs(report["results"][0]["bound"].get<double>() - 0.000174) < 5e-7);
    CHECK(std::abs(report["results"][1]["bound"].get<double>() - 0.000078) < 5e-7);
    CHECK_FALSE(report["results"][0]["feasible"].get<bool>());
    CHECK(report["results"][1]["feasible"].get<bool>());
}

TEST_CASE("analyze rejects non-poisson processes with exit code 2") {
    std::ofstream("/tmp/retrialq_det.json")
        << R"({"n": 3, "arrival": {"kind": "deterministic", "rate": 10.0},
               "retrial": {"kind": "poisson", "rate": 2.0}})";
    const auto res = run_cli("analyze --config /tmp/retrialq_det.json");
    CHECK(res.exit_code == 2);
}

TEST_CASE("invalid configuration exits with code 2") {
    CHECK(run_cli("simulate --n 0 --arrival-rate 1 --retrial-rate 1").exit_code == 2);
    CHECK(run_cli("simulate --n 2 --arrival-rate -3 --retrial-rate 1").exit_code == 2);
    CHECK(run_cli("simulate --horizon nope").exit_code == 2);
    CHECK(run_cli("bogus-command").exit_code == 2);
}

TEST_CASE("analyze three-way losses agree and match the direct value") {
    const auto report =
        run_json("analyze --n 14 --arrival-rate 10 --retrial-rate 2 --mu 1");
    const auto& row = report["results"][0];
    CHECK(row["variant"] == "corrected");
    CHECK(row["max_pairwise_diff"].get<double>() < 1e-10);
    CHECK(row["balance_residual"].get<double>() < 1e-10);
    // stationary table tail is the direct loss
    const auto& tail = report["stationary"].back();
    CHECK(tail["p_i1"].get<double>() ==
          doctest::Approx(row["loss_direct"].get<double>()).epsilon(1e-12));
}

TEST_CASE("config echo round-trips to an identical run") {
    const std::string flags =
        "simulate --n 5 --arrival-rate 8 --retrial-rate 2 --mu 1 --horizon 300 "
        "--replications 4 --seed 77 --estimator all";
    const auto first = run_json(flags);
    std::ofstream("/tmp/retrialq_echo.json") << first["config"].dump();
    const auto second = run_json("simulate --config /tmp/retrialq_echo.json");
    CHECK(first["results"] == second["results"]);
    CHECK(first["config"] == second["config"]);
    CHECK(first["seed"] == 77);
}

TEST_CASE("identical seeds reproduce; different seeds vary") {
    const std::string flags =
        "simulate --n 4 --arrival-rate 6 --retrial-rate 1 --horizon 200 --replications 2";
    const auto a = run_json(flags + " --seed 9");
    const auto b = run_json(flags + " --seed 9");
    const auto c = run_json(flags + " --seed 10");
    CHECK(a["results"] == b["results"]);
    CHECK(a["results"] != c["results"]);
}

TEST_CASE("trace log has one well-formed record per event") {
    const char* path = "/tmp/retrialq_trace.jsonl";
    std::remove(path);
    const auto report = run_json(
        std::string("simulate --n 2 --arrival-rate 3 --retrial-rate 1 --horizon 50 "
                    "--seed 3 --trace ") +
        path);
    CHECK(report["trace"] == path);

    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    int records = 0, losses = 0;
    while (std::getline(in, line)) {
        const json rec = json::parse(line);
        CHECK((rec["kind"] == "arrival" || rec["kind"] == "retrial" ||
               rec["kind"] == "service"));
        CHECK(rec["time"].get<double>() > 0.0);
        CHECK(rec["pre"].size() == 2);
        CHECK(rec["post"].size() == 2);
        if (rec["loss"].get<bool>()) {
            CHECK(rec["kind"] == "arrival");
            CHECK(rec["pre"] == rec["post"]);
            ++losses;
        }
        ++records;
    }
    CHECK(records > 50);
    // same stream as the first replication, but the trace starts at time 0
    // while report counters skip the warmup window
    CHECK(losses >= report["total_losses"].get<int>());
    CHECK(losses > 0);
}

TEST_CASE("optimize reports the search trace and minimal n") {
    const auto report =
        run_json("optimize --arrival-rate 10 --retrial-rate 2 --mu 1 --alpha 1e-4");
    CHECK(report["search"]["conclusive"].get<bool>());
    const int n_star = report["search"]["minimal_servers"].get<int>();
    CHECK(report["upper_bound_servers"] == 27);
    CHECK(n_star >= 1);
    CHECK(n_star <= 27);
    CHECK_FALSE(report["results"].empty());
}

TEST_CASE("csv output carries a header plus one line per row") {
    const auto res = run_cli(
        "bound --n 20 --n-max 22 --arrival-rate 10 --retrial-rate 2 --format csv");
    CHECK(res.exit_code == 0);
    int data_lines = 0;
    bool header = false;
    size_t pos = 0;
    while (pos < res.out.size()) {
        const size_t end = res.out.find('\n', pos);
        const std::string line = res.out.substr(pos, end - pos);
        pos = end == std::string::npos ? res.out.size() : end + 1;
        if (line.rfind("#", 0) == 0 || line.empty()) continue;
        if (line.rfind("n,", 0) == 0)
            header = true;
        else
            ++data_lines;
    }
    CHECK(header);
    CHECK(data_lines == 3);
}
