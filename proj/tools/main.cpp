// retrialq: capacity planning for multiserver systems with a single retrial
// slot. Subcommands: analyze (exact Markov solve), simulate (replicated DES),
// bound (closed-form loss tables), optimize (minimal server search).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "retrialq/bounds.hpp"
#include "retrialq/engine.hpp"
#include "retrialq/estimators.hpp"
#include "retrialq/markov.hpp"
#include "retrialq/optimizer.hpp"

using json = nlohmann::ordered_json;
using namespace retrialq;

namespace {

struct ToolConfig {
    SystemConfig sys;
    std::optional<int> n_max;  // sweep upper end for analyze/bound
    double alpha = 1e-4;
    std::string estimator = "all";
    int threads = 1;
};

ProcessKind kind_from_name(const std::string& name) {
    if (name == "poisson") return ProcessKind::poisson;
    if (name == "deterministic") return ProcessKind::deterministic;
    throw std::invalid_argument("unknown process kind: " + name);
}

std::string kind_name(ProcessKind kind) {
    return kind == ProcessKind::poisson ? "poisson" : "deterministic";
}

PointProcessSpec parse_process(const json& j) {
    PointProcessSpec spec;
    spec.kind = kind_from_name(j.value("kind", "poisson"));
    spec.rate = j.at("rate").get<double>();
    if (j.contains("proposal_rate") && !j["proposal_rate"].is_null())
        spec.proposal_rate = j["proposal_rate"].get<double>();
    return spec;
}

json process_to_json(const PointProcessSpec& spec) {
    json j{{"kind", kind_name(spec.kind)}, {"rate", spec.rate}};
    if (spec.proposal_rate) j["proposal_rate"] = *spec.proposal_rate;
    return j;
}

ToolConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    json j = json::parse(in);

    ToolConfig cfg;
    cfg.sys.n = j.value("n", 1);
    cfg.sys.mu = j.value("mu", 1.0);
    if (j.contains("arrival")) cfg.sys.arrival = parse_process(j["arrival"]);
    if (j.contains("retrial")) cfg.sys.retrial = parse_process(j["retrial"]);
    if (j.contains("horizon")) {
        const auto& h = j["horizon"];
        const std::string kind = h.value("kind", "time");
        if (kind == "time")
            cfg.sys.horizon = Horizon::time(h.at("value").get<double>());
        else if (kind == "arrivals")
            cfg.sys.horizon = Horizon::arrivals(h.at("value").get<std::uint64_t>());
        else
            throw std::invalid_argument("unknown horizon kind: " + kind);
    }
    cfg.sys.seed = j.value("seed", std::uint64_t{1});
    cfg.sys.replications = j.value("replications", 1);
    if (j.contains("n_max")) cfg.n_max = j["n_max"].get<int>();
    cfg.alpha = j.value("alpha", 1e-4);
    cfg.estimator = j.value("estimator", "all");
    cfg.threads = j.value("threads", 1);
    return cfg;
}

// Canonical serialization: parse(serialize(cfg)) resolves to the same run.
json config_to_json(const ToolConfig& cfg) {
    json j{{"n", cfg.sys.n},
           {"mu", cfg.sys.mu},
           {"arrival", process_to_json(cfg.sys.arrival)},
           {"retrial", process_to_json(cfg.sys.retrial)},
           {"seed", cfg.sys.seed},
           {"replications", cfg.sys.replications},
           {"alpha", cfg.alpha},
           {"estimator", cfg.estimator},
           {"threads", cfg.threads}};
    if (cfg.sys.horizon.kind == Horizon::Kind::time)
        j["horizon"] = {{"kind", "time"}, {"value", cfg.sys.horizon.time_limit}};
    else
        j["horizon"] = {{"kind", "arrivals"}, {"value", cfg.sys.horizon.arrival_budget}};
    if (cfg.n_max) j["n_max"] = *cfg.n_max;
    return j;
}

json estimate_to_json(const LossEstimate& est) {
    return {{"method", method_name(est.method)},
            {"value", est.value},
            {"clamped_value", est.clamped_value},
            {"clamped", est.clamped},
            {"halfwidth", est.halfwidth},
            {"replications", est.replications},
            {"effective_sample_size", est.effective_sample_size}};
}

// --- report rendering ------------------------------------------------------

std::string cell(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.9g", v.get<double>());
        return buf;
    }
    return v.dump();
}

void print_rows_table(const std::vector<json>& rows, std::ostream& out) {
    if (rows.empty()) return;
    std::vector<std::string> keys;
    for (auto it = rows.front().begin(); it != rows.front().end(); ++it)
        keys.push_back(it.key());
    std::vector<size_t> width(keys.size());
    std::vector<std::vector<std::string>> text;
    for (size_t c = 0; c < keys.size(); ++c) width[c] = keys[c].size();
    for (const auto& row : rows) {
        std::vector<std::string> line;
        for (size_t c = 0; c < keys.size(); ++c) {
            line.push_back(row.contains(keys[c]) ? cell(row[keys[c]]) : "");
            width[c] = std::max(width[c], line.back().size());
        }
        text.push_back(std::move(line));
    }
    auto pad = [&](const std::string& s, size_t w) {
        out << s << std::string(w - s.size() + 2, ' ');
    };
    for (size_t c = 0; c < keys.size(); ++c) pad(keys[c], width[c]);
    out << "\n";
    for (const auto& line : text) {
        for (size_t c = 0; c < keys.size(); ++c) pad(line[c], width[c]);
        out << "\n";
    }
}

void print_rows_csv(const std::vector<json>& rows, std::ostream& out) {
    if (rows.empty()) return;
    bool first = true;
    for (auto it = rows.front().begin(); it != rows.front().end(); ++it) {
        if (!first) out << ",";
        out << it.key();
        first = false;
    }
    out << "\n";
    for (const auto& row : rows) {
        first = true;
        for (auto it = rows.front().begin(); it != rows.front().end(); ++it) {
            if (!first) out << ",";
            if (row.contains(it.key())) out << cell(row[it.key()]);
            first = false;
        }
        out << "\n";
    }
}

// Pull a flat row list out of the report for table/csv output; scalar
// context goes first as comment-style lines.
void emit_report(const json& report, const std::string& format) {
    if (format == "json") {
        std::cout << report.dump(2) << "\n";
        return;
    }
    for (auto it = report.begin(); it != report.end(); ++it) {
        if (it.key() == "results" || it.key() == "config") continue;
        if (it->is_structured())
            std::cout << "# " << it.key() << " " << it->dump() << "\n";
        else
            std::cout << "# " << it.key() << " = " << cell(*it) << "\n";
    }
    std::vector<json> rows;
    if (report.contains("results"))
        for (const auto& r : report["results"]) rows.push_back(r);
    if (format == "csv")
        print_rows_csv(rows, std::cout);
    else
        print_rows_table(rows, std::cout);
}

// --- trace export ----------------------------------------------------------

// One trajectory replayed event by event; the kind and loss flag are
// recovered from the state delta (a no-op retrial changes nothing).
void write_trace(const SystemConfig& cfg, const std::string& path,
                 const std::string& format) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open trace file: " + path);
    const bool csv = format == "csv" || format == "table";
    if (csv) out << "time,kind,pre_q1,pre_q2,post_q1,post_q2,loss\n";

    Simulator sim(cfg, 0, 0.0);
    SystemState prev = sim.state();
    while (sim.step()) {
        const SystemState& cur = sim.state();
        const bool loss = cur.q3 > prev.q3;
        std::string kind;
        if (loss || (cur.q1 == prev.q1 + 1 && cur.q2 == prev.q2) || cur.q2 > prev.q2)
            kind = "arrival";
        else if (cur.q1 < prev.q1)
            kind = "service";
        else
            kind = "retrial";
        if (csv) {
            out << cur.clock << "," << kind << "," << prev.q1 << "," << prev.q2 << ","
                << cur.q1 << "," << cur.q2 << "," << (loss ? 1 : 0) << "\n";
        } else {
            out << json{{"time", cur.clock},
                        {"kind", kind},
                        {"pre", {prev.q1, prev.q2}},
                        {"post", {cur.q1, cur.q2}},
                        {"loss", loss}}
                       .dump()
                << "\n";
        }
        prev = cur;
    }
}

// --- commands ---------------------------------------------------------------

json markov_row(const ToolConfig& cfg, int n, BalanceVariant variant) {
    const auto dist = solve_stationary(build_balance_system(
        cfg.sys.arrival.rate, cfg.sys.retrial.rate, cfg.sys.mu, n, variant));
    const auto f = loss_markov(dist, cfg.sys.arrival.rate, cfg.sys.retrial.rate, cfg.sys.mu);
    return {{"n", n},
            {"variant", variant_name(variant)},
            {"loss_direct", f.direct},
            {"loss_balance", f.balance},
            {"loss_occupancy", f.occupancy},
            {"max_pairwise_diff", f.max_pairwise_diff()},
            {"balance_residual",
             corrected_balance_residual(dist, cfg.sys.arrival.rate, cfg.sys.retrial.rate,
                                        cfg.sys.mu)}};
}

int cmd_analyze(const ToolConfig& cfg, json& report) {
    if (cfg.sys.arrival.kind != ProcessKind::poisson ||
        cfg.sys.retrial.kind != ProcessKind::poisson)
        throw std::invalid_argument(
            "analyze needs poisson arrival and retrial processes; use `simulate` "
            "for other interarrival laws");

    const int n_hi = cfg.n_max.value_or(cfg.sys.n);
    json results = json::array();
    bool variants_disagree = false;
    for (int n = cfg.sys.n; n <= n_hi; ++n) {
        json corrected = markov_row(cfg, n, BalanceVariant::corrected);
        json literal = markov_row(cfg, n, BalanceVariant::as_published);
        const double gap = std::abs(corrected["loss_direct"].get<double>() -
                                    literal["loss_direct"].get<double>());
        corrected["variant_gap"] = gap;
        results.push_back(corrected);
        if (gap > 1e-9) {
            variants_disagree = true;
            results.push_back(literal);
        }
    }
    report["results"] = results;
    report["variants_disagree"] = variants_disagree;
    if (variants_disagree)
        report["note"] =
            "corrected and literal closed-form balance systems differ; the "
            "corrected system satisfies the generator's global balance, the "
            "literal one carries two transcription defects (a missing retrial-"
            "rate factor and a rerouted orbit inflow)";

    // P_{i,j} table for the last n, corrected system.
    const auto dist = solve_stationary(build_balance_system(
        cfg.sys.arrival.rate, cfg.sys.retrial.rate, cfg.sys.mu, n_hi));
    json table = json::array();
    for (int i = 0; i <= n_hi; ++i)
        table.push_back({{"i", i}, {"p_i0", dist.p[i][0]}, {"p_i1", dist.p[i][1]}});
    report["stationary"] = table;
    return 0;
}

std::vector<Method> selected_methods(const std::string& name) {
    if (name == "all") return {Method::sdn8, Method::sdn9, Method::sdn10};
    return {method_from_name(name)};
}

int cmd_simulate(const ToolConfig& cfg, const std::string& trace_path,
                 const std::string& format, json& report) {
    const auto runs = replicate(cfg.sys, default_warmup(cfg.sys), cfg.threads);
    json results = json::array();
    for (Method m : selected_methods(cfg.estimator)) {
        auto row = estimate_to_json(
            estimate_loss(runs, m, cfg.sys.arrival.rate, cfg.sys.mu));
        row["n"] = cfg.sys.n;
        results.push_back(row);
    }
    report["results"] = results;

    if (!cfg.sys.arrival.proposal_rate) {
        TrajectoryStats merged(cfg.sys.n);
        for (const auto& s : runs) merged.merge(s);
        report["balance_residual_max"] = balance_residuals(merged, cfg.sys.mu).max_abs_residual();
        report["total_arrivals"] = merged.total_arrivals;
        report["total_losses"] = merged.total_losses;
    }
    if (!trace_path.empty()) {
        write_trace(cfg.sys, trace_path, format);
        report["trace"] = trace_path;
    }
    return 0;
}

int cmd_bound(const ToolConfig& cfg, json& report) {
    const double merged = cfg.sys.arrival.rate + cfg.sys.retrial.rate;
    const int n_hi = cfg.n_max.value_or(cfg.sys.n);
    json results = json::array();
    for (int n = cfg.sys.n; n <= n_hi; ++n) {
        double loss;
        if (cfg.sys.arrival.kind == ProcessKind::poisson)
            loss = erlang_b(merged / cfg.sys.mu, n);
        else
            loss = gi_loss(InterarrivalLst::deterministic(1.0 / merged), cfg.sys.mu, n);
        results.push_back({{"n", n}, {"bound", loss}, {"feasible", loss <= cfg.alpha}});
    }
    report["results"] = results;
    report["upper_bound_servers"] =
        upper_bound_servers(cfg.sys.arrival.rate, cfg.sys.retrial.rate, cfg.sys.mu,
                            cfg.alpha, cfg.sys.arrival.kind);
    return 0;
}

int cmd_optimize(const ToolConfig& cfg, json& report) {
    const int upper = upper_bound_servers(cfg.sys.arrival.rate, cfg.sys.retrial.rate,
                                          cfg.sys.mu, cfg.alpha, cfg.sys.arrival.kind);
    const bool analytic = cfg.sys.arrival.kind == ProcessKind::poisson &&
                          cfg.sys.retrial.kind == ProcessKind::poisson &&
                          (cfg.estimator == "all" || cfg.estimator == "analytic");
    LossEvaluator evaluator;
    if (analytic) {
        evaluator = [&](int n, int) {
            LossEstimate est;
            est.method = Method::analytic;
            est.value = analytic_loss(cfg.sys.arrival.rate, cfg.sys.retrial.rate,
                                      cfg.sys.mu, n);
            est.clamped_value = est.value;
            return est;
        };
    } else {
        const Method m =
            cfg.estimator == "all" ? Method::sdn10 : method_from_name(cfg.estimator);
        evaluator = [&, m](int n, int level) {
            SystemConfig sys = cfg.sys;
            sys.n = n;
            sys.replications = cfg.sys.replications << level;  // budget raise
            const auto runs = replicate(sys, default_warmup(sys), cfg.threads);
            auto est = estimate_loss(runs, m, sys.arrival.rate, sys.mu);
            // compare the clamped value against alpha, keep the raw one too
            est.value = est.clamped_value;
            return est;
        };
    }

    const auto trace = minimal_servers(evaluator, cfg.alpha, 1, upper);
    json probes = json::array();
    for (const auto& p : trace.probes)
        probes.push_back({{"n", p.n},
                          {"value", p.value},
                          {"halfwidth", p.halfwidth},
                          {"method", method_name(p.method)},
                          {"budget_level", p.budget_level}});
    report["results"] = probes;
    report["upper_bound_servers"] = upper;
    report["search"] = {{"n_lower", trace.n_lower},
                        {"n_upper", trace.n_upper},
                        {"conclusive", trace.conclusive},
                        {"minimal_servers", trace.result},
                        {"inconclusive_n", trace.inconclusive_n}};
    return trace.conclusive ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capacity planning for multiserver systems with one retrial slot"};
    app.require_subcommand(1);

    std::string config_path, format = "table", trace_path, estimator;
    std::optional<int> n, n_max, replications, threads;
    std::optional<double> alpha, horizon, proposal_rate, mu, arrival_rate, retrial_rate;
    std::optional<std::uint64_t> seed, arrival_budget;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--n", n, "server count (sweep start for analyze/bound)");
    app.add_option("--n-max", n_max, "sweep end for analyze/bound");
    app.add_option("--mu", mu, "service rate per server");
    app.add_option("--arrival-rate", arrival_rate, "arrival rate");
    app.add_option("--retrial-rate", retrial_rate, "retrial rate");
    app.add_option("--alpha", alpha, "loss probability target");
    app.add_option("--seed", seed, "root RNG seed");
    app.add_option("--replications", replications, "independent replications");
    app.add_option("--horizon", horizon, "time horizon per replication");
    app.add_option("--arrivals", arrival_budget, "arrival-count horizon per replication");
    app.add_option("--proposal-rate", proposal_rate,
                   "importance-sampling arrival rate (poisson arrivals only)");
    app.add_option("--estimator", estimator, "sdn8|sdn9|sdn10|all")
        ->check(CLI::IsMember({"sdn8", "sdn9", "sdn10", "all", "analytic"}));
    app.add_option("--format", format, "table|json|csv")
        ->check(CLI::IsMember({"table", "json", "csv"}));
    app.add_option("--trace", trace_path, "write per-event log to this path");
    app.add_option("--threads", threads, "replication worker cap");

    auto* analyze = app.add_subcommand("analyze", "exact solve (poisson/poisson only)");
    auto* simulate = app.add_subcommand("simulate", "replicated simulation");
    auto* bound = app.add_subcommand("bound", "closed-form loss bound table");
    auto* optimize = app.add_subcommand("optimize", "minimal server search");
    for (auto* sub : {analyze, simulate, bound, optimize}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        ToolConfig cfg;
        if (!config_path.empty()) cfg = parse_config_file(config_path);
        if (n) cfg.sys.n = *n;
        if (n_max) cfg.n_max = *n_max;
        if (mu) cfg.sys.mu = *mu;
        if (arrival_rate) cfg.sys.arrival.rate = *arrival_rate;
        if (retrial_rate) cfg.sys.retrial.rate = *retrial_rate;
        if (alpha) cfg.alpha = *alpha;
        if (seed) cfg.sys.seed = *seed;
        if (replications) cfg.sys.replications = *replications;
        if (horizon) cfg.sys.horizon = Horizon::time(*horizon);
        if (arrival_budget) cfg.sys.horizon = Horizon::arrivals(*arrival_budget);
        if (proposal_rate) cfg.sys.arrival.proposal_rate = *proposal_rate;
        if (!estimator.empty()) cfg.estimator = estimator;
        if (threads) cfg.threads = *threads;
        if (cfg.threads < 1 || cfg.n_max.value_or(cfg.sys.n) < cfg.sys.n)
            throw std::invalid_argument("bad thread count or n range");
        cfg.sys.validate();

        const auto t0 = std::chrono::steady_clock::now();
        json report;
        int rc = 0;
        if (*analyze) {
            report["command"] = "analyze";
            rc = cmd_analyze(cfg, report);
        } else if (*simulate) {
            report["command"] = "simulate";
            rc = cmd_simulate(cfg, trace_path, format, report);
        } else if (*bound) {
            report["command"] = "bound";
            rc = cmd_bound(cfg, report);
        } else if (*optimize) {
            report["command"] = "optimize";
            rc = cmd_optimize(cfg, report);
        }
        const auto t1 = std::chrono::steady_clock::now();
        report["timing_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        report["seed"] = cfg.sys.seed;
        report["config"] = config_to_json(cfg);
        emit_report(report, format);
        return rc;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::logic_error& e) {
        std::cerr << "internal invariant violation: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
