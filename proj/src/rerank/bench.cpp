#include "rerank/bench.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rerank/process.hpp"
#include "rerank/service.hpp"

namespace rerank {

namespace {

using Clock = std::chrono::steady_clock;

double to_ms(Duration d) { return static_cast<double>(d.count()) / 1e6; }

void fill_environment(LatencyReport& r, const BenchOptions& opts) {
    r.approach = opts.approach;
    r.warmup = opts.warmup;
    r.warmup_excluded = true;
    if (opts.machine.empty() || opts.os.empty()) {
        const HostEnvironment env = capture_environment();
        r.machine = opts.machine.empty() ? env.cpu_model : opts.machine;
        r.os = opts.os.empty() ? env.os : opts.os;
    } else {
        r.machine = opts.machine;
        r.os = opts.os;
    }
}

double qps_of(std::size_t n, Duration elapsed) {
    const double secs = static_cast<double>(elapsed.count()) / 1e9;
    return static_cast<double>(n) / std::max(secs, 1e-9);
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

Duration percentile(std::vector<Duration> samples, double p) {
    if (samples.empty()) fail(ErrorCode::kArgument, "percentile of an empty sample set");
    if (!(p > 0.0 && p <= 100.0)) fail(ErrorCode::kArgument, "percentile p must be in (0, 100]");
    const auto n = samples.size();
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                     samples.end());
    return samples[rank - 1];
}

Measurement measure(const std::vector<BenchPair>& pairs, const PairCall& call, std::size_t warmup) {
    if (pairs.empty()) fail(ErrorCode::kArgument, "benchmark needs at least one pair");
    for (std::size_t i = 0; i < warmup; ++i) {
        try {
            call(pairs[i % pairs.size()]);
        } catch (const std::exception& e) {
            throw BenchAborted(0, std::string("during warmup: ") + e.what());
        }
    }
    Measurement m;
    m.samples.reserve(pairs.size());
    const auto start = Clock::now();
    for (const auto& p : pairs) {
        const auto t0 = Clock::now();
        try {
            call(p);
        } catch (const std::exception& e) {
            throw BenchAborted(m.samples.size(), e.what());
        }
        m.samples.push_back(std::chrono::duration_cast<Duration>(Clock::now() - t0));
    }
    m.elapsed = std::chrono::duration_cast<Duration>(Clock::now() - start);
    return m;
}

LatencyReport run_throughput(const std::vector<BenchPair>& pairs, const PairCall& scorer,
                             const BenchOptions& opts) {
    const Measurement m = measure(pairs, scorer, opts.warmup);
    LatencyReport r;
    fill_environment(r, opts);
    r.n_samples = m.samples.size();
    r.qps = qps_of(r.n_samples, m.elapsed);
    return r;
}

LatencyReport run_service_bench(const std::vector<BenchPair>& pairs, const PairCall& request,
                                const BenchOptions& opts) {
    const Measurement m = measure(pairs, request, opts.warmup);
    LatencyReport r;
    fill_environment(r, opts);
    r.n_samples = m.samples.size();
    r.qps = qps_of(r.n_samples, m.elapsed);
    r.p50_ms = to_ms(percentile(m.samples, 50.0));
    r.p99_ms = to_ms(percentile(m.samples, 99.0));
    return r;
}

LatencyReport run_service_bench(const std::vector<BenchPair>& pairs, const std::string& host,
                                std::uint16_t port, const BenchOptions& opts) {
    Client client(host, port);
    return run_service_bench(
        pairs, [&](const BenchPair& p) { client.get_score(p.first, p.second); }, opts);
}

LatencyReport report_from_elapsed(std::size_t n_pairs, Duration elapsed, const BenchOptions& opts) {
    if (n_pairs == 0) fail(ErrorCode::kArgument, "benchmark needs at least one pair");
    LatencyReport r;
    fill_environment(r, opts);
    r.n_samples = n_pairs;
    r.qps = qps_of(n_pairs, elapsed);
    return r;
}

LatencyReport run_compiled_bench(const std::string& evaluator, const std::string& pairs_path,
                                 const BenchOptions& opts) {
    const auto run = run_process({evaluator, "--bench", pairs_path, "--warmup", std::to_string(opts.warmup)});
    if (run.exit_code != 0) {
        fail(ErrorCode::kIo, "evaluator --bench exited with " + std::to_string(run.exit_code) + ": " + run.err);
    }
    try {
        const auto j = nlohmann::json::parse(run.out);
        return report_from_elapsed(j.at("n").get<std::size_t>(),
                                   Duration(j.at("elapsed_ns").get<std::int64_t>()), opts);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::kProtocol, std::string("unexpected evaluator --bench output: ") + e.what());
    }
}

double overhead_percent(double direct_qps, double service_qps) {
    return (direct_qps - service_qps) / direct_qps * 100.0;
}

std::string emit_report(const std::vector<LatencyReport>& reports, ReportFormat format) {
    std::ostringstream out;
    if (format == ReportFormat::kJsonLines) {
        for (const auto& r : reports) {
            nlohmann::ordered_json j;
            j["approach"] = r.approach;
            j["machine"] = r.machine;
            j["os"] = r.os;
            j["qps"] = r.qps;
            j["p50_ms"] = r.p50_ms ? nlohmann::ordered_json(*r.p50_ms) : nlohmann::ordered_json(nullptr);
            j["p99_ms"] = r.p99_ms ? nlohmann::ordered_json(*r.p99_ms) : nlohmann::ordered_json(nullptr);
            j["n_samples"] = r.n_samples;
            j["warmup"] = r.warmup;
            j["warmup_excluded"] = r.warmup_excluded;
            j["timed_region"] = r.timed_region;
            out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
        }
        return out.str();
    }

    const std::vector<std::string> header = {"Machine", "Approach", "Throughput (QPS)", "p50 (ms)",
                                             "p99 (ms)"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports) {
        rows.push_back({r.machine, r.approach, fixed(r.qps, 2), r.p50_ms ? fixed(*r.p50_ms, 3) : "",
                        r.p99_ms ? fixed(*r.p99_ms, 3) : ""});
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    auto emit_row = [&](const std::vector<std::string>& cells) {
        std::string line = "|";
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string pad(width[c] - cells[c].size(), ' ');
            // numeric columns right-aligned
            line += " " + (c >= 2 ? pad + cells[c] : cells[c] + pad) + " |";
        }
        out << line << '\n';
    };
    emit_row(header);
    std::string rule = "|";
    for (auto w : width) rule += std::string(w + 2, '-') + "|";
    out << rule << '\n';
    for (const auto& row : rows) emit_row(row);

    const LatencyReport* direct = nullptr;
    const LatencyReport* service = nullptr;
    for (const auto& r : reports) {
        if (r.approach == "direct" && !direct) direct = &r;
        if (r.approach == "service" && !service) service = &r;
    }
    if (direct && service && direct->qps > 0.0) {
        out << "service overhead vs direct: " << fixed(overhead_percent(direct->qps, service->qps), 2)
            << "%\n";
    }
    if (!reports.empty()) out << "timed region: " << reports.front().timed_region << '\n';
    return out.str();
}

std::vector<LatencyReport> parse_report_lines(const std::string& text) {
    std::vector<LatencyReport> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            LatencyReport r;
            r.approach = j.at("approach").get<std::string>();
            r.machine = j.at("machine").get<std::string>();
            r.os = j.at("os").get<std::string>();
            r.qps = j.at("qps").get<double>();
            if (!j.at("p50_ms").is_null()) r.p50_ms = j.at("p50_ms").get<double>();
            if (!j.at("p99_ms").is_null()) r.p99_ms = j.at("p99_ms").get<double>();
            r.n_samples = j.at("n_samples").get<std::size_t>();
            r.warmup = j.at("warmup").get<std::size_t>();
            r.warmup_excluded = j.at("warmup_excluded").get<bool>();
            r.timed_region = j.at("timed_region").get<std::string>();
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::kValidation, std::string("bad report line: ") + e.what());
        }
    }
    return out;
}

HostEnvironment capture_environment() {
    HostEnvironment env{"unknown cpu", "unknown os"};
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    while (std::getline(cpuinfo, line)) {
        if (line.rfind("model name", 0) == 0) {
            if (auto colon = line.find(':'); colon != std::string::npos) {
                auto value = line.substr(colon + 1);
                value.erase(0, value.find_first_not_of(" \t"));
                if (!value.empty()) env.cpu_model = value;
            }
            break;
        }
    }
    utsname u{};
    if (::uname(&u) == 0) env.os = std::string(u.sysname) + " " + u.release;
    return env;
}

}  // namespace rerank
