#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rerank/error.hpp"

namespace rerank {

using Duration = std::chrono::nanoseconds;
using BenchPair = std::pair<std::string, std::string>;
/// One timed unit of work: score a single question/answer pair.
using PairCall = std::function<void(const BenchPair&)>;

inline constexpr std::size_t kDefaultWarmup = 100;
inline constexpr const char* kTimedRegion = "full per-pair call including tokenization";

struct LatencyReport {
    std::string approach;
    std::string machine;
    std::string os;
    double qps = 0.0;
    std::optional<double> p50_ms;  // absent for feedforward-only runs
    std::optional<double> p99_ms;
    std::size_t n_samples = 0;
    std::size_t warmup = kDefaultWarmup;
    bool warmup_excluded = true;
    std::string timed_region = kTimedRegion;

    bool operator==(const LatencyReport&) const = default;
};

struct BenchOptions {
    std::size_t warmup = kDefaultWarmup;
    std::string approach;
    std::string machine;  // empty: captured from the host
    std::string os;       // empty: captured from the host
};

/// Raised when a run dies part-way; carries how many samples were taken.
class BenchAborted : public Error {
public:
    BenchAborted(std::size_t completed, const std::string& cause)
        : Error(ErrorCode::kTransport,
                "benchmark aborted after " + std::to_string(completed) + " samples: " + cause),
          completed_(completed) {}
    std::size_t completed() const noexcept { return completed_; }

private:
    std::size_t completed_;
};

/// Nearest-rank: the ceil(p/100 * n)-th smallest sample, 0 < p <= 100.
Duration percentile(std::vector<Duration> samples, double p);

struct Measurement {
    std::vector<Duration> samples;  // one per timed call, warmup excluded
    Duration elapsed{0};            // whole timed loop
};

/// Runs `warmup` untimed calls (cycling through pairs), then one timed call
/// per pair on the calling thread.
Measurement measure(const std::vector<BenchPair>& pairs, const PairCall& call, std::size_t warmup);

/// Feedforward throughput: pairs / elapsed seconds. Latency fields stay empty.
LatencyReport run_throughput(const std::vector<BenchPair>& pairs, const PairCall& scorer,
                             const BenchOptions& opts);

/// Throughput plus p50/p99 of per-request latency through a service client.
LatencyReport run_service_bench(const std::vector<BenchPair>& pairs, const PairCall& request,
                                const BenchOptions& opts);

/// Same, opening a persistent client connection to host:port.
LatencyReport run_service_bench(const std::vector<BenchPair>& pairs, const std::string& host,
                                std::uint16_t port, const BenchOptions& opts);

/// Report from an external evaluator's own timed loop.
LatencyReport report_from_elapsed(std::size_t n_pairs, Duration elapsed, const BenchOptions& opts);

/// Runs a compiled evaluator's `--bench` mode over a pairs file; the
/// evaluator times its own loop so process startup stays outside it.
LatencyReport run_compiled_bench(const std::string& evaluator, const std::string& pairs_path,
                                 const BenchOptions& opts);

/// (direct_qps - service_qps) / direct_qps, as a percentage.
double overhead_percent(double direct_qps, double service_qps);

enum class ReportFormat { kTable, kJsonLines };

/// Table: Machine | Approach | Throughput (QPS) | p50 | p99, blank latency
/// cells for feedforward rows, plus an overhead line when both a "direct" and
/// a "service" report are present. JSON lines: one object per report.
std::string emit_report(const std::vector<LatencyReport>& reports, ReportFormat format);
std::vector<LatencyReport> parse_report_lines(const std::string& text);

struct HostEnvironment {
    std::string cpu_model;
    std::string os;
};
HostEnvironment capture_environment();

}  // namespace rerank
