// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <sys/socket.h>

#include "oracles.hpp"
#include "rerank/bench.hpp"
#include "rerank/codegen.hpp"
#include "rerank/error.hpp"
#include "rerank/inference.hpp"
#include "rerank/model.hpp"
#include "rerank/retrieval.hpp"
#include "rerank/service.hpp"
#include "rerank/tensor.hpp"
#include "rerank/textproc.hpp"

using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    enum Kind { kPass, kFail, kSkip } kind = kPass;
    std::string detail;
};

Outcome pass(std::string d) { return {Outcome::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::kFail, std::move(d)}; }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

rerank::ModelConfig scaled_config() {
    // default shape scaled down: d=8, w=5, k=16, hidden 36
    auto cfg = oracle::small_config(8, 5, 16, 36, oracle::letter_vocab(300));
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> df(1, 40);
    cfg.idf.n_docs = 50;
    for (const auto& w : cfg.vocab) cfg.idf.df[w] = df(rng);
    return cfg;
}

class BackgroundServer {
public:
    explicit BackgroundServer(rerank::Scorer scorer)
        : server_(std::move(scorer), "127.0.0.1", 0), thread_([this] { server_.run(); }) {}
    ~BackgroundServer() {
        server_.stop();
        thread_.join();
    }
    std::uint16_t port() const { return server_.port(); }

private:
    rerank::Server server_;
    std::thread thread_;
};

Outcome conv_equivalence() {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> val(-1, 1);
    auto dim = [&](std::size_t hi) { return std::uniform_int_distribution<std::size_t>(1, hi)(rng); };
    double worst = 0;
    const int n = 300;
    for (int t = 0; t < n; ++t) {
        const std::size_t d = dim(8), len = dim(20), w = dim(6), k = dim(8);
        oracle::Matrix x(d, std::vector<double>(len));
        std::vector<double> xf;
        for (auto& row : x)
            for (auto& v : row) v = val(rng);
        for (const auto& row : x) xf.insert(xf.end(), row.begin(), row.end());
        std::vector<oracle::Matrix> filters(k, oracle::Matrix(d, std::vector<double>(w)));
        std::vector<double> ff, bias(k);
        for (auto& f : filters)
            for (auto& row : f)
                for (auto& v : row) v = val(rng);
        for (const auto& f : filters)
            for (const auto& row : f) ff.insert(ff.end(), row.begin(), row.end());
        for (auto& b : bias) b = val(rng);
        const auto got = rerank::conv_wide(rerank::Tensor({d, len}, xf), rerank::Tensor({k, d, w}, ff),
                                           rerank::Tensor({k}, bias));
        const auto want = oracle::direct_wide_conv(x, filters, bias);
        if (got.rows() != k || got.cols() != len + w - 1) return fail(fmt("shape mismatch at instance %d", t));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < len + w - 1; ++j) worst = std::max(worst, std::abs(got.at(i, j) - want[i][j]));
    }
    if (worst > 1e-12) return fail(fmt("max abs error %.3g over %d instances", worst, n));
    return pass(fmt("%d instances, max abs error %.3g", n, worst));
}

Outcome compiler_conformance() {
    const auto bundle = rerank::init_model(scaled_config(), 2024);
    const auto pairs = rerank::random_text_pairs(bundle.config, 1000, 7);
    oracle::TempDir dir("accept_cg");
    rerank::ConformanceOptions opts;
    opts.workdir = dir.path();
    const auto r = rerank::compile_and_run_conformance(bundle, pairs, opts);
    using S = rerank::ConformanceReport::Status;
    if (r.status == S::kSkipped) return {Outcome::kSkip, "no toolchain: " + r.reason};
    const std::string detail = fmt("%zu pairs, max relative error %.3g", r.n_pairs, r.max_rel_error);
    if (r.status != S::kPass || r.n_pairs != 1000 || r.max_rel_error > 1e-6) return fail(detail + " " + r.reason);
    return pass(detail);
}

Outcome service_identity() {
    const rerank::Interpreter model(rerank::init_model(scaled_config(), 5));
    BackgroundServer srv([&](std::string_view q, std::string_view a) { return model.score_text(q, a); });
    rerank::Client client("127.0.0.1", srv.port());
    const auto pairs = rerank::random_text_pairs(model.bundle().config, 500, 11);
    std::size_t mismatches = 0;
    for (const auto& [q, a] : pairs)
        mismatches += oracle::bits(client.get_score(q, a)) != oracle::bits(model.score_text(q, a));
    if (mismatches) return fail(fmt("%zu of 500 scores differ", mismatches));
    return pass("500 pairs bit-identical");
}

Outcome model_round_trip() {
    std::mt19937_64 rng(3);
    auto dim = [&](std::size_t hi) { return std::uniform_int_distribution<std::size_t>(1, hi)(rng); };
    std::uniform_real_distribution<double> val(-10, 10);
    oracle::TempDir dir("accept_model");
    for (int t = 0; t < 20; ++t) {
        auto cfg = oracle::small_config(dim(8), dim(6), dim(8), dim(16), oracle::letter_vocab(dim(30)));
        cfg.idf.n_docs = dim(100);
        for (const auto& w : cfg.vocab) cfg.idf.df[w] = dim(cfg.idf.n_docs);
        auto b = rerank::init_model(cfg, rng());
        // extreme values the text format must carry exactly
        auto& fc = b.params.back().weights;
        fc[0] = -0.0;
        if (fc.size() > 1) fc[1] = std::numeric_limits<double>::denorm_min();
        for (auto& v : b.params[0].weights) v *= val(rng);
        const auto path = dir / ("m" + std::to_string(t) + ".json");
        rerank::save_model(b, path);
        if (!oracle::bit_identical(rerank::load_model(path), b)) return fail(fmt("bundle %d not bit-identical", t));
    }

    const std::string text = rerank::serialize_model(rerank::init_model(oracle::small_config(3, 2, 2, 4), 1));
    auto expect_error = [](const std::string& mutated, rerank::ErrorCode code, const std::string& needle) {
        try {
            rerank::parse_model(mutated);
        } catch (const rerank::Error& e) {
            return e.code() == code && std::string(e.what()).find(needle) != std::string::npos;
        }
        return false;
    };
    auto doc = nlohmann::json::parse(text);
    auto dropped = doc;
    auto& params = dropped["params"];
    params.erase(params.begin() + 2);
    const bool missing = expect_error(dropped.dump(), rerank::ErrorCode::kValidation, "missing parameter conv_q.bias");
    auto reshaped = doc;
    reshaped["params"][5]["dims"] = {4, 3};
    const bool dims = expect_error(reshaped.dump(), rerank::ErrorCode::kShape, "reshape error: parameter fc1.weight");
    auto bumped = doc;
    bumped["format_version"] = 2;
    const bool version = expect_error(bumped.dump(), rerank::ErrorCode::kVersion, "format_version");
    if (!(missing && dims && version))
        return fail(fmt("corruption classes: missing=%d dims=%d version=%d", missing, dims, version));
    return pass("20 bundles bit-identical, 3 corruption classes named");
}

Outcome bm25_oracle() {
    std::mt19937_64 rng(5);
    const std::vector<std::string> terms{"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota", "kappa"};
    std::uniform_int_distribution<std::size_t> pick(0, terms.size() - 1), ndocs(1, 50), dlen(1, 15), qlen(1, 4), h(1, 20);
    std::size_t compared = 0;
    for (int c = 0; c < 50; ++c) {
        std::vector<std::pair<rerank::DocId, std::string>> docs;
        const std::size_t n = ndocs(rng);
        for (std::size_t i = 0; i < n; ++i) {
            std::string text;
            // narrow vocabularies force plenty of exact ties
            for (std::size_t j = dlen(rng) % (c % 3 == 0 ? 3 : 15) + 1; j > 0; --j) text += terms[pick(rng) % (c % 3 == 0 ? 3 : 10)] + " ";
            docs.emplace_back(1000 - 7 * i, text);
        }
        const auto idx = rerank::index_documents(docs);
        rerank::TokenSeq query;
        for (std::size_t i = qlen(rng); i > 0; --i) query.push_back(terms[pick(rng)]);
        const std::size_t depth = h(rng);
        const auto got = rerank::bm25_search(idx, query, depth);
        const auto want = oracle::brute_bm25(docs, query, depth);
        if (got.size() != want.size()) return fail(fmt("corpus %d: %zu results, oracle %zu", c, got.size(), want.size()));
        for (std::size_t i = 0; i < got.size(); ++i) {
            if (got[i].doc_id != want[i].doc || std::abs(got[i].bm25_score - want[i].score) > 1e-12)
                return fail(fmt("corpus %d rank %zu: doc %llu vs %llu", c, i, (unsigned long long)got[i].doc_id,
                                (unsigned long long)want[i].doc));
        }
        compared += got.size();
    }
    return pass(fmt("50 corpora, %zu ranked results match", compared));
}

void zero_prefix(rerank::ModelBundle& b, const std::string& prefix) {
    for (auto& p : b.params)
        if (p.name.rfind(prefix, 0) == 0) std::fill(p.weights.begin(), p.weights.end(), 0.0);
}

Outcome join_structure() {
    std::mt19937_64 rng(6);
    auto dim = [&](std::size_t hi) { return std::uniform_int_distribution<std::size_t>(1, hi)(rng); };
    for (int t = 0; t < 100; ++t) {
        const auto vocab = oracle::letter_vocab(dim(20) + 1);
        auto cfg = oracle::small_config(dim(8), dim(6), dim(8), dim(12), vocab);
        cfg.idf.n_docs = 30;
        for (const auto& w : vocab) cfg.idf.df[w] = dim(30);
        cfg.idf.df["the"] = 25;
        const auto base = rerank::init_model(cfg, rng());
        const std::size_t k = cfg.num_filters;
        const auto q = rerank::tokenize(oracle::random_sentence(rng, vocab));
        const auto a = rerank::tokenize(oracle::random_sentence(rng, vocab));
        const auto full = rerank::Interpreter(base).trace(q, a).join;
        if (full.size() != 2 * k + 4) return fail(fmt("join width %zu, expected %zu", full.size(), 2 * k + 4));

        for (const auto& [prefix, lo] : {std::pair<std::string, std::size_t>{"conv_q.", 0}, {"conv_a.", k}}) {
            auto zeroed = base;
            zero_prefix(zeroed, prefix);
            const auto j = rerank::Interpreter(zeroed).trace(q, a).join;
            for (std::size_t i = 0; i < j.size(); ++i) {
                const bool inside = i >= lo && i < lo + k;
                if (inside ? j[i] != 0.0 : oracle::bits(j[i]) != oracle::bits(full[i]))
                    return fail(fmt("zeroing %s changed index %zu", prefix.c_str(), i));
            }
        }
        const rerank::StopwordSet stop(cfg.stopwords.begin(), cfg.stopwords.end());
        const auto feats = rerank::overlap_features(q, a, cfg.idf, stop);
        for (std::size_t i = 0; i < 4; ++i)
            if (oracle::bits(full[2 * k + i]) != oracle::bits(feats[i])) return fail(fmt("feature %zu differs", i));
    }
    return pass("100 random models: width 2k+4, arm slices isolated, features exact");
}

Outcome score_contract() {
    std::mt19937_64 rng(8);
    auto dim = [&](std::size_t hi) { return std::uniform_int_distribution<std::size_t>(1, hi)(rng); };
    std::size_t zero_fc_checked = 0;
    for (int t = 0; t < 1000; ++t) {
        const auto vocab = oracle::letter_vocab(dim(20) + 1);
        auto b = rerank::init_model(oracle::small_config(dim(8), dim(6), dim(8), dim(16), vocab), rng());
        // widen the weights so saturated logits are exercised too
        const double scale = std::uniform_real_distribution<double>(0.1, 50)(rng);
        for (auto& p : b.params)
            for (auto& v : p.weights) v *= scale;
        const std::string q = oracle::random_sentence(rng, vocab), a = oracle::random_sentence(rng, vocab);
        const double s = rerank::Interpreter(b).score_text(q, a);
        if (!(s >= 0.0 && s <= 1.0)) return fail(fmt("model %d scored %.17g", t, s));
        if (t % 10 == 0) {
            zero_prefix(b, "fc");
            const double half = rerank::Interpreter(b).score_text(q, a);
            if (half != 0.5) return fail(fmt("zero-FC model %d scored %.17g", t, half));
            ++zero_fc_checked;
        }
    }
    return pass(fmt("1000 scores in [0,1], %zu zero-FC models exactly 0.5", zero_fc_checked));
}

Outcome bench_calibration() {
    const std::vector<rerank::BenchPair> pairs(100, {"q", "a"});
    const auto r = rerank::run_service_bench(pairs, [](const rerank::BenchPair&) { std::this_thread::sleep_for(10ms); },
                                             {100, "stub", "", ""});
    const double p50 = r.p50_ms.value_or(-1);
    const std::string detail = fmt("qps %.2f, p50 %.3f ms", r.qps, p50);
    if (!(r.qps >= 80 && r.qps <= 100 && p50 >= 10 && p50 <= 12.5)) return fail(detail);

    int calls = 0;
    const auto slow_first = [&](const rerank::BenchPair&) {
        if (calls++ < 100) std::this_thread::sleep_for(20ms);
    };
    const auto m = rerank::measure(std::vector<rerank::BenchPair>(200, {"q", "a"}), slow_first, 100);
    const auto worst = *std::max_element(m.samples.begin(), m.samples.end());
    if (calls != 300 || m.samples.size() != 200 || worst >= 10ms)
        return fail(detail + fmt(", warmup leak: calls=%d samples=%zu", calls, m.samples.size()));
    return pass(detail + ", warmup excluded");
}

Outcome overhead_report() {
    const rerank::Interpreter model(rerank::init_model(scaled_config(), 13));
    std::vector<rerank::BenchPair> pairs;
    for (auto& p : rerank::random_text_pairs(model.bundle().config, 2000, 17)) pairs.emplace_back(std::move(p));
    const auto direct = rerank::run_throughput(
        pairs, [&](const rerank::BenchPair& p) { (void)model.score_text(p.first, p.second); }, {100, "direct", "", ""});
    rerank::LatencyReport service;
    {
        BackgroundServer srv([&](std::string_view q, std::string_view a) { return model.score_text(q, a); });
        service = rerank::run_service_bench(pairs, "127.0.0.1", srv.port(), {100, "service", "", ""});
    }
    const std::string table = rerank::emit_report({direct, service}, rerank::ReportFormat::kTable);
    std::cout << table;
    const bool printed = table.find("service overhead vs direct: ") != std::string::npos;
    const std::string detail =
        fmt("direct %.1f qps, service %.1f qps, overhead %.2f%%", direct.qps, service.qps,
            rerank::overhead_percent(direct.qps, service.qps));
    if (!(service.qps < direct.qps) || !printed) return fail(detail);
    return pass(detail);
}

Outcome protocol_fuzz() {
    BackgroundServer srv([](std::string_view, std::string_view) { return 0.5; });
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<int> byte(0, 255), mode(0, 9), len(0, 200);
    const std::string valid = rerank::serialize_request({1, "getScore", "what is it", "it is this"});
    std::size_t errors = 0, disconnects = 0, results = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        rerank::Socket s = rerank::connect_tcp("127.0.0.1", srv.port());
        const int m = mode(rng);
        std::string payload;
        if (m < 5) {
            payload.resize(len(rng));
            for (auto& ch : payload) ch = static_cast<char>(byte(rng));
        } else if (m < 8) {
            // structured near-misses: a valid request with a few bytes mutated
            payload = valid;
            for (int f = 1 + i % 3; f > 0; --f) payload[std::uniform_int_distribution<std::size_t>(0, payload.size() - 1)(rng)] = static_cast<char>(byte(rng));
        } else if (m == 8) {
            // oversized length header, no body
            const std::uint32_t big = (1u << 20) + 1 + static_cast<std::uint32_t>(len(rng));
            payload = {static_cast<char>(big >> 24), static_cast<char>(big >> 16), static_cast<char>(big >> 8),
                       static_cast<char>(big)};
        } else {
            // truncated frame: header promises more than arrives before EOF
            payload = rerank::encode_frame(valid).substr(0, 4 + i % 20);
        }
        try {
            if (m < 8) rerank::write_frame(s, payload);
            else rerank::send_all(s, payload);
            if (m == 9) ::shutdown(s.fd(), SHUT_WR);
            const auto reply = rerank::read_frame(s);
            if (!reply) {
                ++disconnects;
                continue;
            }
            const auto resp = rerank::parse_response(*reply);
            if (resp.error) {
                ++errors;
            } else {
                // a mutation that left the request valid
                const auto parsed = rerank::parse_request(payload);
                if (!parsed.request) return fail(fmt("frame %d answered with a result but is not a valid request", i));
                ++results;
            }
        } catch (const rerank::Error&) {
            ++disconnects;  // reset by peer
        }
    }
    rerank::Client probe("127.0.0.1", srv.port());
    if (probe.get_score("still", "alive") != 0.5) return fail("server not answering after fuzzing");
    return pass(fmt("%d frames: %zu error responses, %zu disconnects, %zu valid; server alive", n, errors, disconnects,
                    results));
}

}  // namespace

int main() {
    std::signal(SIGPIPE, SIG_IGN);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"convolution equivalence", conv_equivalence},
        {"interpreter/compiler conformance", compiler_conformance},
        {"service round-trip identity", service_identity},
        {"model round-trip", model_round_trip},
        {"BM25 oracle", bm25_oracle},
        {"join-layer structure", join_structure},
        {"softmax/score contract", score_contract},
        {"benchmark calibration", bench_calibration},
        {"overhead measurement", overhead_report},
        {"protocol robustness", protocol_fuzz},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = Clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        const char* tag = o.kind == Outcome::kPass ? "PASS" : o.kind == Outcome::kFail ? "FAIL" : "SKIP";
        failures += o.kind == Outcome::kFail;
        std::printf("%s criterion %zu (%s): %s [%.2fs]\n", tag, i + 1, criteria[i].first.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures ? 1 : 0;
}
