// rerankd: command-line front end over the rerank C API.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rerank.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Failure {
    rr_status status;
    std::string message;
};

void check(rr_status status) {
    if (status != RR_OK) throw Failure{status, rr_last_error()};
}

// RAII over C handles.
template <typename T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() {
        if (ptr) Free(ptr);
    }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using Model = Handle<rr_model, rr_model_free>;
using Index = Handle<rr_index, rr_index_free>;
using Answers = Handle<rr_answers, rr_answers_free>;
using Server = Handle<rr_server, rr_server_free>;
using Reports = Handle<rr_reports, rr_reports_free>;

std::string take(char* s) {
    std::string out = s ? s : "";
    rr_string_free(s);
    return out;
}

std::pair<std::string, uint16_t> split_endpoint(const std::string& endpoint) {
    std::string host = "127.0.0.1", port = endpoint;
    if (auto colon = endpoint.rfind(':'); colon != std::string::npos) {
        host = endpoint.substr(0, colon);
        port = endpoint.substr(colon + 1);
    }
    char* end = nullptr;
    const unsigned long value = std::strtoul(port.c_str(), &end, 10);
    if (port.empty() || *end != '\0' || value > 65535 || host.empty()) {
        throw CLI::ValidationError("--endpoint", "expected host:port, got '" + endpoint + "'");
    }
    return {host, static_cast<uint16_t>(value)};
}

rr_server* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) rr_server_stop(g_server);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rerankd: BM25 retrieval plus CNN answer reranking"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "Print this help message and exit");

    // index
    std::string corpus, out_path;
    auto* index_cmd = app.add_subcommand("index", "Build a BM25 index from a corpus file");
    index_cmd->add_option("--corpus", corpus, "doc_id<TAB>text per line")->required();
    index_cmd->add_option("--out", out_path, "index file to write")->required();

    // ask
    std::string index_path, model_path, question, answer;
    std::size_t depth = 10, top_n = 5;
    auto* ask_cmd = app.add_subcommand("ask", "Answer a question against an index");
    auto* ask_index = ask_cmd->add_option("--index", index_path, "index file from `rerankd index`");
    auto* ask_corpus = ask_cmd->add_option("--corpus", corpus, "corpus file (indexed on the fly)");
    ask_index->excludes(ask_corpus);
    ask_cmd->add_option("--model", model_path, "model file")->required();
    ask_cmd->add_option("--question", question)->required();
    ask_cmd->add_option("--depth,--h", depth, "documents to retrieve")->capture_default_str()->check(CLI::PositiveNumber);
    ask_cmd->add_option("--top-n", top_n, "answers to print")->capture_default_str()->check(CLI::PositiveNumber);

    // init-model
    rr_model_config config;
    rr_model_config_default(&config);
    std::size_t hidden = 0;
    uint64_t seed = 42;
    auto* init_cmd = app.add_subcommand("init-model", "Write a model with deterministic weights");
    init_cmd->add_option("--out", out_path, "model file to write")->required();
    init_cmd->add_option("--corpus", corpus, "corpus for vocabulary and idf statistics");
    init_cmd->add_option("--seed", seed)->capture_default_str();
    init_cmd->add_option("--embed-dim", config.embed_dim)->capture_default_str()->check(CLI::PositiveNumber);
    init_cmd->add_option("--filter-width", config.filter_width)->capture_default_str()->check(CLI::PositiveNumber);
    init_cmd->add_option("--num-filters", config.num_filters)->capture_default_str()->check(CLI::PositiveNumber);
    init_cmd->add_option("--hidden-size", hidden, "default 2*num_filters+4")->check(CLI::PositiveNumber);
    init_cmd->add_option("--max-vocab", config.max_vocab, "0 keeps every term")->capture_default_str();

    // score
    auto* score_cmd = app.add_subcommand("score", "Score one question/answer pair");
    score_cmd->add_option("--model", model_path)->required();
    score_cmd->add_option("--question", question)->required();
    score_cmd->add_option("--answer", answer)->required();

    // serve
    std::string host = "127.0.0.1";
    int port = -1;
    auto* serve_cmd = app.add_subcommand("serve", "Serve getScore over the framed wire protocol");
    serve_cmd->add_option("--model", model_path)->required();
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port, "default $RERANKD_PORT or 9090")->check(CLI::Range(0, 65535));

    // compile
    bool no_service = false, no_batch = false, build = false;
    std::string compiler, pairs_path;
    std::size_t conformance = 0;
    auto* compile_cmd = app.add_subcommand("compile", "Generate a standalone evaluator with baked-in weights");
    compile_cmd->add_option("--model", model_path)->required();
    compile_cmd->add_option("--out", out_path, "output directory")->required();
    compile_cmd->add_flag("--no-service", no_service, "omit --serve from the evaluator");
    compile_cmd->add_flag("--no-batch", no_batch, "omit --batch/--bench from the evaluator");
    compile_cmd->add_flag("--build", build, "also compile the evaluator");
    compile_cmd->add_option("--compiler", compiler, "C++ compiler (default $CXX or c++)");
    compile_cmd->add_option("--conformance", conformance, "check N random pairs against the interpreter");
    compile_cmd->add_option("--conformance-pairs", pairs_path, "check pairs from a question<TAB>answer file");
    compile_cmd->add_option("--seed", seed, "seed for --conformance pairs")->capture_default_str();

    // bench
    std::vector<std::string> modes;
    std::string endpoint, evaluator, format = "table", label_machine;
    std::size_t warmup = 100;
    auto* bench_cmd = app.add_subcommand("bench", "Measure throughput and latency");
    bench_cmd->add_option("--pairs", pairs_path, "question<TAB>answer per line")->required();
    bench_cmd->add_option("--mode", modes, "direct, service, compiled (comma-separated for several)")
        ->delimiter(',')
        ->required()
        ->check(CLI::IsMember({"direct", "service", "compiled"}));
    bench_cmd->add_option("--model", model_path, "model file (direct mode, or service without --endpoint)");
    bench_cmd->add_option("--endpoint", endpoint, "host:port of a running server (service mode)");
    bench_cmd->add_option("--evaluator", evaluator, "compiled evaluator binary (compiled mode)");
    bench_cmd->add_option("--warmup", warmup)->capture_default_str();
    bench_cmd->add_option("--format", format)->capture_default_str()->check(CLI::IsMember({"table", "json-lines"}));

    auto* stop_cmd = app.add_subcommand("dump-stopwords", "Print the built-in stopword list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*index_cmd) {
            Index index;
            check(rr_index_build(corpus.c_str(), index.out()));
            check(rr_index_save(index.get(), out_path.c_str()));
            std::cerr << "indexed " << rr_index_size(index.get()) << " documents into " << out_path << "\n";
        } else if (*ask_cmd) {
            if (index_path.empty() && corpus.empty()) {
                std::cerr << "error: ask needs --index or --corpus\n";
                return kExitUsage;
            }
            Index index;
            if (!index_path.empty()) {
                check(rr_index_load(index_path.c_str(), index.out()));
            } else {
                check(rr_index_build(corpus.c_str(), index.out()));
            }
            Model model;
            check(rr_model_load(model_path.c_str(), model.out()));
            Answers answers;
            check(rr_ask(index.get(), model.get(), question.c_str(), depth, top_n, answers.out()));
            char* text = nullptr;
            check(rr_answers_format(answers.get(), &text));
            std::cout << take(text);
        } else if (*init_cmd) {
            config.hidden_size = hidden ? hidden : 2 * config.num_filters + 4;
            Model model;
            check(rr_model_init(&config, corpus.empty() ? nullptr : corpus.c_str(), seed, model.out()));
            check(rr_model_save(model.get(), out_path.c_str()));
        } else if (*score_cmd) {
            Model model;
            check(rr_model_load(model_path.c_str(), model.out()));
            double score = 0.0;
            check(rr_model_score(model.get(), question.c_str(), answer.c_str(), &score));
            std::printf("%.17g\n", score);
        } else if (*serve_cmd) {
            Model model;
            check(rr_model_load(model_path.c_str(), model.out()));
            Server server;
            const uint16_t p = port >= 0 ? static_cast<uint16_t>(port) : rr_default_port();
            check(rr_server_create(model.get(), host.c_str(), p, server.out()));
            g_server = server.get();
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "listening " << rr_server_port(server.get()) << std::endl;
            check(rr_server_run(server.get()));
            g_server = nullptr;
        } else if (*compile_cmd) {
            Model model;
            check(rr_model_load(model_path.c_str(), model.out()));
            unsigned flags = (no_service ? 0u : unsigned{RR_EMIT_SERVICE}) | (no_batch ? 0u : unsigned{RR_EMIT_BATCH});
            if (flags == 0) {
                std::cerr << "error: --no-service and --no-batch leave nothing to emit\n";
                return kExitUsage;
            }
            if (build) {
                char* binary = nullptr;
                check(rr_codegen_build(model.get(), flags, out_path.c_str(),
                                       compiler.empty() ? nullptr : compiler.c_str(), &binary));
                std::cout << take(binary) << "\n";
            } else {
                check(rr_codegen_emit(model.get(), flags, out_path.c_str()));
                std::cout << out_path << "/evaluator.cpp\n";
            }
            if (conformance > 0 || !pairs_path.empty()) {
                rr_conformance_report report{};
                char* diag = nullptr;
                const std::string workdir = out_path + "/conformance";
                check(rr_codegen_conformance(model.get(), pairs_path.empty() ? nullptr : pairs_path.c_str(),
                                             conformance, seed, workdir.c_str(),
                                             compiler.empty() ? nullptr : compiler.c_str(), &report, &diag));
                const std::string diagnostics = take(diag);
                const char* status = report.status == RR_CONFORMANCE_PASS   ? "pass"
                                     : report.status == RR_CONFORMANCE_FAIL ? "fail"
                                                                            : "skipped";
                std::cout << "conformance " << status << " pairs=" << report.n_pairs
                          << " max_rel_error=" << report.max_rel_error;
                if (report.reason[0]) std::cout << " reason=\"" << report.reason << "\"";
                std::cout << "\n";
                if (!diagnostics.empty()) std::cerr << diagnostics;
                if (report.status == RR_CONFORMANCE_FAIL) return kExitRuntime;
            }
        } else if (*bench_cmd) {
            Reports reports;
            check(rr_reports_create(reports.out()));
            Model model;
            auto need_model = [&] {
                if (model.get()) return;
                if (model_path.empty()) throw CLI::RequiredError("--model");
                check(rr_model_load(model_path.c_str(), model.out()));
            };
            for (const auto& mode : modes) {
                if (mode == "direct") {
                    need_model();
                    check(rr_bench_direct(model.get(), pairs_path.c_str(), warmup, nullptr, reports.get()));
                } else if (mode == "service") {
                    if (!endpoint.empty()) {
                        auto [h, p] = split_endpoint(endpoint);
                        check(rr_bench_service(h.c_str(), p, pairs_path.c_str(), warmup, nullptr, reports.get()));
                    } else {
                        // No endpoint: serve the model from a background thread on an ephemeral port.
                        need_model();
                        Server server;
                        check(rr_server_create(model.get(), "127.0.0.1", 0, server.out()));
                        std::thread serving([&] { rr_server_run(server.get()); });
                        const rr_status st = rr_bench_service("127.0.0.1", rr_server_port(server.get()),
                                                              pairs_path.c_str(), warmup, nullptr, reports.get());
                        const std::string err = st == RR_OK ? "" : rr_last_error();
                        rr_server_stop(server.get());
                        serving.join();
                        if (st != RR_OK) throw Failure{st, err};
                    }
                } else {
                    if (evaluator.empty()) throw CLI::RequiredError("--evaluator");
                    check(rr_bench_compiled(evaluator.c_str(), pairs_path.c_str(), warmup, nullptr, reports.get()));
                }
            }
            char* text = nullptr;
            check(rr_reports_format(reports.get(), format == "table" ? RR_FORMAT_TABLE : RR_FORMAT_JSON_LINES,
                                    &text));
            std::cout << take(text);
        } else if (*stop_cmd) {
            char* text = nullptr;
            check(rr_stopwords_dump(&text));
            std::cout << take(text);
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Failure& f) {
        std::cerr << "error: " << rr_status_string(f.status) << ": " << f.message << "\n";
        return kExitRuntime;
    }
    return 0;
}
