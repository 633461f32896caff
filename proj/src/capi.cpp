#include "rerank.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rerank/bench.hpp"
#include "rerank/codegen.hpp"
#include "rerank/error.hpp"
#include "rerank/inference.hpp"
#include "rerank/model.hpp"
#include "rerank/pipeline.hpp"
#include "rerank/retrieval.hpp"
#include "rerank/service.hpp"

struct rr_model {
    rerank::Interpreter interp;
};

struct rr_index {
    rerank::InvertedIndex index;
};

struct rr_answers {
    std::vector<rerank::ScoredCandidate> items;
};

struct rr_server {
    rerank::Server server;
};

struct rr_client {
    rerank::Client client;
};

struct rr_reports {
    std::vector<rerank::LatencyReport> items;
};

namespace {

thread_local std::string g_last_error;

rr_status to_status(rerank::ErrorCode code) {
    using rerank::ErrorCode;
    switch (code) {
        case ErrorCode::kArgument:   return RR_ERR_ARGUMENT;
        case ErrorCode::kShape:      return RR_ERR_SHAPE;
        case ErrorCode::kValidation: return RR_ERR_VALIDATION;
        case ErrorCode::kIo:         return RR_ERR_IO;
        case ErrorCode::kVersion:    return RR_ERR_VERSION;
        case ErrorCode::kTransport:  return RR_ERR_TRANSPORT;
        case ErrorCode::kProtocol:   return RR_ERR_PROTOCOL;
        case ErrorCode::kRemote:     return RR_ERR_REMOTE;
        case ErrorCode::kToolchain:  return RR_ERR_TOOLCHAIN;
    }
    return RR_ERR_INTERNAL;
}

template <typename F>
rr_status guarded(F&& body) {
    try {
        body();
        return RR_OK;
    } catch (const rerank::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return RR_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RR_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown exception";
        return RR_ERR_INTERNAL;
    }
}

template <typename... Ptrs>
void require(const char* fn, const Ptrs*... ptrs) {
    if (((ptrs == nullptr) || ...)) rerank::fail(rerank::ErrorCode::kArgument, std::string(fn) + ": null argument");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

rerank::BenchOptions bench_options(size_t warmup, const char* label, const char* mode) {
    rerank::BenchOptions opts;
    opts.warmup = warmup;
    opts.approach = label ? label : mode;
    return opts;
}

}  // namespace

extern "C" {

const char* rr_version(void) { return "0.1.0"; }

const char* rr_status_string(rr_status status) {
    switch (status) {
        case RR_OK:             return "ok";
        case RR_ERR_ARGUMENT:   return "argument error";
        case RR_ERR_SHAPE:      return "shape error";
        case RR_ERR_VALIDATION: return "validation error";
        case RR_ERR_IO:         return "I/O error";
        case RR_ERR_VERSION:    return "version error";
        case RR_ERR_TRANSPORT:  return "transport error";
        case RR_ERR_PROTOCOL:   return "protocol error";
        case RR_ERR_REMOTE:     return "remote error";
        case RR_ERR_TOOLCHAIN:  return "toolchain error";
        case RR_ERR_INTERNAL:   return "internal error";
    }
    return "unknown status";
}

const char* rr_last_error(void) { return g_last_error.c_str(); }

void rr_string_free(char* s) { std::free(s); }

rr_status rr_stopwords_dump(char** out) {
    return guarded([&] {
        require("rr_stopwords_dump", out);
        std::string text;
        for (const auto& w : rerank::default_stopwords()) text += w + "\n";
        *out = dup_string(text);
    });
}

void rr_model_config_default(rr_model_config* config) {
    if (!config) return;
    const rerank::ModelConfig d;
    config->embed_dim = d.embed_dim;
    config->filter_width = d.filter_width;
    config->num_filters = d.num_filters;
    config->hidden_size = d.hidden_size;
    config->max_vocab = 0;
}

rr_status rr_model_init(const rr_model_config* config, const char* corpus_path, uint64_t seed,
                        rr_model** out) {
    return guarded([&] {
        require("rr_model_init", config, out);
        rerank::ModelConfig c;
        c.embed_dim = config->embed_dim;
        c.filter_width = config->filter_width;
        c.num_filters = config->num_filters;
        c.hidden_size = config->hidden_size;
        std::vector<std::pair<rerank::DocId, std::string>> docs;
        if (corpus_path) docs = rerank::read_corpus(corpus_path);
        auto bundle = rerank::init_model_from_corpus(docs, c, seed, config->max_vocab);
        *out = new rr_model{rerank::Interpreter(std::move(bundle))};
    });
}

rr_status rr_model_load(const char* path, rr_model** out) {
    return guarded([&] {
        require("rr_model_load", path, out);
        *out = new rr_model{rerank::Interpreter(rerank::load_model(path))};
    });
}

rr_status rr_model_save(const rr_model* model, const char* path) {
    return guarded([&] {
        require("rr_model_save", model, path);
        rerank::save_model(model->interp.bundle(), path);
    });
}

rr_status rr_model_describe(const rr_model* model, rr_model_config* config, size_t* vocab_size) {
    return guarded([&] {
        require("rr_model_describe", model);
        const auto& c = model->interp.bundle().config;
        if (config) {
            config->embed_dim = c.embed_dim;
            config->filter_width = c.filter_width;
            config->num_filters = c.num_filters;
            config->hidden_size = c.hidden_size;
            config->max_vocab = c.vocab.size();
        }
        if (vocab_size) *vocab_size = c.vocab.size();
    });
}

void rr_model_free(rr_model* model) { delete model; }

rr_status rr_model_score(const rr_model* model, const char* question, const char* answer, double* score) {
    return guarded([&] {
        require("rr_model_score", model, question, answer, score);
        *score = model->interp.score_text(question, answer);
    });
}

rr_status rr_index_build(const char* corpus_path, rr_index** out) {
    return guarded([&] {
        require("rr_index_build", corpus_path, out);
        *out = new rr_index{rerank::index_documents(rerank::read_corpus(corpus_path))};
    });
}

rr_status rr_index_load(const char* path, rr_index** out) {
    return guarded([&] {
        require("rr_index_load", path, out);
        *out = new rr_index{rerank::load_index(path)};
    });
}

rr_status rr_index_save(const rr_index* index, const char* path) {
    return guarded([&] {
        require("rr_index_save", index, path);
        rerank::save_index(index->index, path);
    });
}

size_t rr_index_size(const rr_index* index) { return index ? index->index.n_docs : 0; }

void rr_index_free(rr_index* index) { delete index; }

rr_status rr_ask(const rr_index* index, const rr_model* model, const char* question, size_t h,
                 size_t top_n, rr_answers** out) {
    return guarded([&] {
        require("rr_ask", index, model, question, out);
        *out = new rr_answers{rerank::ask(index->index, model->interp, question, h, top_n)};
    });
}

size_t rr_answers_count(const rr_answers* answers) { return answers ? answers->items.size() : 0; }

rr_status rr_answers_get(const rr_answers* answers, size_t i, uint64_t* doc_id, size_t* sentence_index,
                         double* score, const char** text) {
    return guarded([&] {
        require("rr_answers_get", answers);
        if (i >= answers->items.size()) rerank::fail(rerank::ErrorCode::kArgument, "answer index out of range");
        const auto& a = answers->items[i];
        if (doc_id) *doc_id = a.candidate.doc_id;
        if (sentence_index) *sentence_index = a.candidate.sentence_index;
        if (score) *score = a.score;
        if (text) *text = a.candidate.text.c_str();
    });
}

rr_status rr_answers_format(const rr_answers* answers, char** out) {
    return guarded([&] {
        require("rr_answers_format", answers, out);
        *out = dup_string(rerank::format_answers(answers->items));
    });
}

void rr_answers_free(rr_answers* answers) { delete answers; }

rr_status rr_server_create(const rr_model* model, const char* host, uint16_t port, rr_server** out) {
    return guarded([&] {
        require("rr_server_create", model, host, out);
        const rerank::Interpreter* interp = &model->interp;
        *out = new rr_server{rerank::Server(
            [interp](std::string_view q, std::string_view a) { return interp->score_text(q, a); }, host,
            port)};
    });
}

uint16_t rr_server_port(const rr_server* server) { return server ? server->server.port() : 0; }

rr_status rr_server_run(rr_server* server) {
    return guarded([&] {
        require("rr_server_run", server);
        server->server.run();
    });
}

void rr_server_stop(rr_server* server) {
    if (server) server->server.stop();
}

void rr_server_free(rr_server* server) { delete server; }

uint16_t rr_default_port(void) {
    try {
        return rerank::default_port();
    } catch (...) {
        return rerank::kDefaultPort;
    }
}

rr_status rr_client_connect(const char* host, uint16_t port, rr_client** out) {
    return guarded([&] {
        require("rr_client_connect", host, out);
        *out = new rr_client{rerank::Client(host, port)};
    });
}

rr_status rr_client_get_score(rr_client* client, const char* question, const char* answer, double* score) {
    return guarded([&] {
        require("rr_client_get_score", client, question, answer, score);
        *score = client->client.get_score(question, answer);
    });
}

void rr_client_free(rr_client* client) { delete client; }

rr_status rr_codegen_emit(const rr_model* model, unsigned flags, const char* out_dir) {
    return guarded([&] {
        require("rr_codegen_emit", model, out_dir);
        rerank::GenOptions opts{(flags & RR_EMIT_SERVICE) != 0, (flags & RR_EMIT_BATCH) != 0};
        rerank::generate_evaluator(model->interp.bundle(), opts).write_to(out_dir);
    });
}

rr_status rr_codegen_build(const rr_model* model, unsigned flags, const char* out_dir, const char* compiler,
                           char** binary_path) {
    return guarded([&] {
        require("rr_codegen_build", model, out_dir);
        rerank::GenOptions opts{(flags & RR_EMIT_SERVICE) != 0, (flags & RR_EMIT_BATCH) != 0};
        const auto src = rerank::generate_evaluator(model->interp.bundle(), opts);
        const std::string cxx = rerank::find_host_compiler(compiler ? compiler : "");
        if (cxx.empty()) rerank::fail(rerank::ErrorCode::kToolchain, "no C++ compiler found (set CXX)");
        const auto binary = std::filesystem::path(out_dir) / "evaluator";
        rerank::build_evaluator(src, out_dir, binary, cxx);
        if (binary_path) *binary_path = dup_string(binary.string());
    });
}

rr_status rr_codegen_conformance(const rr_model* model, const char* pairs_path, size_t n_random, uint64_t seed,
                                 const char* workdir, const char* compiler, rr_conformance_report* report,
                                 char** diagnostics) {
    return guarded([&] {
        require("rr_codegen_conformance", model, workdir, report);
        const auto& bundle = model->interp.bundle();
        const auto pairs = pairs_path ? rerank::read_pairs_file(pairs_path)
                                      : rerank::random_text_pairs(bundle.config, n_random, seed);
        rerank::ConformanceOptions opts;
        opts.workdir = workdir;
        opts.compiler = compiler ? compiler : "";
        const auto r = rerank::compile_and_run_conformance(bundle, pairs, opts);
        using S = rerank::ConformanceReport::Status;
        report->status = r.status == S::kPass ? RR_CONFORMANCE_PASS
                         : r.status == S::kFail ? RR_CONFORMANCE_FAIL
                                                : RR_CONFORMANCE_SKIPPED;
        report->n_pairs = r.n_pairs;
        report->max_rel_error = r.max_rel_error;
        std::snprintf(report->reason, sizeof report->reason, "%s", r.reason.c_str());
        if (diagnostics) *diagnostics = dup_string(r.diagnostics);
    });
}

rr_status rr_reports_create(rr_reports** out) {
    return guarded([&] {
        require("rr_reports_create", out);
        *out = new rr_reports{};
    });
}

size_t rr_reports_count(const rr_reports* reports) { return reports ? reports->items.size() : 0; }

void rr_reports_free(rr_reports* reports) { delete reports; }

rr_status rr_bench_direct(const rr_model* model, const char* pairs_path, size_t warmup, const char* label,
                          rr_reports* reports) {
    return guarded([&] {
        require("rr_bench_direct", model, pairs_path, reports);
        const auto pairs = rerank::read_pairs_file(pairs_path);
        const rerank::Interpreter& interp = model->interp;
        volatile double sink = 0.0;
        reports->items.push_back(rerank::run_throughput(
            pairs, [&](const rerank::BenchPair& p) { sink = sink + interp.score_text(p.first, p.second); },
            bench_options(warmup, label, "direct")));
    });
}

rr_status rr_bench_service(const char* host, uint16_t port, const char* pairs_path, size_t warmup,
                           const char* label, rr_reports* reports) {
    return guarded([&] {
        require("rr_bench_service", host, pairs_path, reports);
        reports->items.push_back(rerank::run_service_bench(rerank::read_pairs_file(pairs_path), host, port,
                                                           bench_options(warmup, label, "service")));
    });
}

rr_status rr_bench_compiled(const char* evaluator_path, const char* pairs_path, size_t warmup,
                            const char* label, rr_reports* reports) {
    return guarded([&] {
        require("rr_bench_compiled", evaluator_path, pairs_path, reports);
        reports->items.push_back(
            rerank::run_compiled_bench(evaluator_path, pairs_path, bench_options(warmup, label, "compiled")));
    });
}

rr_status rr_reports_format(const rr_reports* reports, int format, char** out) {
    return guarded([&] {
        require("rr_reports_format", reports, out);
        if (format != RR_FORMAT_TABLE && format != RR_FORMAT_JSON_LINES) {
            rerank::fail(rerank::ErrorCode::kArgument, "unknown report format");
        }
        *out = dup_string(rerank::emit_report(reports->items, format == RR_FORMAT_TABLE
                                                                  ? rerank::ReportFormat::kTable
                                                                  : rerank::ReportFormat::kJsonLines));
    });
}

}  // extern "C"
