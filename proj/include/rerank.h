/*
 * rerank: multi-stage question answering with a two-arm CNN reranker.
 *
 * Plain C interface over the C++ core. Every object is an opaque handle
 * created by an rr_*_create/load/init call and released by the matching
 * rr_*_free. Fallible calls return rr_status; on failure rr_last_error()
 * describes the problem (thread-local, valid until the next failing call on
 * the same thread). Strings returned through char** are owned by the caller
 * and released with rr_string_free.
 */
#ifndef RERANK_H
#define RERANK_H

#include <stddef.h>
#include <stdint.h>

#if defined(RR_BUILDING_LIBRARY)
#define RR_API __attribute__((visibility("default")))
#else
#define RR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rr_status {
    RR_OK = 0,
    RR_ERR_ARGUMENT = 1,
    RR_ERR_SHAPE = 2,
    RR_ERR_VALIDATION = 3,
    RR_ERR_IO = 4,
    RR_ERR_VERSION = 5,
    RR_ERR_TRANSPORT = 6,
    RR_ERR_PROTOCOL = 7,
    RR_ERR_REMOTE = 8,
    RR_ERR_TOOLCHAIN = 9,
    RR_ERR_INTERNAL = 10
} rr_status;

RR_API const char* rr_version(void);
RR_API const char* rr_status_string(rr_status status);
RR_API const char* rr_last_error(void);
RR_API void rr_string_free(char* s);

/* Built-in stopword list, one term per line, sorted. */
RR_API rr_status rr_stopwords_dump(char** out);

/* ---- models ------------------------------------------------------------ */

typedef struct rr_model rr_model;

typedef struct rr_model_config {
    size_t embed_dim;
    size_t filter_width;
    size_t num_filters;
    size_t hidden_size;
    size_t max_vocab; /* 0: keep every corpus term */
} rr_model_config;

/* d=50, w=5, k=100, hidden=2k+4, unlimited vocabulary. */
RR_API void rr_model_config_default(rr_model_config* config);

/* Deterministic weights from seed. With a corpus (doc_id<TAB>text lines) the
 * vocabulary and idf table are built from it; corpus_path may be NULL. */
RR_API rr_status rr_model_init(const rr_model_config* config, const char* corpus_path, uint64_t seed,
                               rr_model** out);
RR_API rr_status rr_model_load(const char* path, rr_model** out);
RR_API rr_status rr_model_save(const rr_model* model, const char* path);
RR_API rr_status rr_model_describe(const rr_model* model, rr_model_config* config, size_t* vocab_size);
RR_API void rr_model_free(rr_model* model);

/* Relevance score in [0, 1] of answer for question. */
RR_API rr_status rr_model_score(const rr_model* model, const char* question, const char* answer,
                                double* score);

/* ---- retrieval and the end-to-end pipeline ---------------------------- */

typedef struct rr_index rr_index;

RR_API rr_status rr_index_build(const char* corpus_path, rr_index** out);
RR_API rr_status rr_index_load(const char* path, rr_index** out);
RR_API rr_status rr_index_save(const rr_index* index, const char* path);
RR_API size_t rr_index_size(const rr_index* index);
RR_API void rr_index_free(rr_index* index);

typedef struct rr_answers rr_answers;

/* Retrieve h documents, split into sentences, rerank, keep top_n. */
RR_API rr_status rr_ask(const rr_index* index, const rr_model* model, const char* question, size_t h,
                        size_t top_n, rr_answers** out);
RR_API size_t rr_answers_count(const rr_answers* answers);
/* text stays valid for the lifetime of answers. */
RR_API rr_status rr_answers_get(const rr_answers* answers, size_t i, uint64_t* doc_id,
                                size_t* sentence_index, double* score, const char** text);
/* rank<TAB>score<TAB>doc_id<TAB>sentence_index<TAB>text lines. */
RR_API rr_status rr_answers_format(const rr_answers* answers, char** out);
RR_API void rr_answers_free(rr_answers* answers);

/* ---- getScore service ------------------------------------------------- */

typedef struct rr_server rr_server;

/* Binds immediately; port 0 picks an ephemeral port. The model must outlive
 * the server. */
RR_API rr_status rr_server_create(const rr_model* model, const char* host, uint16_t port,
                                  rr_server** out);
RR_API uint16_t rr_server_port(const rr_server* server);
/* Blocks serving one connection at a time until rr_server_stop. */
RR_API rr_status rr_server_run(rr_server* server);
/* Async-signal-safe. */
RR_API void rr_server_stop(rr_server* server);
RR_API void rr_server_free(rr_server* server);

/* RERANKD_PORT when set, else 9090. */
RR_API uint16_t rr_default_port(void);

typedef struct rr_client rr_client;

RR_API rr_status rr_client_connect(const char* host, uint16_t port, rr_client** out);
RR_API rr_status rr_client_get_score(rr_client* client, const char* question, const char* answer,
                                     double* score);
RR_API void rr_client_free(rr_client* client);

/* ---- compiled evaluator ----------------------------------------------- */

enum { RR_EMIT_SERVICE = 1u, RR_EMIT_BATCH = 2u };

/* Writes the generated evaluator source into out_dir. */
RR_API rr_status rr_codegen_emit(const rr_model* model, unsigned flags, const char* out_dir);
/* Emits and compiles; *binary_path receives the executable's path. compiler
 * may be NULL to use the host default. */
RR_API rr_status rr_codegen_build(const rr_model* model, unsigned flags, const char* out_dir,
                                  const char* compiler, char** binary_path);

typedef enum rr_conformance_status {
    RR_CONFORMANCE_PASS = 0,
    RR_CONFORMANCE_FAIL = 1,
    RR_CONFORMANCE_SKIPPED = 2
} rr_conformance_status;

typedef struct rr_conformance_report {
    rr_conformance_status status;
    size_t n_pairs;
    double max_rel_error;
    char reason[256];
} rr_conformance_report;

/* Compares compiled and interpreted scores at relative tolerance 1e-6. Pairs
 * come from pairs_path (question<TAB>answer lines) or, when NULL, n_random
 * generated pairs. *diagnostics (may be NULL) receives compiler output. */
RR_API rr_status rr_codegen_conformance(const rr_model* model, const char* pairs_path, size_t n_random,
                                        uint64_t seed, const char* workdir, const char* compiler,
                                        rr_conformance_report* report, char** diagnostics);

/* ---- benchmark harness ------------------------------------------------ */

typedef struct rr_reports rr_reports;

RR_API rr_status rr_reports_create(rr_reports** out);
RR_API size_t rr_reports_count(const rr_reports* reports);
RR_API void rr_reports_free(rr_reports* reports);

/* label: approach column; NULL uses the mode name (direct/service/compiled). */
RR_API rr_status rr_bench_direct(const rr_model* model, const char* pairs_path, size_t warmup,
                                 const char* label, rr_reports* reports);
RR_API rr_status rr_bench_service(const char* host, uint16_t port, const char* pairs_path, size_t warmup,
                                  const char* label, rr_reports* reports);
RR_API rr_status rr_bench_compiled(const char* evaluator_path, const char* pairs_path, size_t warmup,
                                   const char* label, rr_reports* reports);

enum { RR_FORMAT_TABLE = 0, RR_FORMAT_JSON_LINES = 1 };
RR_API rr_status rr_reports_format(const rr_reports* reports, int format, char** out);

#ifdef __cplusplus
}
#endif

#endif /* RERANK_H */
