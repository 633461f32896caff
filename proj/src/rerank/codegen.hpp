#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rerank/model.hpp"

namespace rerank {

struct GenOptions {
    bool emit_service = true;
    bool emit_batch_cli = true;
};

struct GeneratedSource {
    std::map<std::string, std::string> files;  // relative path -> text
    std::string entry_point;

    void write_to(const std::filesystem::path& dir) const;
};

/// Emits a self-contained evaluator program for the bundle: every weight is a
/// literal constant, every loop bound a literal, and the vocabulary, idf
/// table, stopwords and tokenizer are baked in. The program accepts
/// `--score <q> <a>`, `--batch <file>`, `--bench <file> [--warmup N]`, and
/// (with emit_service) `--serve <port> [--host H]`.
GeneratedSource generate_evaluator(const ModelBundle& bundle, const GenOptions& opts = {});

/// Host compiler used for generated code: explicit choice, else $CXX, else the
/// compiler this library was built with, else `c++`. Empty when none is found.
std::string find_host_compiler(const std::string& preferred = {});

/// Compiles the entry point into `binary`. Throws kToolchain with the
/// compiler diagnostics on failure.
void build_evaluator(const GeneratedSource& src, const std::filesystem::path& workdir,
                     const std::filesystem::path& binary, const std::string& compiler);

using TextPair = std::pair<std::string, std::string>;

/// Batch input format: one `question<TAB>answer` per line.
void write_pairs_file(const std::vector<TextPair>& pairs, const std::filesystem::path& path);
std::vector<TextPair> read_pairs_file(const std::filesystem::path& path);

/// Random question/answer texts drawn mostly from the model vocabulary, with
/// some out-of-vocabulary words, stopwords and empty sides mixed in.
std::vector<TextPair> random_text_pairs(const ModelConfig& config, std::size_t n, std::uint64_t seed);

struct ConformanceOptions {
    std::filesystem::path workdir;
    std::string compiler;  // empty: find_host_compiler()
    double tolerance = 1e-6;
};

struct ConformanceReport {
    enum class Status { kPass, kFail, kSkipped };
    Status status = Status::kSkipped;
    std::string reason;
    std::string diagnostics;
    std::size_t n_pairs = 0;
    double max_rel_error = 0.0;
};

const char* to_string(ConformanceReport::Status status);

/// Generates, compiles and runs `--batch` over the pairs, comparing each
/// score against the interpreter. A missing toolchain is a skip.
ConformanceReport compile_and_run_conformance(const ModelBundle& bundle,
                                              const std::vector<TextPair>& pairs,
                                              const ConformanceOptions& opts);

/// Same, over an already generated (possibly hand-modified) source.
ConformanceReport run_conformance(const GeneratedSource& src, const ModelBundle& bundle,
                                  const std::vector<TextPair>& pairs,
                                  const ConformanceOptions& opts);

}  // namespace rerank
