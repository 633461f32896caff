#include "rerank/codegen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "rerank/error.hpp"
#include "rerank/inference.hpp"
#include "rerank/process.hpp"

namespace rerank {

namespace {

#include "rerank/codegen_runtime.inc"

// Shortest round-trip decimal, forced to read as a floating literal.
std::string double_literal(double v) {
    std::string s = shortest_repr(v);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

std::string string_literal(std::string_view s) {
    std::string out = "\"";
    for (unsigned char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += static_cast<char>(c);
        } else if (c < 0x20 || c >= 0x7F) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\%03o", c);
            out += buf;
        } else {
            out += static_cast<char>(c);
        }
    }
    return out + "\"";
}

std::string array_name(std::string_view param) {
    // "conv_q.filters" -> "kConvQFilters"
    std::string out = "k";
    bool upper = true;
    for (char c : param) {
        if (c == '_' || c == '.') {
            upper = true;
            continue;
        }
        out += upper ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
        upper = false;
    }
    return out;
}

void emit_weights(std::ostringstream& out, const ParamRecord& p) {
    out << "// param " << p.name << " " << shape_string(p.dims) << "\n";
    out << "constexpr double " << array_name(p.name) << "[" << p.weights.size() << "] = {";
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
        if (i % 6 == 0) out << "\n    ";
        out << double_literal(p.weights[i]) << ",";
        if (i % 6 != 5 && i + 1 != p.weights.size()) out << ' ';
    }
    out << "\n};\n\n";
}

void emit_tables(std::ostringstream& out, const ModelBundle& bundle) {
    const auto& c = bundle.config;
    std::vector<std::pair<std::string, std::size_t>> vocab;
    for (std::size_t i = 1; i < c.vocab.size(); ++i) vocab.emplace_back(c.vocab[i], i);
    std::sort(vocab.begin(), vocab.end());
    // A sentinel keeps the array non-empty for a vocabulary of just <unk>.
    out << "constexpr VocabEntry kVocab[] = {\n";
    if (vocab.empty()) out << "    {\"<unk>\", 0},\n";
    for (const auto& [term, row] : vocab) out << "    {" << string_literal(term) << ", " << row << "},\n";
    out << "};\n\n";

    out << "constexpr double kIdfDocs = " << double_literal(static_cast<double>(c.idf.n_docs)) << ";\n";
    out << "constexpr DfEntry kIdf[] = {\n";
    if (c.idf.df.empty()) out << "    {\"<unk>\", 0.0},\n";
    for (const auto& [term, df] : c.idf.df) {
        out << "    {" << string_literal(term) << ", " << double_literal(static_cast<double>(df)) << "},\n";
    }
    out << "};\n\n";

    std::vector<std::string> stop(c.stopwords.begin(), c.stopwords.end());
    std::sort(stop.begin(), stop.end());
    stop.erase(std::unique(stop.begin(), stop.end()), stop.end());
    out << "constexpr std::string_view kStopwords[] = {\n";
    if (stop.empty()) out << "    \"<unk>\",\n";
    for (const auto& s : stop) out << "    " << string_literal(s) << ",\n";
    out << "};\n\n";

    for (const auto& p : bundle.params) emit_weights(out, p);
}

void emit_arm(std::ostringstream& out, const ModelConfig& c, const std::string& fn,
              const std::string& filters, const std::string& bias) {
    const std::size_t d = c.embed_dim, w = c.filter_width, k = c.num_filters;
    out << "void " << fn << "(const std::vector<std::uint32_t>& rows, double* out) {\n"
        << "    const std::size_t len = rows.size();\n"
        << "    for (std::size_t f = 0; f < " << k << "; ++f) {\n"
        << "        double best = 0.0;\n"
        << "        for (std::size_t j = 0; j < len + " << (w - 1) << "; ++j) {\n"
        << "            double acc = 0.0;\n"
        << "            for (std::size_t o = 0; o < " << w << "; ++o) {\n";
    if (w > 1) out << "                if (j + o < " << (w - 1) << ") continue;\n";
    out << "                const std::size_t col = j + o - " << (w - 1) << ";\n"
        << "                if (col >= len) continue;\n"
        << "                const double* e = kEmbeddings + rows[col] * " << d << ";\n"
        << "                const double* filt = " << filters << " + f * " << d * w << " + o;\n"
        << "                for (std::size_t r = 0; r < " << d << "; ++r) acc += filt[r * " << w
        << "] * e[r];\n"
        << "            }\n"
        << "            const double v = acc + " << bias << "[f];\n"
        << "            if (v > best) best = v;\n"
        << "        }\n"
        << "        out[f] = best;\n"
        << "    }\n"
        << "}\n\n";
}

void emit_network(std::ostringstream& out, const ModelConfig& c) {
    const std::size_t k = c.num_filters, hd = c.hidden_size, jw = c.join_width();
    emit_arm(out, c, "arm_q", "kConvQFilters", "kConvQBias");
    emit_arm(out, c, "arm_a", "kConvAFilters", "kConvABias");
    out << "double score_tokens(const Tokens& q, const Tokens& a) {\n"
        << "    double join[" << jw << "];\n"
        << "    arm_q(rows_of(q), join);\n"
        << "    arm_a(rows_of(a), join + " << k << ");\n"
        << "    overlap_features(q, a, join + " << 2 * k << ");\n"
        << "    double hidden[" << hd << "];\n"
        << "    for (std::size_t i = 0; i < " << hd << "; ++i) {\n"
        << "        double acc = 0.0;\n"
        << "        const double* wrow = kFc1Weight + i * " << jw << ";\n"
        << "        for (std::size_t p = 0; p < " << jw << "; ++p) acc += wrow[p] * join[p];\n"
        << "        hidden[i] = std::max(0.0, acc + kFc1Bias[i]);\n"
        << "    }\n"
        << "    double logits[2];\n"
        << "    for (std::size_t i = 0; i < 2; ++i) {\n"
        << "        double acc = 0.0;\n"
        << "        const double* wrow = kFc2Weight + i * " << hd << ";\n"
        << "        for (std::size_t p = 0; p < " << hd << "; ++p) acc += wrow[p] * hidden[p];\n"
        << "        logits[i] = acc + kFc2Bias[i];\n"
        << "    }\n"
        << "    const double m = std::max(logits[0], logits[1]);\n"
        << "    const double e0 = std::exp(logits[0] - m), e1 = std::exp(logits[1] - m);\n"
        << "    return e1 / (e0 + e1);\n"
        << "}\n";
}

}  // namespace

void GeneratedSource::write_to(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [rel, text] : files) {
        const auto path = dir / rel;
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
        out << text;
        if (!out.flush()) fail(ErrorCode::kIo, "failed writing " + path.string());
    }
}

GeneratedSource generate_evaluator(const ModelBundle& bundle, const GenOptions& opts) {
    if (!opts.emit_service && !opts.emit_batch_cli) {
        fail(ErrorCode::kArgument, "at least one of emit_service/emit_batch_cli must be set");
    }
    validate_model(bundle);
    const auto& c = bundle.config;

    std::ostringstream out;
    out << "// Generated by rerankd compile. Do not edit.\n"
        << "// embed_dim=" << c.embed_dim << " filter_width=" << c.filter_width
        << " num_filters=" << c.num_filters << " hidden_size=" << c.hidden_size
        << " vocab=" << c.vocab.size() << "\n\n";
    out << kRuntimePrelude;
    if (opts.emit_service) out << kRuntimeServiceIncludes;
    out << kRuntimeTypes << "\n";
    std::string usage_extra;
    if (opts.emit_batch_cli) usage_extra += " | --batch <file> | --bench <file> [--warmup N]";
    if (opts.emit_service) usage_extra += " | --serve <port> [--host H]";
    out << "constexpr const char* kUsageExtra = " << string_literal(usage_extra) << ";\n\n";
    emit_tables(out, bundle);
    out << kRuntimeText << "\n";
    emit_network(out, c);
    out << kRuntimeScoring;
    if (opts.emit_batch_cli) out << kRuntimeBatch;
    if (opts.emit_service) out << kRuntimeService;
    out << kRuntimeMainHead;
    if (opts.emit_batch_cli) out << kRuntimeMainBatch;
    if (opts.emit_service) out << kRuntimeMainServe;
    out << kRuntimeMainTail;

    GeneratedSource src;
    src.entry_point = "evaluator.cpp";
    src.files[src.entry_point] = out.str();
    return src;
}

std::string find_host_compiler(const std::string& preferred) {
    std::vector<std::string> candidates;
    if (!preferred.empty()) {
        candidates.push_back(preferred);
    } else {
        if (const char* env = std::getenv("CXX"); env && *env) candidates.emplace_back(env);
#ifdef RERANK_HOST_CXX
        candidates.emplace_back(RERANK_HOST_CXX);
#endif
        candidates.emplace_back("c++");
        candidates.emplace_back("g++");
        candidates.emplace_back("clang++");
    }
    for (const auto& c : candidates) {
        if (auto path = find_program(c); !path.empty()) return path;
    }
    return {};
}

void build_evaluator(const GeneratedSource& src, const std::filesystem::path& workdir,
                     const std::filesystem::path& binary, const std::string& compiler) {
    src.write_to(workdir);
    const auto result = run_process({compiler, "-std=c++20", "-O2", "-DNDEBUG", "-o", binary.string(),
                                     (workdir / src.entry_point).string()});
    if (result.exit_code != 0) {
        fail(ErrorCode::kToolchain, "compiling generated evaluator failed (exit " +
                                        std::to_string(result.exit_code) + "):\n" + result.err);
    }
}

void write_pairs_file(const std::vector<TextPair>& pairs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
    for (const auto& [q, a] : pairs) {
        if (q.find_first_of("\t\n") != std::string::npos || a.find_first_of("\t\n") != std::string::npos) {
            fail(ErrorCode::kArgument, "pair text may not contain tabs or newlines");
        }
        out << q << '\t' << a << '\n';
    }
    if (!out.flush()) fail(ErrorCode::kIo, "failed writing " + path.string());
}

std::vector<TextPair> read_pairs_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIo, "cannot open pairs file " + path.string());
    std::vector<TextPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            fail(ErrorCode::kValidation, path.string() + ":" + std::to_string(lineno) +
                                             ": expected question<TAB>answer");
        }
        pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return pairs;
}

std::vector<TextPair> random_text_pairs(const ModelConfig& config, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> words(config.vocab.begin() + 1, config.vocab.end());
    for (const auto& s : config.stopwords) words.push_back(s);
    for (const char* oov : {"zyzzyva", "Quux", "frobnicate", "X99"}) words.emplace_back(oov);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::uniform_int_distribution<int> len(0, 12);
    auto sentence = [&] {
        std::string s;
        const int n_words = len(rng);
        for (int i = 0; i < n_words; ++i) {
            if (i) s += (rng() % 5 == 0) ? ", " : " ";
            s += words[pick(rng)];
        }
        if (!s.empty() && rng() % 2) s += "?";
        return s;
    };
    std::vector<TextPair> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(sentence(), sentence());
    return pairs;
}

const char* to_string(ConformanceReport::Status status) {
    switch (status) {
        case ConformanceReport::Status::kPass: return "pass";
        case ConformanceReport::Status::kFail: return "fail";
        case ConformanceReport::Status::kSkipped: return "skipped";
    }
    return "?";
}

ConformanceReport run_conformance(const GeneratedSource& src, const ModelBundle& bundle,
                                  const std::vector<TextPair>& pairs, const ConformanceOptions& opts) {
    ConformanceReport report;
    report.n_pairs = pairs.size();
    const std::string compiler = find_host_compiler(opts.compiler);
    if (compiler.empty()) {
        report.status = ConformanceReport::Status::kSkipped;
        report.reason = "no C++ compiler found (set CXX)";
        return report;
    }
    std::filesystem::create_directories(opts.workdir);
    const auto binary = opts.workdir / "evaluator";
    try {
        build_evaluator(src, opts.workdir, binary, compiler);
    } catch (const Error& e) {
        report.status = ConformanceReport::Status::kFail;
        report.reason = "generated evaluator does not compile";
        report.diagnostics = e.what();
        return report;
    }
    const auto pairs_path = opts.workdir / "pairs.tsv";
    write_pairs_file(pairs, pairs_path);
    const auto run = run_process({binary.string(), "--batch", pairs_path.string()});
    if (run.exit_code != 0) {
        report.status = ConformanceReport::Status::kFail;
        report.reason = "evaluator --batch exited with " + std::to_string(run.exit_code);
        report.diagnostics = run.err;
        return report;
    }

    const Interpreter interp(bundle);
    std::istringstream lines(run.out);
    std::string line;
    std::size_t i = 0;
    while (std::getline(lines, line)) {
        if (i >= pairs.size()) break;
        char* end = nullptr;
        const double compiled = std::strtod(line.c_str(), &end);
        if (end == line.c_str()) {
            report.status = ConformanceReport::Status::kFail;
            report.reason = "unparsable score on output line " + std::to_string(i + 1);
            report.diagnostics = line;
            return report;
        }
        const double expected = interp.score_text(pairs[i].first, pairs[i].second);
        const double rel = std::abs(compiled - expected) / std::max(std::abs(expected), 1e-12);
        report.max_rel_error = std::max(report.max_rel_error, rel);
        ++i;
    }
    if (i != pairs.size()) {
        report.status = ConformanceReport::Status::kFail;
        report.reason = "evaluator printed " + std::to_string(i) + " scores for " +
                        std::to_string(pairs.size()) + " pairs";
        return report;
    }
    report.status = report.max_rel_error <= opts.tolerance ? ConformanceReport::Status::kPass
                                                           : ConformanceReport::Status::kFail;
    if (report.status == ConformanceReport::Status::kFail) {
        report.reason = "max relative error " + shortest_repr(report.max_rel_error) + " exceeds " +
                        shortest_repr(opts.tolerance);
    }
    return report;
}

ConformanceReport compile_and_run_conformance(const ModelBundle& bundle,
                                              const std::vector<TextPair>& pairs,
                                              const ConformanceOptions& opts) {
    return run_conformance(generate_evaluator(bundle, {true, true}), bundle, pairs, opts);
}

}  // namespace rerank
