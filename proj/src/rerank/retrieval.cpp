#include "rerank/retrieval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "rerank/error.hpp"

namespace rerank {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

template <typename T>
T parse_uint(std::string_view s, const char* what) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        fail(ErrorCode::kValidation, std::string("bad ") + what + " '" + std::string(s) + "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

void finish(InvertedIndex& index) {
    index.n_docs = index.doc_len.size();
    double total = 0.0;
    for (const auto& [id, len] : index.doc_len) total += static_cast<double>(len);
    index.avg_doc_len = index.n_docs ? total / static_cast<double>(index.n_docs) : 0.0;
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                           static_cast<unsigned char>(bytes[i + 2]);
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    if (i < bytes.size()) {
        unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        if (i + 1 < bytes.size()) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

std::string base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) fail(ErrorCode::kValidation, "base64 length not a multiple of 4");
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::string out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        const bool last = i + 4 == text.size();
        const int pad = last ? (text[i + 3] == '=') + (text[i + 2] == '=') : 0;
        unsigned v = 0;
        for (int j = 0; j < 4; ++j) {
            const char c = text[i + j];
            int x = (c == '=' && j >= 4 - pad) ? 0 : value(c);
            if (x < 0) fail(ErrorCode::kValidation, "invalid base64 character");
            v = (v << 6) | static_cast<unsigned>(x);
        }
        out += static_cast<char>((v >> 16) & 0xFF);
        if (pad < 2) out += static_cast<char>((v >> 8) & 0xFF);
        if (pad < 1) out += static_cast<char>(v & 0xFF);
    }
    return out;
}

InvertedIndex index_documents(const std::vector<std::pair<DocId, std::string>>& docs) {
    if (docs.empty()) fail(ErrorCode::kArgument, "cannot index an empty document list");
    InvertedIndex index;
    for (const auto& [id, text] : docs) {
        if (index.doc_len.contains(id)) {
            fail(ErrorCode::kArgument, "duplicate doc_id " + std::to_string(id));
        }
        const TokenSeq tokens = tokenize(text);
        index.doc_len[id] = tokens.size();
        index.doc_store[id] = text;
        std::map<std::string_view, std::size_t> tf;
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [term, count] : tf) {
            index.postings[std::string(term)].push_back({id, count});
        }
    }
    for (auto& [term, list] : index.postings) {
        std::sort(list.begin(), list.end(),
                  [](const Posting& a, const Posting& b) { return a.doc_id < b.doc_id; });
    }
    finish(index);
    return index;
}

double bm25_idf(std::size_t n_docs, std::size_t df) {
    const double n = static_cast<double>(n_docs), d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

std::vector<RetrievedDoc> bm25_search(const InvertedIndex& index, const TokenSeq& query,
                                      std::size_t h, const Bm25Params& params) {
    if (h < 1) fail(ErrorCode::kArgument, "bm25_search needs h >= 1");
    std::unordered_map<DocId, double> acc;
    // Term-at-a-time in query order, so each document's sum has a fixed order.
    for (const auto& term : query) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        const double idf = bm25_idf(index.n_docs, it->second.size());
        for (const auto& p : it->second) {
            const double tf = static_cast<double>(p.tf);
            const double len = static_cast<double>(index.doc_len.at(p.doc_id));
            const double norm = params.k1 * (1.0 - params.b + params.b * len / index.avg_doc_len);
            acc[p.doc_id] += idf * (tf * (params.k1 + 1.0)) / (tf + norm);
        }
    }
    std::vector<std::pair<DocId, double>> ranked(acc.begin(), acc.end());
    auto better = [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    };
    const std::size_t n = std::min(h, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), ranked.end(),
                      better);
    std::vector<RetrievedDoc> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({ranked[i].first, ranked[i].second, index.doc_store.at(ranked[i].first)});
    }
    return out;
}

void save_index(const InvertedIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
    out << "IDX1\n";
    for (const auto& [id, len] : index.doc_len) {
        out << id << '\t' << len << '\t' << base64_encode(index.doc_store.at(id)) << '\n';
    }
    for (const auto& [term, list] : index.postings) {
        out << term << '\t';
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (i) out << ',';
            out << list[i].doc_id << ':' << list[i].tf;
        }
        out << '\n';
    }
    if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

InvertedIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIo, "cannot open index " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "IDX1") {
        fail(ErrorCode::kVersion, "index file " + path.string() + " does not start with IDX1");
    }
    InvertedIndex index;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split(line, '\t');
        if (fields.size() == 3) {
            const auto id = parse_uint<DocId>(fields[0], "doc_id");
            if (index.doc_len.contains(id)) {
                fail(ErrorCode::kValidation, "duplicate doc_id at line " + std::to_string(lineno));
            }
            index.doc_len[id] = parse_uint<std::size_t>(fields[1], "doc length");
            index.doc_store[id] = base64_decode(fields[2]);
        } else if (fields.size() == 2) {
            auto& list = index.postings[std::string(fields[0])];
            if (!list.empty()) {
                fail(ErrorCode::kValidation, "duplicate term at line " + std::to_string(lineno));
            }
            for (auto entry : split(fields[1], ',')) {
                auto colon = entry.find(':');
                if (colon == std::string_view::npos) {
                    fail(ErrorCode::kValidation, "bad posting at line " + std::to_string(lineno));
                }
                Posting p{parse_uint<DocId>(entry.substr(0, colon), "doc_id"),
                          parse_uint<std::size_t>(entry.substr(colon + 1), "term frequency")};
                if (!index.doc_len.contains(p.doc_id)) {
                    fail(ErrorCode::kValidation, "posting references unknown doc " +
                                                     std::to_string(p.doc_id));
                }
                if (!list.empty() && list.back().doc_id >= p.doc_id) {
                    fail(ErrorCode::kValidation, "postings not strictly increasing at line " +
                                                     std::to_string(lineno));
                }
                list.push_back(p);
            }
        } else {
            fail(ErrorCode::kValidation, "malformed index line " + std::to_string(lineno));
        }
    }
    if (index.doc_len.empty()) fail(ErrorCode::kValidation, "index has no documents");
    finish(index);
    return index;
}

std::vector<std::pair<DocId, std::string>> read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIo, "cannot open corpus " + path.string());
    std::vector<std::pair<DocId, std::string>> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            fail(ErrorCode::kValidation, "corpus line " + std::to_string(lineno) + " has no tab");
        }
        docs.emplace_back(parse_uint<DocId>(std::string_view(line).substr(0, tab), "doc_id"),
                          line.substr(tab + 1));
    }
    return docs;
}

}  // namespace rerank
