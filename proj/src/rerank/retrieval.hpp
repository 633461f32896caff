#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rerank/textproc.hpp"

namespace rerank {

using DocId = std::uint64_t;

struct Posting {
    DocId doc_id;
    std::size_t tf;
    bool operator==(const Posting&) const = default;
};

struct InvertedIndex {
    std::map<std::string, std::vector<Posting>, std::less<>> postings;  // sorted by doc_id
    std::map<DocId, std::size_t> doc_len;
    std::map<DocId, std::string> doc_store;
    std::size_t n_docs = 0;
    double avg_doc_len = 0.0;

    bool operator==(const InvertedIndex&) const = default;
};

struct RetrievedDoc {
    DocId doc_id;
    double bm25_score;
    std::string text;
};

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

InvertedIndex index_documents(const std::vector<std::pair<DocId, std::string>>& docs);

/// Top-h documents by BM25, score descending then doc_id ascending. Documents
/// matching no query term are never returned.
std::vector<RetrievedDoc> bm25_search(const InvertedIndex& index, const TokenSeq& query,
                                      std::size_t h, const Bm25Params& params = {});

double bm25_idf(std::size_t n_docs, std::size_t df);

// IDX1 text format.
void save_index(const InvertedIndex& index, const std::filesystem::path& path);
InvertedIndex load_index(const std::filesystem::path& path);

/// Corpus file: one `doc_id<TAB>text` per line.
std::vector<std::pair<DocId, std::string>> read_corpus(const std::filesystem::path& path);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace rerank
