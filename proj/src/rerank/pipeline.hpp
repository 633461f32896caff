#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rerank/inference.hpp"
#include "rerank/model.hpp"
#include "rerank/retrieval.hpp"

namespace rerank {

inline constexpr std::size_t kDefaultDepth = 10;  // documents retrieved (h)
inline constexpr std::size_t kDefaultTopN = 5;

/// Retrieval-rank order, then sentence order within each document.
std::vector<Candidate> candidates_from(const std::vector<RetrievedDoc>& docs);

/// BM25 top-h documents, split into sentences, reranked; the first top_n.
std::vector<ScoredCandidate> ask(const InvertedIndex& index, const Interpreter& model,
                                 std::string_view question, std::size_t h, std::size_t top_n);

/// `rank<TAB>score<TAB>doc_id<TAB>sentence_index<TAB>text` lines, rank from 1,
/// score with 6 decimals.
std::string format_answers(const std::vector<ScoredCandidate>& answers);

/// Vocabulary and idf statistics from a corpus, weights from init_model.
ModelBundle init_model_from_corpus(const std::vector<std::pair<DocId, std::string>>& docs,
                                   ModelConfig config, std::uint64_t seed, std::size_t max_vocab);

}  // namespace rerank
