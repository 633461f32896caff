#include "rerank/pipeline.hpp"

#include <cstdio>

#include "rerank/error.hpp"
#include "rerank/textproc.hpp"

namespace rerank {

std::vector<Candidate> candidates_from(const std::vector<RetrievedDoc>& docs) {
    std::vector<Candidate> out;
    for (const auto& doc : docs) {
        const auto sentences = split_sentences(doc.text);
        for (std::size_t i = 0; i < sentences.size(); ++i) out.push_back({doc.doc_id, i, sentences[i]});
    }
    return out;
}

std::vector<ScoredCandidate> ask(const InvertedIndex& index, const Interpreter& model,
                                 std::string_view question, std::size_t h, std::size_t top_n) {
    if (h < 1 || top_n < 1) fail(ErrorCode::kArgument, "h and top_n must be >= 1");
    const auto docs = bm25_search(index, tokenize(question), h);
    auto ranked = model.rerank(question, candidates_from(docs));
    if (ranked.size() > top_n) ranked.resize(top_n);
    return ranked;
}

std::string format_answers(const std::vector<ScoredCandidate>& answers) {
    std::string out;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        const auto& a = answers[i];
        char score[32];
        std::snprintf(score, sizeof score, "%.6f", a.score);
        out += std::to_string(i + 1) + '\t' + score + '\t' + std::to_string(a.candidate.doc_id) + '\t' +
               std::to_string(a.candidate.sentence_index) + '\t' + a.candidate.text + '\n';
    }
    return out;
}

ModelBundle init_model_from_corpus(const std::vector<std::pair<DocId, std::string>>& docs,
                                   ModelConfig config, std::uint64_t seed, std::size_t max_vocab) {
    std::vector<TokenSeq> corpus;
    corpus.reserve(docs.size());
    for (const auto& [id, text] : docs) corpus.push_back(tokenize(text));
    if (!corpus.empty()) {
        config.vocab = build_vocab(corpus, max_vocab);
        config.idf = build_idf(corpus);
    }
    return init_model(config, seed);
}

}  // namespace rerank
