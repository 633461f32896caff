#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rerank/model.hpp"
#include "rerank/retrieval.hpp"
#include "rerank/tensor.hpp"
#include "rerank/textproc.hpp"

namespace rerank {

struct Candidate {
    DocId doc_id = 0;
    std::size_t sentence_index = 0;
    std::string text;
    bool operator==(const Candidate&) const = default;
};

struct ScoredCandidate {
    Candidate candidate;
    double score = 0.0;
};

/// Everything forward() computes on the way to the score.
struct ForwardTrace {
    std::vector<double> join;  // [x_q (k); x_d (k); x_feat (4)]
    std::array<double, 2> logits{};
    std::array<double, 2> probs{};
    double score = 0.0;
};

/// maxpool_cols(relu(conv_wide(x, filters, bias)))
Tensor arm_forward(const Tensor& x, const Tensor& filters, const Tensor& bias);

/// Feedforward evaluator for the two-arm CNN. Construction validates the
/// bundle once and unpacks every record into a tensor; evaluation is
/// read-only and safe to call concurrently.
class Interpreter {
public:
    explicit Interpreter(ModelBundle bundle);

    const ModelBundle& bundle() const noexcept { return bundle_; }

    /// d x L sentence matrix; unknown tokens map to row 0, an empty input
    /// yields the single <unk> column.
    Tensor embed(const TokenSeq& tokens) const;

    ForwardTrace trace(const TokenSeq& q, const TokenSeq& a) const;
    double forward(const TokenSeq& q, const TokenSeq& a) const { return trace(q, a).score; }

    /// Tokenizes both sides, then forward().
    double score_text(std::string_view question, std::string_view answer) const;

    std::vector<double> score_batch(const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs) const;

    /// Scores every candidate against the question and sorts by score
    /// descending, ties by (doc_id, sentence_index).
    std::vector<ScoredCandidate> rerank(std::string_view question,
                                        const std::vector<Candidate>& candidates) const;

private:
    ModelBundle bundle_;
    Tensor embeddings_, conv_q_filters_, conv_q_bias_, conv_a_filters_, conv_a_bias_;
    Tensor fc1_weight_, fc1_bias_, fc2_weight_, fc2_bias_;
    std::unordered_map<std::string, std::size_t> vocab_index_;
    StopwordSet stopwords_;
};

// One-shot conveniences over a bundle; each builds an Interpreter.
Tensor embed(const TokenSeq& tokens, const ModelBundle& bundle);
double forward(const ModelBundle& bundle, const TokenSeq& q, const TokenSeq& a);

}  // namespace rerank
