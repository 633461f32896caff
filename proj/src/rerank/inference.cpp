#include "rerank/inference.hpp"

#include <algorithm>
#include <cmath>

#include "rerank/error.hpp"

namespace rerank {

namespace {

Tensor checked(const ModelBundle& b, std::string_view name) { return b.param(name).tensor(); }

const ModelBundle& validated(const ModelBundle& b) {
    validate_model(b);
    return b;
}

}  // namespace

Tensor arm_forward(const Tensor& x, const Tensor& filters, const Tensor& bias) {
    return maxpool_cols(relu(conv_wide(x, filters, bias)));
}

Interpreter::Interpreter(ModelBundle bundle)
    : bundle_(std::move(bundle)),
      embeddings_(checked(validated(bundle_), "embeddings")),
      conv_q_filters_(checked(bundle_, "conv_q.filters")),
      conv_q_bias_(checked(bundle_, "conv_q.bias")),
      conv_a_filters_(checked(bundle_, "conv_a.filters")),
      conv_a_bias_(checked(bundle_, "conv_a.bias")),
      fc1_weight_(checked(bundle_, "fc1.weight")),
      fc1_bias_(checked(bundle_, "fc1.bias")),
      fc2_weight_(checked(bundle_, "fc2.weight")),
      fc2_bias_(checked(bundle_, "fc2.bias")),
      stopwords_(bundle_.config.stopwords.begin(), bundle_.config.stopwords.end()) {
    const auto& vocab = bundle_.config.vocab;
    vocab_index_.reserve(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) vocab_index_.emplace(vocab[i], i);
}

Tensor Interpreter::embed(const TokenSeq& tokens) const {
    const std::size_t d = bundle_.config.embed_dim;
    const std::size_t len = std::max<std::size_t>(tokens.size(), 1);
    std::vector<double> out(d * len);
    const auto table = embeddings_.data();
    for (std::size_t i = 0; i < len; ++i) {
        std::size_t row = 0;
        if (i < tokens.size()) {
            auto it = vocab_index_.find(tokens[i]);
            if (it != vocab_index_.end()) row = it->second;
        }
        for (std::size_t r = 0; r < d; ++r) out[r * len + i] = table[row * d + r];
    }
    return Tensor::matrix(d, len, std::move(out));
}

ForwardTrace Interpreter::trace(const TokenSeq& q, const TokenSeq& a) const {
    const std::size_t k = bundle_.config.num_filters;
    const Tensor xq = arm_forward(embed(q), conv_q_filters_, conv_q_bias_);
    const Tensor xd = arm_forward(embed(a), conv_a_filters_, conv_a_bias_);
    const OverlapFeatures feat = overlap_features(q, a, bundle_.config.idf, stopwords_);

    ForwardTrace t;
    t.join.reserve(2 * k + 4);
    t.join.insert(t.join.end(), xq.data().begin(), xq.data().end());
    t.join.insert(t.join.end(), xd.data().begin(), xd.data().end());
    t.join.insert(t.join.end(), feat.begin(), feat.end());

    const Tensor pre1 = gemm(fc1_weight_, Tensor({t.join.size(), 1}, t.join));
    std::vector<double> h1(pre1.data().begin(), pre1.data().end());
    for (std::size_t i = 0; i < h1.size(); ++i) h1[i] = std::max(0.0, h1[i] + fc1_bias_[i]);

    const std::size_t hdim = h1.size();
    const Tensor pre2 = gemm(fc2_weight_, Tensor({hdim, 1}, std::move(h1)));
    t.logits = {pre2[0] + fc2_bias_[0], pre2[1] + fc2_bias_[1]};

    const double m = std::max(t.logits[0], t.logits[1]);
    const double e0 = std::exp(t.logits[0] - m), e1 = std::exp(t.logits[1] - m);
    t.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
    t.score = t.probs[1];
    return t;
}

double Interpreter::score_text(std::string_view question, std::string_view answer) const {
    return forward(tokenize(question), tokenize(answer));
}

std::vector<double> Interpreter::score_batch(
    const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs) const {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        try {
            out.push_back(forward(pairs[i].first, pairs[i].second));
        } catch (const Error& e) {
            fail(e.code(), "pair " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

std::vector<ScoredCandidate> Interpreter::rerank(std::string_view question,
                                                 const std::vector<Candidate>& candidates) const {
    const TokenSeq q = tokenize(question);
    std::vector<ScoredCandidate> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) out.push_back({c, forward(q, tokenize(c.text))});
    std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.candidate.doc_id != b.candidate.doc_id) return a.candidate.doc_id < b.candidate.doc_id;
        return a.candidate.sentence_index < b.candidate.sentence_index;
    });
    return out;
}

Tensor embed(const TokenSeq& tokens, const ModelBundle& bundle) {
    return Interpreter(bundle).embed(tokens);
}

double forward(const ModelBundle& bundle, const TokenSeq& q, const TokenSeq& a) {
    return Interpreter(bundle).forward(q, a);
}

}  // namespace rerank
