#pragma once

#include <algorithm>

#include "rerank/model.hpp"

namespace fixture {

// d=2, w=2, k=1, hdim=2, |V|=3 with every weight written out.
namespace tiny {
inline const double E[3][2] = {{0.10, -0.20}, {0.50, 0.30}, {-0.40, 0.70}};  // <unk>, a, b
inline const double Fq[2][2] = {{0.6, -0.1}, {0.2, 0.9}};                    // [r][o]
inline const double bq = 0.05;
inline const double Fa[2][2] = {{-0.3, 0.8}, {0.4, 0.25}};
inline const double ba = -0.02;
inline const double W1[2][6] = {{0.7, -0.5, 0.3, 0.2, -0.4, 0.1}, {-0.6, 0.9, 0.15, -0.35, 0.5, 0.45}};
inline const double b1[2] = {0.01, -0.03};
inline const double W2[2][2] = {{0.8, -0.7}, {-0.2, 1.1}};
inline const double b2[2] = {0.04, -0.06};
}  // namespace tiny

inline rerank::ModelBundle tiny_model() {
    using namespace tiny;
    rerank::ModelBundle b;
    b.config.embed_dim = 2;
    b.config.filter_width = 2;
    b.config.num_filters = 1;
    b.config.hidden_size = 2;
    b.config.vocab = {"<unk>", "a", "b"};
    b.config.stopwords = {"b"};
    b.config.idf.n_docs = 4;
    b.config.idf.df = {{"a", 1}, {"b", 3}};
    b.params = {
        {"embeddings", {3, 2}, {E[0][0], E[0][1], E[1][0], E[1][1], E[2][0], E[2][1]}},
        {"conv_q.filters", {1, 2, 2}, {Fq[0][0], Fq[0][1], Fq[1][0], Fq[1][1]}},
        {"conv_q.bias", {1}, {bq}},
        {"conv_a.filters", {1, 2, 2}, {Fa[0][0], Fa[0][1], Fa[1][0], Fa[1][1]}},
        {"conv_a.bias", {1}, {ba}},
        {"fc1.weight", {2, 6}, {W1[0][0], W1[0][1], W1[0][2], W1[0][3], W1[0][4], W1[0][5],
                                 W1[1][0], W1[1][1], W1[1][2], W1[1][3], W1[1][4], W1[1][5]}},
        {"fc1.bias", {2}, {b1[0], b1[1]}},
        {"fc2.weight", {2, 2}, {W2[0][0], W2[0][1], W2[1][0], W2[1][1]}},
        {"fc2.bias", {2}, {b2[0], b2[1]}},
    };
    return b;
}

inline rerank::ModelBundle with_zero_fc(rerank::ModelBundle b) {
    for (auto& p : b.params)
        if (p.name.rfind("fc", 0) == 0) std::fill(p.weights.begin(), p.weights.end(), 0.0);
    return b;
}

}  // namespace fixture
