#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rerank {

using TokenSeq = std::vector<std::string>;

/// Lowercased ASCII alphanumeric runs; everything else separates tokens.
TokenSeq tokenize(std::string_view text);

/// Splits after '.', '?' or '!' when followed by whitespace or end of text.
std::vector<std::string> split_sentences(std::string_view text);

struct IdfTable {
    std::size_t n_docs = 1;
    std::map<std::string, std::size_t, std::less<>> df;

    std::size_t doc_freq(std::string_view term) const;
    bool operator==(const IdfTable&) const = default;
};

IdfTable build_idf(const std::vector<TokenSeq>& corpus);

/// ln((N+1)/(df+1)); unseen terms have df 0.
double feature_idf(const IdfTable& table, std::string_view term);

/// [overlap_all, idf_overlap_all, overlap_nonstop, idf_overlap_nonstop]
using OverlapFeatures = std::array<double, 4>;

using StopwordSet = std::set<std::string, std::less<>>;

OverlapFeatures overlap_features(const TokenSeq& q, const TokenSeq& c, const IdfTable& idf,
                                 const StopwordSet& stopwords);

/// The built-in 33-word English function-word list, sorted.
const std::vector<std::string>& default_stopwords();

}  // namespace rerank
