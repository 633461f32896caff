#include "rerank/textproc.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "rerank/error.hpp"

namespace rerank {

namespace {

bool is_alnum(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

using TermSet = std::set<std::string, std::less<>>;

struct SetPair {
    double overlap;
    double idf_overlap;
};

SetPair overlap_of(const TermSet& q, const TermSet& c, const IdfTable& idf) {
    std::vector<std::string> inter, uni;
    std::set_intersection(q.begin(), q.end(), c.begin(), c.end(), std::back_inserter(inter));
    std::set_union(q.begin(), q.end(), c.begin(), c.end(), std::back_inserter(uni));

    const double denom = static_cast<double>(q.size() + c.size());
    const double overlap = denom == 0.0 ? 0.0 : static_cast<double>(inter.size()) / denom;

    double num = 0.0, den = 0.0;
    for (const auto& t : inter) num += feature_idf(idf, t);
    for (const auto& t : uni) den += feature_idf(idf, t);
    const double idf_overlap = den == 0.0 ? 0.0 : num / den;
    return {overlap, idf_overlap};
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
    TokenSeq out;
    std::string cur;
    for (unsigned char c : text) {
        if (is_alnum(c)) {
            cur.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
        auto piece = trim(text.substr(start, end - start));
        if (!piece.empty()) out.emplace_back(piece);
        start = end;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if ((c == '.' || c == '?' || c == '!') &&
            (i + 1 == text.size() || is_space(static_cast<unsigned char>(text[i + 1])))) {
            emit(i + 1);
        }
    }
    emit(text.size());
    return out;
}

std::size_t IdfTable::doc_freq(std::string_view term) const {
    auto it = df.find(term);
    return it == df.end() ? 0 : it->second;
}

IdfTable build_idf(const std::vector<TokenSeq>& corpus) {
    if (corpus.empty()) fail(ErrorCode::kArgument, "build_idf needs a non-empty corpus");
    IdfTable table;
    table.n_docs = corpus.size();
    for (const auto& doc : corpus) {
        TermSet seen(doc.begin(), doc.end());
        for (const auto& t : seen) ++table.df[t];
    }
    return table;
}

double feature_idf(const IdfTable& table, std::string_view term) {
    const double n = static_cast<double>(table.n_docs);
    const double df = static_cast<double>(table.doc_freq(term));
    return std::log((n + 1.0) / (df + 1.0));
}

OverlapFeatures overlap_features(const TokenSeq& q, const TokenSeq& c, const IdfTable& idf,
                                 const StopwordSet& stopwords) {
    TermSet qs(q.begin(), q.end()), cs(c.begin(), c.end());
    const SetPair all = overlap_of(qs, cs, idf);

    std::erase_if(qs, [&](const std::string& t) { return stopwords.contains(t); });
    std::erase_if(cs, [&](const std::string& t) { return stopwords.contains(t); });
    const SetPair nonstop = overlap_of(qs, cs, idf);

    return {all.overlap, all.idf_overlap, nonstop.overlap, nonstop.idf_overlap};
}

const std::vector<std::string>& default_stopwords() {
    static const std::vector<std::string> words = {
        "a",    "an",   "and",   "are",   "as",    "at",   "be",   "but",  "by",
        "for",  "if",   "in",    "into",  "is",    "it",   "no",   "not",  "of",
        "on",   "or",   "such",  "that",  "the",   "their", "then", "there", "these",
        "they", "this", "to",    "was",   "will",  "with",
    };
    return words;
}

}  // namespace rerank
