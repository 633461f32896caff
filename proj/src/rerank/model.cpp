#include "rerank/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rerank/error.hpp"

namespace rerank {

namespace {

using nlohmann::json;

std::string json_quoted(std::string_view s) { return json(std::string(s)).dump(); }

void write_string_list(std::ostringstream& out, const std::vector<std::string>& items) {
    out << '[';
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out << ',';
        out << json_quoted(items[i]);
    }
    out << ']';
}

std::size_t as_size(const json& j, const char* what) {
    if (!j.is_number_unsigned()) {
        fail(ErrorCode::kValidation, std::string("model field '") + what +
                                         "' must be a non-negative integer");
    }
    return j.get<std::size_t>();
}

const json& field(const json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) {
        fail(ErrorCode::kValidation, std::string("model file missing field '") + key + "'");
    }
    return obj.at(key);
}

std::vector<std::string> as_strings(const json& j, const char* what) {
    if (!j.is_array()) fail(ErrorCode::kValidation, std::string("'") + what + "' must be a list");
    std::vector<std::string> out;
    out.reserve(j.size());
    for (const auto& e : j) {
        if (!e.is_string()) {
            fail(ErrorCode::kValidation, std::string("'") + what + "' must hold strings");
        }
        out.push_back(e.get<std::string>());
    }
    return out;
}

}  // namespace

const ParamRecord& ModelBundle::param(std::string_view name) const {
    for (const auto& p : params) {
        if (p.name == name) return p;
    }
    fail(ErrorCode::kValidation, "missing parameter " + std::string(name));
}

std::vector<std::pair<std::string, Shape>> expected_params(const ModelConfig& c) {
    const std::size_t k = c.num_filters, d = c.embed_dim, w = c.filter_width, hd = c.hidden_size;
    return {
        {"embeddings", {c.vocab.size(), d}},
        {"conv_q.filters", {k, d, w}},
        {"conv_q.bias", {k}},
        {"conv_a.filters", {k, d, w}},
        {"conv_a.bias", {k}},
        {"fc1.weight", {hd, c.join_width()}},
        {"fc1.bias", {hd}},
        {"fc2.weight", {2, hd}},
        {"fc2.bias", {2}},
    };
}

void validate_config(const ModelConfig& c) {
    if (c.embed_dim < 1 || c.filter_width < 1 || c.num_filters < 1 || c.hidden_size < 1) {
        fail(ErrorCode::kValidation, "embed_dim, filter_width, num_filters and hidden_size must be >= 1");
    }
    if (c.vocab.empty() || c.vocab[0] != kUnknownToken) {
        fail(ErrorCode::kValidation, "vocab must start with <unk>");
    }
    std::set<std::string_view> seen;
    for (const auto& term : c.vocab) {
        if (!seen.insert(term).second) fail(ErrorCode::kValidation, "duplicate vocab entry '" + term + "'");
    }
    if (c.idf.n_docs < 1) fail(ErrorCode::kValidation, "idf n_docs must be >= 1");
    for (const auto& [term, df] : c.idf.df) {
        if (df < 1 || df > c.idf.n_docs) {
            fail(ErrorCode::kValidation, "idf df for '" + term + "' out of range [1, n_docs]");
        }
    }
}

void validate_model(const ModelBundle& bundle) {
    validate_config(bundle.config);
    const auto expected = expected_params(bundle.config);
    for (const auto& p : bundle.params) {
        if (shape_product(p.dims) != p.weights.size() || p.dims.empty()) {
            fail(ErrorCode::kShape, "reshape error: parameter " + p.name + " has dims " +
                                        shape_string(p.dims) + " but " +
                                        std::to_string(p.weights.size()) + " weights");
        }
    }
    for (const auto& [name, dims] : expected) {
        auto it = std::find_if(bundle.params.begin(), bundle.params.end(),
                               [&](const ParamRecord& p) { return p.name == name; });
        if (it == bundle.params.end()) fail(ErrorCode::kValidation, "missing parameter " + name);
        if (std::count_if(bundle.params.begin(), bundle.params.end(),
                          [&](const ParamRecord& p) { return p.name == name; }) > 1) {
            fail(ErrorCode::kValidation, "duplicate parameter " + name);
        }
        if (it->dims != dims) {
            fail(ErrorCode::kValidation, "parameter " + name + " has dims " + shape_string(it->dims) +
                                             ", expected " + shape_string(dims));
        }
        for (double v : it->weights) {
            if (!std::isfinite(v)) fail(ErrorCode::kValidation, "parameter " + name + " has a non-finite weight");
        }
    }
    if (bundle.params.size() != expected.size()) {
        for (const auto& p : bundle.params) {
            if (std::none_of(expected.begin(), expected.end(),
                             [&](const auto& e) { return e.first == p.name; })) {
                fail(ErrorCode::kValidation, "unexpected parameter " + p.name);
            }
        }
    }
}

std::string shortest_repr(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    std::string out(buf, ptr);
    // "-0" would parse back as the integer zero and lose its sign.
    if (out == "-0") out = "-0.0";
    return out;
}

std::string serialize_model(const ModelBundle& bundle) {
    validate_model(bundle);
    const auto& c = bundle.config;
    std::ostringstream out;
    out << "{\"format_version\":" << kModelFormatVersion << ",\n";
    out << "\"config\":{\"embed_dim\":" << c.embed_dim << ",\"filter_width\":" << c.filter_width
        << ",\"num_filters\":" << c.num_filters << ",\"hidden_size\":" << c.hidden_size
        << ",\n\"vocab\":";
    write_string_list(out, c.vocab);
    out << ",\n\"stopwords\":";
    write_string_list(out, c.stopwords);
    out << ",\n\"idf\":{\"n_docs\":" << c.idf.n_docs << ",\"df\":{";
    bool first = true;
    for (const auto& [term, df] : c.idf.df) {
        if (!first) out << ',';
        first = false;
        out << json_quoted(term) << ':' << df;
    }
    out << "}}},\n\"params\":[";
    for (std::size_t i = 0; i < bundle.params.size(); ++i) {
        const auto& p = bundle.params[i];
        out << (i ? ",\n" : "\n") << "{\"name\":" << json_quoted(p.name) << ",\"dims\":[";
        for (std::size_t j = 0; j < p.dims.size(); ++j) out << (j ? "," : "") << p.dims[j];
        out << "],\"weights\":[";
        for (std::size_t j = 0; j < p.weights.size(); ++j) {
            out << (j ? "," : "") << shortest_repr(p.weights[j]);
        }
        out << "]}";
    }
    out << "\n]}\n";
    return out.str();
}

ModelBundle parse_model(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::kValidation, std::string("malformed model file: ") + e.what());
    }
    const json& version = field(doc, "format_version");
    if (!version.is_number_integer() || version.get<long long>() != kModelFormatVersion) {
        fail(ErrorCode::kVersion, "unsupported model format_version " + version.dump() +
                                      " (expected " + std::to_string(kModelFormatVersion) + ")");
    }

    ModelBundle bundle;
    const json& cfg = field(doc, "config");
    auto& c = bundle.config;
    c.embed_dim = as_size(field(cfg, "embed_dim"), "embed_dim");
    c.filter_width = as_size(field(cfg, "filter_width"), "filter_width");
    c.num_filters = as_size(field(cfg, "num_filters"), "num_filters");
    c.hidden_size = as_size(field(cfg, "hidden_size"), "hidden_size");
    c.vocab = as_strings(field(cfg, "vocab"), "vocab");
    c.stopwords = as_strings(field(cfg, "stopwords"), "stopwords");
    const json& idf = field(cfg, "idf");
    c.idf.n_docs = as_size(field(idf, "n_docs"), "n_docs");
    const json& df = field(idf, "df");
    if (!df.is_object()) fail(ErrorCode::kValidation, "idf df must be an object");
    for (const auto& [term, value] : df.items()) c.idf.df[term] = as_size(value, "df");

    const json& params = field(doc, "params");
    if (!params.is_array()) fail(ErrorCode::kValidation, "'params' must be a list");
    for (const auto& rec : params) {
        ParamRecord p;
        const json& name = field(rec, "name");
        if (!name.is_string()) fail(ErrorCode::kValidation, "parameter name must be a string");
        p.name = name.get<std::string>();
        const json& dims = field(rec, "dims");
        if (!dims.is_array()) fail(ErrorCode::kValidation, "dims of " + p.name + " must be a list");
        for (const auto& d : dims) {
            const std::size_t v = as_size(d, "dims");
            if (v == 0) fail(ErrorCode::kShape, "reshape error: parameter " + p.name + " has a zero dim");
            p.dims.push_back(v);
        }
        const json& weights = field(rec, "weights");
        if (!weights.is_array()) fail(ErrorCode::kValidation, "weights of " + p.name + " must be a list");
        p.weights.reserve(weights.size());
        for (const auto& w : weights) {
            if (!w.is_number()) fail(ErrorCode::kValidation, "weights of " + p.name + " must be numbers");
            p.weights.push_back(w.get<double>());
        }
        bundle.params.push_back(std::move(p));
    }
    validate_model(bundle);
    return bundle;
}

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) {
    const std::string text = serialize_model(bundle);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out.flush()) fail(ErrorCode::kIo, "failed writing " + path.string());
}

ModelBundle load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIo, "cannot open model " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

std::uint64_t SplitMix64::next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

ModelBundle init_model(const ModelConfig& config, std::uint64_t seed) {
    validate_config(config);
    SplitMix64 rng(seed);
    ModelBundle bundle;
    bundle.config = config;
    for (auto& [name, dims] : expected_params(config)) {
        ParamRecord rec{name, dims, std::vector<double>(shape_product(dims), 0.0)};
        double scale = 0.0;
        if (name == "embeddings") {
            scale = 0.25;
        } else if (dims.size() == 3) {
            // conv filters k x d x w: fan_in d*w, fan_out k*w
            const double fan_in = static_cast<double>(dims[1] * dims[2]);
            const double fan_out = static_cast<double>(dims[0] * dims[2]);
            scale = std::sqrt(6.0 / (fan_in + fan_out));
        } else if (dims.size() == 2) {
            scale = std::sqrt(6.0 / static_cast<double>(dims[0] + dims[1]));
        }
        if (scale != 0.0) {
            for (auto& w : rec.weights) w = (2.0 * rng.next_unit() - 1.0) * scale;
        }
        bundle.params.push_back(std::move(rec));
    }
    return bundle;
}

std::vector<std::string> build_vocab(const std::vector<TokenSeq>& corpus, std::size_t max_size) {
    std::map<std::string, std::size_t> freq;
    for (const auto& doc : corpus)
        for (const auto& t : doc) ++freq[t];
    freq.erase(std::string(kUnknownToken));
    std::vector<std::pair<std::string, std::size_t>> terms(freq.begin(), freq.end());
    std::stable_sort(terms.begin(), terms.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> vocab{std::string(kUnknownToken)};
    for (auto& [term, n] : terms) {
        if (max_size && vocab.size() >= max_size) break;
        vocab.push_back(std::move(term));
    }
    return vocab;
}

}  // namespace rerank
