#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rerank/error.hpp"
#include "rerank/model.hpp"

using rerank::ErrorCode;
using rerank::ModelBundle;

namespace {

void expect_error(const std::string& text, ErrorCode code, const std::string& fragment) {
    try {
        rerank::parse_model(text);
        ADD_FAILURE() << "accepted a corrupted model, expected: " << fragment;
    } catch (const rerank::Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
        EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
}

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    if (pos != std::string::npos) text.replace(pos, from.size(), to);
    return text;
}

std::string drop_record(const std::string& text, const std::string& name) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line.find("\"name\":\"" + name + "\"") == std::string::npos) out += line + "\n";
    return out;
}

}  // namespace

TEST(ModelFileTest, SaveLoadIsBitExact) {
    oracle::TempDir dir("model");
    ModelBundle b = rerank::init_model(oracle::small_config(3, 2, 4, 12, oracle::letter_vocab(6)), 99);
    // awkward values that only survive with round-trip formatting
    b.params[0].weights[0] = -0.0;
    b.params[0].weights[1] = 0.1;
    b.params[0].weights[2] = std::numeric_limits<double>::denorm_min();
    b.params[0].weights[3] = std::nextafter(1.0, 2.0);
    b.params[0].weights[4] = -1.7976931348623157e308;
    b.config.idf = {7, {{"w1", 2}, {"w2", 7}}};
    rerank::save_model(b, dir / "m.json");
    const ModelBundle back = rerank::load_model(dir / "m.json");
    EXPECT_TRUE(oracle::bit_identical(b, back));
    EXPECT_TRUE(std::signbit(back.params[0].weights[0]));
}

TEST(ModelFileTest, SaveRefusesReshapeViolation) {
    oracle::TempDir dir("model_bad");
    ModelBundle b = fixture::tiny_model();
    b.params[2].weights.push_back(1.0);
    try {
        rerank::save_model(b, dir / "m.json");
        FAIL();
    } catch (const rerank::Error& e) {
        EXPECT_NE(e.code(), ErrorCode::kIo);
    }
    EXPECT_FALSE(std::filesystem::exists(dir / "m.json"));
}

TEST(ModelFileTest, UnwritablePathIsIoError) {
    try {
        rerank::save_model(fixture::tiny_model(), "/nonexistent-dir/m.json");
        FAIL();
    } catch (const rerank::Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kIo);
    }
}

TEST(ModelFileTest, KeyOrderIsFixed) {
    const std::string text = rerank::serialize_model(fixture::tiny_model());
    const auto v = text.find("\"format_version\""), c = text.find("\"config\""), p = text.find("\"params\"");
    EXPECT_EQ(v, 1u);
    EXPECT_LT(v, c);
    EXPECT_LT(c, p);
    const auto name = text.find("\"name\""), dims = text.find("\"dims\""), weights = text.find("\"weights\"");
    EXPECT_LT(name, dims);
    EXPECT_LT(dims, weights);
}

TEST(ModelFileTest, IndependentParserSeesSameDims) {
    // regex scan of the raw text, no JSON library involved
    const ModelBundle b = fixture::tiny_model();
    const std::string text = rerank::serialize_model(b);
    std::regex record(R"re("name":"([^"]+)","dims":\[([0-9,]+)\],"weights":\[([^\]]*)\])re");
    std::vector<std::pair<std::string, rerank::Shape>> seen;
    std::size_t n_weights = 0;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), record); it != std::sregex_iterator(); ++it) {
        rerank::Shape dims;
        std::stringstream ds((*it)[2].str());
        for (std::string part; std::getline(ds, part, ',');) dims.push_back(std::stoul(part));
        seen.emplace_back((*it)[1].str(), dims);
        const std::string w = (*it)[3].str();
        n_weights += std::count(w.begin(), w.end(), ',') + 1;
    }
    ASSERT_EQ(seen.size(), b.params.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < seen.size(); ++i) {
        EXPECT_EQ(seen[i].first, b.params[i].name);
        EXPECT_EQ(seen[i].second, b.params[i].dims);
        total += b.params[i].weights.size();
    }
    EXPECT_EQ(seen[0].second, (rerank::Shape{3, 2}));
    EXPECT_EQ(n_weights, total);
}

TEST(ModelFileTest, MissingRecordIsNamed) {
    const std::string text = rerank::serialize_model(fixture::tiny_model());
    expect_error(drop_record(text, "conv_q.bias"), ErrorCode::kValidation, "missing parameter conv_q.bias");
}

TEST(ModelFileTest, DimsMismatchIsReshapeError) {
    const std::string text = rerank::serialize_model(fixture::tiny_model());
    expect_error(replace_once(text, R"("name":"fc1.weight","dims":[2,6])", R"("name":"fc1.weight","dims":[2,3])"),
                 ErrorCode::kShape, "reshape error: parameter fc1.weight");
    expect_error(replace_once(text, R"("name":"fc2.bias","dims":[2])", R"("name":"fc2.bias","dims":[3])"), ErrorCode::kShape,
                 "fc2.bias");
}

TEST(ModelFileTest, UnknownVersionIsVersionError) {
    const std::string text = rerank::serialize_model(fixture::tiny_model());
    expect_error(replace_once(text, "\"format_version\":1", "\"format_version\":2"), ErrorCode::kVersion,
                 "format_version");
}

TEST(ModelFileTest, OtherCorruptionsAreRejected) {
    const std::string text = rerank::serialize_model(fixture::tiny_model());
    expect_error("{not json", ErrorCode::kValidation, "malformed");
    expect_error(replace_once(text, "\"embed_dim\":2", "\"embed_dim\":0"), ErrorCode::kValidation, "embed_dim");
    expect_error(replace_once(text, R"(["<unk>","a","b"])", R"(["a","<unk>","b"])"), ErrorCode::kValidation, "<unk>");
    expect_error(replace_once(text, R"(["<unk>","a","b"])", R"(["<unk>","a","a"])"), ErrorCode::kValidation, "");
    // right product, wrong layout for the config
    expect_error(replace_once(text, R"("name":"fc1.weight","dims":[2,6])", R"("name":"fc1.weight","dims":[6,2])"),
                 ErrorCode::kValidation, "fc1.weight");
    const auto last = text.rfind("\n]}");
    std::string extra = text;
    extra.insert(last, ",\n{\"name\":\"extra\",\"dims\":[1],\"weights\":[0]}");
    expect_error(extra, ErrorCode::kValidation, "unexpected parameter extra");
    expect_error(replace_once(text, "\"df\":{\"a\":1", "\"df\":{\"a\":9"), ErrorCode::kValidation, "");
}

TEST(ModelFileTest, MissingFileIsIoError) {
    try {
        rerank::load_model("/nonexistent/model.json");
        FAIL();
    } catch (const rerank::Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kIo);
    }
}

TEST(ShortestReprTest, RoundTripsAndKeepsNegativeZero) {
    EXPECT_EQ(rerank::shortest_repr(0.5), "0.5");
    EXPECT_EQ(rerank::shortest_repr(0.1), "0.1");
    EXPECT_EQ(rerank::shortest_repr(-0.0), "-0.0");
    EXPECT_EQ(rerank::shortest_repr(1.0), "1");
}

TEST(InitModelTest, DeterministicWithZeroBiases) {
    const auto cfg = oracle::small_config(4, 3, 5, 14, oracle::letter_vocab(8));
    const ModelBundle a = rerank::init_model(cfg, 5);
    EXPECT_TRUE(oracle::bit_identical(a, rerank::init_model(cfg, 5)));
    EXPECT_FALSE(oracle::bit_identical(a, rerank::init_model(cfg, 6)));
    for (const auto& p : a.params) {
        if (p.name.ends_with(".bias")) {
            for (double w : p.weights) EXPECT_EQ(w, 0.0);
        }
    }
    rerank::validate_model(a);
}

TEST(InitModelTest, FirstEmbeddingWeightsMatchReferenceGenerator) {
    const ModelBundle b = rerank::init_model(oracle::small_config(2, 2, 1, 6, {"<unk>", "a", "b"}), 42);
    std::uint64_t state = 42;
    for (int i = 0; i < 3; ++i) {
        const double u = oracle::unit_from(oracle::splitmix64(state));
        EXPECT_EQ(b.params[0].weights[i], (2 * u - 1) * 0.25) << i;
    }
}

TEST(InitModelTest, WholeStreamFollowsCanonicalOrderAndScales) {
    const std::size_t d = 3, w = 2, k = 4, hdim = 5, v = 6;
    const ModelBundle b = rerank::init_model(oracle::small_config(d, w, k, hdim, oracle::letter_vocab(v)), 7);
    std::uint64_t state = 7;
    auto draw = [&](double s) { return (2 * oracle::unit_from(oracle::splitmix64(state)) - 1) * s; };
    const double conv_s = std::sqrt(6.0 / (d * w + k * w));
    const double scales[] = {0.25, conv_s, 0, conv_s, 0, std::sqrt(6.0 / (hdim + 2 * k + 4)), 0,
                             std::sqrt(6.0 / (2 + hdim)), 0};
    const char* names[] = {"embeddings", "conv_q.filters", "conv_q.bias", "conv_a.filters", "conv_a.bias",
                           "fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias"};
    ASSERT_EQ(b.params.size(), 9u);
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_EQ(b.params[i].name, names[i]);
        for (double got : b.params[i].weights) {
            if (scales[i] == 0) {
                EXPECT_EQ(got, 0.0);
            } else {
                EXPECT_EQ(got, draw(scales[i])) << names[i];
            }
        }
    }
}

TEST(VocabTest, FrequencyOrderWithUnknownFirst) {
    const auto v = rerank::build_vocab({{"b", "a", "b"}, {"c", "a", "b"}}, 0);
    EXPECT_EQ(v, (std::vector<std::string>{"<unk>", "b", "a", "c"}));
    EXPECT_EQ(rerank::build_vocab({{"b", "a", "b"}}, 2), (std::vector<std::string>{"<unk>", "b"}));
}

TEST(ValidateTest, ExpectedParamsFollowConfig) {
    const auto params = rerank::expected_params(oracle::small_config(2, 3, 4, 7, oracle::letter_vocab(5)));
    ASSERT_EQ(params.size(), 9u);
    EXPECT_EQ(params[0].second, (rerank::Shape{5, 2}));
    EXPECT_EQ(params[1].second, (rerank::Shape{4, 2, 3}));
    EXPECT_EQ(params[5].second, (rerank::Shape{7, 12}));
    EXPECT_EQ(params[7].second, (rerank::Shape{2, 7}));
}
