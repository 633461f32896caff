#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rerank/tensor.hpp"
#include "rerank/textproc.hpp"

namespace rerank {

inline constexpr int kModelFormatVersion = 1;
inline constexpr std::string_view kUnknownToken = "<unk>";

struct ParamRecord {
    std::string name;
    Shape dims;
    std::vector<double> weights;

    Tensor tensor() const { return Tensor(dims, weights); }
    bool operator==(const ParamRecord&) const = default;
};

struct ModelConfig {
    std::size_t embed_dim = 50;
    std::size_t filter_width = 5;
    std::size_t num_filters = 100;
    std::size_t hidden_size = 204;
    std::vector<std::string> vocab{std::string(kUnknownToken)};
    std::vector<std::string> stopwords = default_stopwords();
    IdfTable idf;

    std::size_t join_width() const { return 2 * num_filters + 4; }
    bool operator==(const ModelConfig&) const = default;
};

struct ModelBundle {
    ModelConfig config;
    std::vector<ParamRecord> params;

    const ParamRecord& param(std::string_view name) const;
    bool operator==(const ModelBundle&) const = default;
};

/// Canonical record names and dims, in canonical order.
std::vector<std::pair<std::string, Shape>> expected_params(const ModelConfig& config);

void validate_config(const ModelConfig& config);

/// Full structural check: config invariants, every record present with the
/// expected dims, reshape contract, finite weights, no extras.
void validate_model(const ModelBundle& bundle);

/// Shortest decimal that parses back to the identical double.
std::string shortest_repr(double value);

std::string serialize_model(const ModelBundle& bundle);
ModelBundle parse_model(std::string_view text);

void save_model(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    /// Uniform in [0, 1) from the top 53 bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Deterministic stand-in for trained weights: scaled uniform draws, records
/// filled in canonical order, biases zero (and consuming no draws).
ModelBundle init_model(const ModelConfig& config, std::uint64_t seed);

/// `<unk>` followed by corpus terms ordered by descending collection frequency,
/// then lexicographically; max_size 0 keeps every term.
std::vector<std::string> build_vocab(const std::vector<TokenSeq>& corpus, std::size_t max_size);

}  // namespace rerank
