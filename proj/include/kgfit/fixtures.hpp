#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kgfit/kg_data.hpp"
#include "kgfit/text_embed.hpp"

namespace kgfit {

/// Synthetic clustered KG. Entity `c<i>_e<j>` is member j of cluster i.
struct ToyKGSpec {
    std::size_t clusters = 8;
    std::size_t per_cluster = 8;
    std::size_t text_dim = 32;  ///< width of each of the name / description vectors
    double noise = 0.05;
    double holdout = 0.1;
    std::uint64_t seed = 7;

    /// Throws ConfigError unless clusters >= 2, per_cluster >= 2,
    /// text_dim >= 1, noise >= 0 and holdout in (0, 1).
    void validate() const;
};

struct ToyKG {
    Dataset data;
    TextEmbeddingStore text;
    std::vector<std::int32_t> labels;  ///< ground-truth cluster per entity
};

/// Name and description vectors are a per-cluster Gaussian centroid plus
/// `noise` times standard normal noise. Relation `intra` links each cluster
/// member to the next one around a ring; relation `cross` links the first
/// member of cluster i to the first member of cluster i+1. Test and valid
/// each receive round(holdout * #triples) triples, drawn from the intra
/// ring edges only; everything else is training data.
ToyKG generate_toy(const ToyKGSpec& spec);

/// Two clusters of seven entities, holdout 0.2: the small KG used for
/// oracle comparisons.
ToyKG toy_kg14(std::uint64_t seed = 7);

ToyKGSpec toy_spec_from_json(const std::string& text);

/// Writes train/valid/test TSVs with id sidecars, name.kgfe, desc.kgfe,
/// descriptions.jsonl and labels.tsv into `dir`.
void save_toy(const ToyKG& toy, const std::filesystem::path& dir);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b);

}  // namespace kgfit
