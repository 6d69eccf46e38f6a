#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "kgfit/kg_data.hpp"
#include "kgfit/matrix.hpp"

namespace kgfit {

/// Per-entity name and description text embeddings, rows ordered by entity id.
struct TextEmbeddingStore {
    Matrix name;  ///< |E| x dim_f
    Matrix desc;  ///< |E| x dim_f
    std::map<EntityId, std::string> descriptions;

    std::size_t dim() const { return name.cols(); }
    std::size_t num_entities() const { return name.rows(); }

    /// Throws DimensionError on shape mismatch or zero width, DomainError on
    /// non-finite entries.
    void validate() const;
};

/// Rows are [name_i ; desc_i], width 2 * dim_f.
Matrix enrich(const TextEmbeddingStore& store);

/// Rows are [name_i[:n/2] ; desc_i[:n/2]].
Matrix slice_init(const TextEmbeddingStore& store, std::size_t n);

/// e_i = rho * e'_i + (1 - rho) * v'_i with e'_i ~ U(-1/sqrt(n), 1/sqrt(n)).
/// The random draw always happens, so the stream does not depend on rho.
Matrix init_entities(const Matrix& sliced, double rho, std::uint64_t seed);

/// Loads the name/desc KGFE matrices and, if present, the descriptions JSONL
/// (`{"entity": name, "description": text}` per line).
TextEmbeddingStore load_text_embeddings(const std::filesystem::path& name_path,
                                        const std::filesystem::path& desc_path,
                                        const NameTable& entities,
                                        const std::filesystem::path& descriptions_path = {});

std::map<EntityId, std::string> load_descriptions(const std::filesystem::path& path,
                                                  const NameTable& entities);
void save_descriptions(const std::filesystem::path& path,
                       const std::map<EntityId, std::string>& descriptions,
                       const NameTable& entities);

}  // namespace kgfit
