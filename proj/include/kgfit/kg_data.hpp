#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kgfit {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

/// Dense name <-> id table.
class NameTable {
public:
    /// Returns the id of `name`, inserting it at the end if absent.
    std::int32_t intern(std::string_view name);
    std::optional<std::int32_t> find(std::string_view name) const;
    /// Throws VocabError if absent.
    std::int32_t at(std::string_view name) const;
    const std::string& name(std::int32_t id) const { return names_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    /// Builds a table from explicit (name, id) pairs. Ids must be a dense
    /// permutation of 0..n-1.
    static NameTable from_pairs(const std::vector<std::pair<std::string, std::int32_t>>& pairs);

    bool operator==(const NameTable& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::int32_t> index_;
};

struct Vocab {
    NameTable entities;
    NameTable relations;

    std::size_t num_entities() const { return entities.size(); }
    std::size_t num_relations() const { return relations.size(); }
};

struct Triple {
    EntityId head = 0;
    RelationId rel = 0;
    EntityId tail = 0;

    auto operator<=>(const Triple&) const = default;
};

/// Which end of a triple is being predicted or corrupted.
enum class Side { head, tail };

enum class VocabMode { build, reuse };

/// Parses a `head<TAB>relation<TAB>tail` file. Under `build`, unseen names
/// are appended to `vocab` in first-appearance order; under `reuse`, an unseen
/// name raises VocabError. Duplicate triples inside the file raise
/// DatasetError.
std::vector<Triple> load_triples(const std::filesystem::path& path, Vocab& vocab, VocabMode mode);

/// Same as above, operating on in-memory text. `source` names the input in
/// error messages.
std::vector<Triple> parse_triples(std::string_view text, Vocab& vocab, VocabMode mode,
                                  std::string_view source = "<memory>");

/// Reads a `name<TAB>id` sidecar such as entity2id.tsv.
NameTable load_id_map(const std::filesystem::path& path);

struct Dataset {
    Vocab vocab;
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;

    /// Union of all splits, deduplicated.
    std::set<Triple> all_known() const;
    void validate() const;
};

/// Loads train.tsv, valid.tsv and test.tsv from `dir` (valid/test optional).
/// When entity2id.tsv / relation2id.tsv exist they fix the ids and every name
/// must resolve through them.
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes the dataset as TSV files plus id sidecars under `dir`.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Known-true completions over all splits, used for filtered ranking and
/// filtered negative sampling.
class FilterIndex {
public:
    void add(const Triple& t);

    /// Tails t such that (head, rel, t) is known.
    const std::set<EntityId>& tails(EntityId head, RelationId rel) const;
    /// Heads h such that (h, rel, tail) is known.
    const std::set<EntityId>& heads(RelationId rel, EntityId tail) const;

    bool contains(const Triple& t) const;
    bool empty() const { return tails_.empty(); }

private:
    std::map<std::pair<EntityId, RelationId>, std::set<EntityId>> tails_;
    std::map<std::pair<RelationId, EntityId>, std::set<EntityId>> heads_;
};

FilterIndex build_filter_index(const Dataset& ds);

}  // namespace kgfit
