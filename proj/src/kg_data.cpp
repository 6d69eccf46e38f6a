#include "kgfit/kg_data.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "kgfit/error.hpp"
#include "kgfit/io.hpp"

namespace kgfit {

namespace fs = std::filesystem;

std::int32_t NameTable::intern(std::string_view name) {
    std::string key(name);
    auto it = index_.find(key);
    if (it != index_.end()) {
        return it->second;
    }
    const auto id = static_cast<std::int32_t>(names_.size());
    names_.push_back(key);
    index_.emplace(std::move(key), id);
    return id;
}

std::optional<std::int32_t> NameTable::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::int32_t NameTable::at(std::string_view name) const {
    if (auto id = find(name)) {
        return *id;
    }
    throw VocabError("unknown name '" + std::string(name) + "'");
}

NameTable NameTable::from_pairs(const std::vector<std::pair<std::string, std::int32_t>>& pairs) {
    std::vector<const std::string*> slots(pairs.size(), nullptr);
    for (const auto& [name, id] : pairs) {
        if (id < 0 || static_cast<std::size_t>(id) >= pairs.size() || slots[id] != nullptr) {
            throw VocabError("id map is not a dense permutation (id " + std::to_string(id) + ")");
        }
        slots[id] = &name;
    }
    NameTable t;
    for (const auto* name : slots) {
        if (t.find(*name)) {
            throw VocabError("duplicate name '" + *name + "' in id map");
        }
        t.intern(*name);
    }
    return t;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            cols.push_back(line.substr(start));
            break;
        }
        cols.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cols;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        ++line_no;
        fn(line_no, line);
        start = end + 1;
    }
}

}  // namespace

std::vector<Triple> parse_triples(std::string_view text, Vocab& vocab, VocabMode mode,
                                  std::string_view source) {
    std::vector<Triple> out;
    std::set<Triple> seen;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (line.empty()) {
            return;
        }
        auto cols = split_tabs(line);
        if (cols.size() != 3 || cols[0].empty() || cols[1].empty() || cols[2].empty()) {
            throw ParseError(std::string(source) + ":" + std::to_string(line_no) +
                             ": expected 3 tab-separated columns, got " +
                             std::to_string(cols.size()));
        }
        Triple t;
        if (mode == VocabMode::build) {
            t.head = vocab.entities.intern(cols[0]);
            t.rel = vocab.relations.intern(cols[1]);
            t.tail = vocab.entities.intern(cols[2]);
        } else {
            auto resolve = [&](const NameTable& table, std::string_view name, const char* what) {
                auto id = table.find(name);
                if (!id) {
                    throw VocabError(std::string(source) + ":" + std::to_string(line_no) +
                                     ": unknown " + what + " '" + std::string(name) + "'");
                }
                return *id;
            };
            t.head = resolve(vocab.entities, cols[0], "entity");
            t.rel = resolve(vocab.relations, cols[1], "relation");
            t.tail = resolve(vocab.entities, cols[2], "entity");
        }
        if (!seen.insert(t).second) {
            throw DatasetError(std::string(source) + ":" + std::to_string(line_no) +
                               ": duplicate triple within split");
        }
        out.push_back(t);
    });
    return out;
}

std::vector<Triple> load_triples(const fs::path& path, Vocab& vocab, VocabMode mode) {
    return parse_triples(io::read_text(path), vocab, mode, path.string());
}

NameTable load_id_map(const fs::path& path) {
    const std::string text = io::read_text(path);
    std::vector<std::pair<std::string, std::int32_t>> pairs;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (line.empty()) {
            return;
        }
        auto cols = split_tabs(line);
        std::int32_t id = -1;
        if (cols.size() != 2 ||
            std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), id).ec != std::errc{}) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected name<TAB>id");
        }
        pairs.emplace_back(std::string(cols[0]), id);
    });
    return NameTable::from_pairs(pairs);
}

std::set<Triple> Dataset::all_known() const {
    std::set<Triple> all(train.begin(), train.end());
    all.insert(valid.begin(), valid.end());
    all.insert(test.begin(), test.end());
    return all;
}

void Dataset::validate() const {
    const auto ne = static_cast<EntityId>(vocab.num_entities());
    const auto nr = static_cast<RelationId>(vocab.num_relations());
    for (const auto* split : {&train, &valid, &test}) {
        std::set<Triple> seen;
        for (const auto& t : *split) {
            if (t.head < 0 || t.head >= ne || t.tail < 0 || t.tail >= ne || t.rel < 0 ||
                t.rel >= nr) {
                throw DatasetError("triple id out of vocabulary bounds");
            }
            if (!seen.insert(t).second) {
                throw DatasetError("duplicate triple within split");
            }
        }
    }
}

Dataset load_dataset(const fs::path& dir) {
    Dataset ds;
    const bool fixed_entities = fs::exists(dir / "entity2id.tsv");
    const bool fixed_relations = fs::exists(dir / "relation2id.tsv");
    if (fixed_entities) {
        ds.vocab.entities = load_id_map(dir / "entity2id.tsv");
    }
    if (fixed_relations) {
        ds.vocab.relations = load_id_map(dir / "relation2id.tsv");
    }
    // Reuse mode is all-or-nothing; with a single sidecar we check the other
    // table ourselves after a build-mode load.
    const VocabMode mode =
        fixed_entities && fixed_relations ? VocabMode::reuse : VocabMode::build;
    const auto ents_before = ds.vocab.entities.size();
    const auto rels_before = ds.vocab.relations.size();

    auto load_split = [&](const char* file, bool required) -> std::vector<Triple> {
        const fs::path p = dir / file;
        if (!fs::exists(p)) {
            if (required) {
                throw IoError("cannot open " + p.string() + ": file not found");
            }
            return {};
        }
        return load_triples(p, ds.vocab, mode);
    };
    ds.train = load_split("train.tsv", true);
    ds.valid = load_split("valid.tsv", false);
    ds.test = load_split("test.tsv", false);

    if (fixed_entities && ds.vocab.entities.size() != ents_before) {
        throw VocabError("entity not listed in entity2id.tsv: '" +
                         ds.vocab.entities.name(static_cast<std::int32_t>(ents_before)) + "'");
    }
    if (fixed_relations && ds.vocab.relations.size() != rels_before) {
        throw VocabError("relation not listed in relation2id.tsv: '" +
                         ds.vocab.relations.name(static_cast<std::int32_t>(rels_before)) + "'");
    }
    ds.validate();
    return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
    auto write_split = [&](const char* file, const std::vector<Triple>& split) {
        std::string out;
        for (const auto& t : split) {
            out += ds.vocab.entities.name(t.head);
            out += '\t';
            out += ds.vocab.relations.name(t.rel);
            out += '\t';
            out += ds.vocab.entities.name(t.tail);
            out += '\n';
        }
        io::write_text(dir / file, out);
    };
    write_split("train.tsv", ds.train);
    write_split("valid.tsv", ds.valid);
    write_split("test.tsv", ds.test);
    auto write_ids = [&](const char* file, const NameTable& table) {
        std::string out;
        for (std::size_t i = 0; i < table.size(); ++i) {
            out += table.names()[i] + '\t' + std::to_string(i) + '\n';
        }
        io::write_text(dir / file, out);
    };
    write_ids("entity2id.tsv", ds.vocab.entities);
    write_ids("relation2id.tsv", ds.vocab.relations);
}

void FilterIndex::add(const Triple& t) {
    tails_[{t.head, t.rel}].insert(t.tail);
    heads_[{t.rel, t.tail}].insert(t.head);
}

const std::set<EntityId>& FilterIndex::tails(EntityId head, RelationId rel) const {
    static const std::set<EntityId> kEmpty;
    auto it = tails_.find({head, rel});
    return it == tails_.end() ? kEmpty : it->second;
}

const std::set<EntityId>& FilterIndex::heads(RelationId rel, EntityId tail) const {
    static const std::set<EntityId> kEmpty;
    auto it = heads_.find({rel, tail});
    return it == heads_.end() ? kEmpty : it->second;
}

bool FilterIndex::contains(const Triple& t) const {
    return tails(t.head, t.rel).contains(t.tail);
}

FilterIndex build_filter_index(const Dataset& ds) {
    FilterIndex index;
    for (const auto* split : {&ds.train, &ds.valid, &ds.test}) {
        for (const auto& t : *split) {
            index.add(t);
        }
    }
    return index;
}

}  // namespace kgfit
