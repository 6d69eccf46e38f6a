#include "kgfit/text_embed.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "kgfit/error.hpp"
#include "kgfit/io.hpp"
#include "kgfit/rng.hpp"

namespace kgfit {

void TextEmbeddingStore::validate() const {
    if (name.cols() == 0 || desc.cols() == 0) {
        throw DimensionError("text embedding width must be positive");
    }
    if (name.cols() != desc.cols() || name.rows() != desc.rows()) {
        throw DimensionError("name and description matrices differ in shape (" +
                             std::to_string(name.rows()) + "x" + std::to_string(name.cols()) +
                             " vs " + std::to_string(desc.rows()) + "x" +
                             std::to_string(desc.cols()) + ")");
    }
    auto finite = [](const Matrix& m) {
        return std::all_of(m.data().begin(), m.data().end(),
                           [](double v) { return std::isfinite(v); });
    };
    if (!finite(name) || !finite(desc)) {
        throw DomainError("text embeddings contain NaN or Inf");
    }
}

Matrix enrich(const TextEmbeddingStore& store) {
    store.validate();
    const std::size_t d = store.dim();
    Matrix out(store.num_entities(), 2 * d);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto dst = out.row(i);
        std::ranges::copy(store.name.row(i), dst.begin());
        std::ranges::copy(store.desc.row(i), dst.begin() + static_cast<std::ptrdiff_t>(d));
    }
    return out;
}

Matrix slice_init(const TextEmbeddingStore& store, std::size_t n) {
    store.validate();
    if (n == 0 || n % 2 != 0) {
        throw DimensionError("entity dimension must be a positive even number, got " +
                             std::to_string(n));
    }
    const std::size_t half = n / 2;
    if (half > store.dim()) {
        throw DimensionError("entity dimension " + std::to_string(n) +
                             " exceeds twice the text embedding width " +
                             std::to_string(store.dim()));
    }
    Matrix out(store.num_entities(), n);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto dst = out.row(i);
        std::copy_n(store.name.row(i).begin(), half, dst.begin());
        std::copy_n(store.desc.row(i).begin(), half, dst.begin() + static_cast<std::ptrdiff_t>(half));
    }
    return out;
}

Matrix init_entities(const Matrix& sliced, double rho, std::uint64_t seed) {
    if (!(rho >= 0.0 && rho <= 1.0)) {
        throw ConfigError("rho must lie in [0, 1]");
    }
    Rng rng(seed);
    const double bound = sliced.cols() > 0 ? 1.0 / std::sqrt(static_cast<double>(sliced.cols())) : 0.0;
    Matrix out(sliced.rows(), sliced.cols());
    for (std::size_t k = 0; k < out.data().size(); ++k) {
        const double random = (2.0 * uniform_unit(rng) - 1.0) * bound;
        out.data()[k] = rho * random + (1.0 - rho) * sliced.data()[k];
    }
    return out;
}

std::map<EntityId, std::string> load_descriptions(const std::filesystem::path& path,
                                                  const NameTable& entities) {
    const std::string text = io::read_text(path);
    std::map<EntityId, std::string> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) {
            end = text.size();
        }
        ++line_no;
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        if (line.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("entity") || !j.contains("description") || !j["entity"].is_string() ||
            !j["description"].is_string()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected {\"entity\", \"description\"} strings");
        }
        out[entities.at(j["entity"].get<std::string>())] = j["description"].get<std::string>();
    }
    return out;
}

void save_descriptions(const std::filesystem::path& path,
                       const std::map<EntityId, std::string>& descriptions,
                       const NameTable& entities) {
    std::string out;
    for (const auto& [id, text] : descriptions) {
        nlohmann::ordered_json j;
        j["entity"] = entities.name(id);
        j["description"] = text;
        out += j.dump() + '\n';
    }
    io::write_text(path, out);
}

TextEmbeddingStore load_text_embeddings(const std::filesystem::path& name_path,
                                        const std::filesystem::path& desc_path,
                                        const NameTable& entities,
                                        const std::filesystem::path& descriptions_path) {
    TextEmbeddingStore store;
    store.name = io::read_matrix(name_path);
    store.desc = io::read_matrix(desc_path);
    store.validate();
    if (store.num_entities() != entities.size()) {
        throw DimensionError("embedding row count " + std::to_string(store.num_entities()) +
                             " does not match entity count " + std::to_string(entities.size()));
    }
    if (!descriptions_path.empty()) {
        store.descriptions = load_descriptions(descriptions_path, entities);
    }
    return store;
}

}  // namespace kgfit
