#include "kgfit/kge_models.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "kgfit/error.hpp"
#include "kgfit/io.hpp"
#include "kgfit/rng.hpp"

namespace kgfit {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

void fill_zero(GradView g) { std::fill(g.begin(), g.end(), 0.0); }

bool grads_wanted(GradView gh) { return !gh.empty(); }

double transe(const ModelConstants& c, RowView h, RowView r, RowView t, GradView gh, GradView gr,
              GradView gt) {
    const std::size_t n = h.size();
    const bool want = grads_wanted(gh);
    if (c.p_norm == 1) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = h[i] + r[i] - t[i];
            s += std::abs(u);
            if (want) {
                gh[i] = -sign(u);
                gr[i] = -sign(u);
                gt[i] = sign(u);
            }
        }
        return -s;
    }
    double sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = h[i] + r[i] - t[i];
        sq += u * u;
    }
    const double norm = std::sqrt(sq);
    if (want) {
        for (std::size_t i = 0; i < n; ++i) {
            const double u = h[i] + r[i] - t[i];
            const double g = norm > 0 ? u / norm : 0.0;
            gh[i] = -g;
            gr[i] = -g;
            gt[i] = g;
        }
    }
    return -norm;
}

double distmult(RowView h, RowView r, RowView t, GradView gh, GradView gr, GradView gt) {
    double s = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        s += h[i] * r[i] * t[i];
        if (grads_wanted(gh)) {
            gh[i] = r[i] * t[i];
            gr[i] = h[i] * t[i];
            gt[i] = h[i] * r[i];
        }
    }
    return s;
}

double complex_score(RowView h, RowView r, RowView t, GradView gh, GradView gr, GradView gt) {
    const std::size_t k = h.size() / 2;
    double s = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double a = h[i], b = h[k + i];
        const double c = r[i], d = r[k + i];
        const double e = t[i], f = t[k + i];
        s += a * c * e + b * c * f + a * d * f - b * d * e;
        if (grads_wanted(gh)) {
            gh[i] = c * e + d * f;
            gh[k + i] = c * f - d * e;
            gr[i] = a * e + b * f;
            gr[k + i] = a * f - b * e;
            gt[i] = a * c - b * d;
            gt[k + i] = b * c + a * d;
        }
    }
    return s;
}

// sum_i |sin((x_h + x_r - x_t) / 2)| and its partials scaled by `scale`.
double phase_term(RowView ph, RowView pr, RowView pt, double scale, double* gh, double* gr,
                  double* gt) {
    double s = 0;
    for (std::size_t i = 0; i < ph.size(); ++i) {
        const double x = 0.5 * (ph[i] + pr[i] - pt[i]);
        const double sn = std::sin(x);
        s += std::abs(sn);
        if (gh) {
            const double g = scale * 0.5 * sign(sn) * std::cos(x);
            gh[i] = g;
            gr[i] = g;
            gt[i] = -g;
        }
    }
    return s;
}

double protate(const ModelConstants& c, RowView h, RowView r, RowView t, GradView gh, GradView gr,
               GradView gt) {
    const bool want = grads_wanted(gh);
    const double s = phase_term(h, r, t, -2.0 * c.modulus, want ? gh.data() : nullptr,
                                want ? gr.data() : nullptr, want ? gt.data() : nullptr);
    return -2.0 * c.modulus * s;
}

double rotate(RowView h, RowView r, RowView t, GradView gh, GradView gr, GradView gt) {
    const std::size_t k = h.size() / 2;
    double sq = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double a = h[i], b = h[k + i];
        const double cs = std::cos(r[i]), sn = std::sin(r[i]);
        const double u = a * cs - b * sn - t[i];
        const double v = a * sn + b * cs - t[k + i];
        sq += u * u + v * v;
    }
    const double norm = std::sqrt(sq);
    if (grads_wanted(gh)) {
        const double inv = norm > 0 ? 1.0 / norm : 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double a = h[i], b = h[k + i];
            const double cs = std::cos(r[i]), sn = std::sin(r[i]);
            const double u = (a * cs - b * sn - t[i]) * inv;
            const double v = (a * sn + b * cs - t[k + i]) * inv;
            gh[i] = -(u * cs + v * sn);
            gh[k + i] = -(-u * sn + v * cs);
            gr[i] = -(u * (-a * sn - b * cs) + v * (a * cs - b * sn));
            gt[i] = u;
            gt[k + i] = v;
        }
    }
    return -norm;
}

double hake(RowView h, RowView r, RowView t, GradView gh, GradView gr, GradView gt) {
    const std::size_t k = h.size() / 2;
    const double lambda = r[2 * k];
    const bool want = grads_wanted(gh);
    // phase part
    const double p = phase_term(h.subspan(0, k), r.subspan(0, k), t.subspan(0, k), -lambda,
                                want ? gh.data() : nullptr, want ? gr.data() : nullptr,
                                want ? gt.data() : nullptr);
    // modulus part
    double sq = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double w = h[k + i] * r[k + i] - t[k + i];
        sq += w * w;
    }
    const double m = std::sqrt(sq);
    if (want) {
        const double inv = m > 0 ? 1.0 / m : 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double w = (h[k + i] * r[k + i] - t[k + i]) * inv;
            gh[k + i] = -w * r[k + i];
            gr[k + i] = -w * h[k + i];
            gt[k + i] = w;
        }
        gr[2 * k] = -p;
    }
    return -m - lambda * p;
}

double dispatch(ModelFamily f, const ModelConstants& c, RowView h, RowView r, RowView t,
                GradView gh, GradView gr, GradView gt) {
    switch (f) {
        case ModelFamily::transe:
            return transe(c, h, r, t, gh, gr, gt);
        case ModelFamily::distmult:
            return distmult(h, r, t, gh, gr, gt);
        case ModelFamily::complex:
            return complex_score(h, r, t, gh, gr, gt);
        case ModelFamily::protate:
            return protate(c, h, r, t, gh, gr, gt);
        case ModelFamily::rotate:
            return rotate(h, r, t, gh, gr, gt);
        case ModelFamily::hake:
            return hake(h, r, t, gh, gr, gt);
    }
    throw ConfigError("unknown model family");
}

void check_rows(ModelFamily f, RowView h, RowView r, RowView t) {
    if (h.size() != t.size() || r.size() != relation_width(f, h.size())) {
        throw DimensionError("score rows have inconsistent widths");
    }
}

}  // namespace

std::string family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::transe: return "transe";
        case ModelFamily::distmult: return "distmult";
        case ModelFamily::complex: return "complex";
        case ModelFamily::protate: return "protate";
        case ModelFamily::rotate: return "rotate";
        case ModelFamily::hake: return "hake";
    }
    return "unknown";
}

ModelFamily parse_family(const std::string& name) {
    for (auto f : {ModelFamily::transe, ModelFamily::distmult, ModelFamily::complex,
                   ModelFamily::protate, ModelFamily::rotate, ModelFamily::hake}) {
        if (family_name(f) == name) {
            return f;
        }
    }
    throw ConfigError("unknown model '" + name +
                      "' (expected transe, distmult, complex, protate, rotate or hake)");
}

std::size_t relation_width(ModelFamily f, std::size_t n) {
    switch (f) {
        case ModelFamily::rotate:
            return n / 2;
        case ModelFamily::hake:
            return n + 1;
        default:
            return n;
    }
}

void ModelState::validate() const {
    const std::size_t n = entities.cols();
    if (n == 0 || n % 2 != 0) {
        throw DimensionError("entity width must be even and positive, got " + std::to_string(n));
    }
    if (relations.cols() != relation_width(family, n)) {
        throw DimensionError("relation width " + std::to_string(relations.cols()) + " does not fit " +
                             family_name(family) + " with entity width " + std::to_string(n));
    }
    if (family == ModelFamily::transe && constants.p_norm != 1 && constants.p_norm != 2) {
        throw ConfigError("TransE norm must be 1 or 2");
    }
}

double score_rows(ModelFamily f, const ModelConstants& c, RowView h, RowView r, RowView t) {
    check_rows(f, h, r, t);
    return dispatch(f, c, h, r, t, {}, {}, {});
}

double score_grad_rows(ModelFamily f, const ModelConstants& c, RowView h, RowView r, RowView t,
                       GradView gh, GradView gr, GradView gt) {
    check_rows(f, h, r, t);
    if (gh.size() != h.size() || gr.size() != r.size() || gt.size() != t.size()) {
        throw DimensionError("gradient buffers have the wrong width");
    }
    fill_zero(gh);
    fill_zero(gr);
    fill_zero(gt);
    return dispatch(f, c, h, r, t, gh, gr, gt);
}

double score(const ModelState& s, EntityId h, RelationId r, EntityId t) {
    return score_rows(s.family, s.constants, s.entities.row(static_cast<std::size_t>(h)),
                      s.relations.row(static_cast<std::size_t>(r)),
                      s.entities.row(static_cast<std::size_t>(t)));
}

ScoreGrad score_grad(const ModelState& s, EntityId h, RelationId r, EntityId t) {
    ScoreGrad out;
    out.grad_h.resize(s.entities.cols());
    out.grad_t.resize(s.entities.cols());
    out.grad_r.resize(s.relations.cols());
    out.score = score_grad_rows(s.family, s.constants, s.entities.row(static_cast<std::size_t>(h)),
                                s.relations.row(static_cast<std::size_t>(r)),
                                s.entities.row(static_cast<std::size_t>(t)), out.grad_h,
                                out.grad_r, out.grad_t);
    return out;
}

Matrix init_relations(ModelFamily f, std::size_t num_relations, std::size_t n, double psi,
                      std::uint64_t seed) {
    if (!(psi > 0.0)) {
        throw ConfigError("psi must be positive");
    }
    if (n == 0 || n % 2 != 0) {
        throw DimensionError("entity width must be even and positive");
    }
    const std::size_t width = relation_width(f, n);
    Matrix out(num_relations, width);
    Rng rng(seed);
    for (std::size_t i = 0; i < num_relations; ++i) {
        auto row = out.row(i);
        for (std::size_t j = 0; j < width; ++j) {
            bool phase = false;
            switch (f) {
                case ModelFamily::protate:
                case ModelFamily::rotate:
                    phase = true;
                    break;
                case ModelFamily::hake:
                    if (j == n) {
                        row[j] = 1.0;
                        continue;
                    }
                    phase = j < n / 2;
                    break;
                default:
                    break;
            }
            row[j] = phase ? kTwoPi * uniform_unit(rng) : psi * standard_normal(rng);
        }
    }
    return out;
}

std::string vocab_hash(const NameTable& table) {
    std::string joined;
    for (const auto& n : table.names()) {
        joined += n;
        joined += '\n';
    }
    return io::sha256_hex(joined);
}

void save_checkpoint(const std::filesystem::path& dir, const ModelState& s, const Vocab& vocab) {
    s.validate();
    std::filesystem::create_directories(dir);
    io::write_matrix(dir / "entities.kgfe", s.entities);
    io::write_matrix(dir / "relations.kgfe", s.relations);
    nlohmann::ordered_json j;
    j["family"] = family_name(s.family);
    j["n"] = s.entities.cols();
    j["m_rel"] = s.relations.cols();
    j["gamma"] = s.gamma;
    j["constants"] = {{"p_norm", s.constants.p_norm}, {"modulus", s.constants.modulus}};
    j["entity_vocab_sha256"] = vocab_hash(vocab.entities);
    j["relation_vocab_sha256"] = vocab_hash(vocab.relations);
    io::write_text(dir / "meta.json", j.dump(2) + "\n");
}

ModelState load_checkpoint(const std::filesystem::path& dir, const Vocab* vocab) {
    ModelState s;
    try {
        const auto j = nlohmann::json::parse(io::read_text(dir / "meta.json"));
        s.family = parse_family(j.at("family").get<std::string>());
        s.gamma = j.at("gamma").get<double>();
        s.constants.p_norm = j.at("constants").at("p_norm").get<int>();
        s.constants.modulus = j.at("constants").at("modulus").get<double>();
        if (vocab) {
            if (j.at("entity_vocab_sha256").get<std::string>() != vocab_hash(vocab->entities) ||
                j.at("relation_vocab_sha256").get<std::string>() != vocab_hash(vocab->relations)) {
                throw VocabError("checkpoint " + dir.string() + " was trained on a different vocabulary");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError((dir / "meta.json").string() + ": " + e.what());
    }
    s.entities = io::read_matrix(dir / "entities.kgfe");
    s.relations = io::read_matrix(dir / "relations.kgfe");
    s.validate();
    return s;
}

}  // namespace kgfit
