#include "kgfit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "kgfit/error.hpp"
#include "kgfit/evaluator.hpp"
#include "kgfit/io.hpp"
#include "kgfit/text_embed.hpp"

namespace kgfit {

namespace {

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void add_scaled(std::span<double> dst, std::span<const double> src, double scale) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += scale * src[i];
    }
}

const char* mode_name(ConstraintMode m) { return m == ConstraintMode::full ? "full" : "partial"; }
const char* sign_name(AnchorSign s) { return s == AnchorSign::attract ? "attract" : "literal"; }

}  // namespace

void TrainConfig::validate() const {
    parse_family(model);
    for (double w : {lambda1, lambda2, lambda3, zeta1, zeta2, zeta3}) {
        if (!(w >= 0.0)) {
            throw ConfigError("constraint weights must be nonnegative");
        }
    }
    if (dim == 0 || dim % 2 != 0) {
        throw ConfigError("dim must be even and positive");
    }
    if (!(rho >= 0.0 && rho <= 1.0)) {
        throw ConfigError("rho must lie in [0, 1]");
    }
    if (!(psi > 0.0)) {
        throw ConfigError("psi must be positive");
    }
    if (!(beta0 > 0.0) || !(phi >= 0.0)) {
        throw ConfigError("beta0 must be positive and phi nonnegative");
    }
    if (negatives == 0 || batch_size == 0) {
        throw ConfigError("negatives and batch_size must be at least 1");
    }
    if (!(learning_rate > 0.0)) {
        throw ConfigError("learning_rate must be positive");
    }
    if (p_norm != 1 && p_norm != 2) {
        throw ConfigError("p_norm must be 1 or 2");
    }
    if (valid_every == 0) {
        throw ConfigError("valid_every must be at least 1");
    }
}

TrainConfig train_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    TrainConfig c;
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto& k = it.key();
            const auto& v = it.value();
            if (k == "model") c.model = v.get<std::string>();
            else if (k == "dim") c.dim = v.get<std::size_t>();
            else if (k == "p_norm") c.p_norm = v.get<int>();
            else if (k == "modulus") c.modulus = v.get<double>();
            else if (k == "lambda1") c.lambda1 = v.get<double>();
            else if (k == "lambda2") c.lambda2 = v.get<double>();
            else if (k == "lambda3") c.lambda3 = v.get<double>();
            else if (k == "zeta1") c.zeta1 = v.get<double>();
            else if (k == "zeta2") c.zeta2 = v.get<double>();
            else if (k == "zeta3") c.zeta3 = v.get<double>();
            else if (k == "rho") c.rho = v.get<double>();
            else if (k == "psi") c.psi = v.get<double>();
            else if (k == "beta0") c.beta0 = v.get<double>();
            else if (k == "phi") c.phi = v.get<double>();
            else if (k == "neighbors") c.neighbors = v.get<std::size_t>();
            else if (k == "gamma") c.gamma = v.get<double>();
            else if (k == "negatives") c.negatives = v.get<std::size_t>();
            else if (k == "filter_negatives") c.filter_negatives = v.get<bool>();
            else if (k == "batch_size") c.batch_size = v.get<std::size_t>();
            else if (k == "learning_rate") c.learning_rate = v.get<double>();
            else if (k == "adam_beta1") c.adam_beta1 = v.get<double>();
            else if (k == "adam_beta2") c.adam_beta2 = v.get<double>();
            else if (k == "adam_eps") c.adam_eps = v.get<double>();
            else if (k == "max_epochs") c.max_epochs = v.get<std::size_t>();
            else if (k == "valid_every") c.valid_every = v.get<std::size_t>();
            else if (k == "plateau_patience") c.plateau_patience = v.get<std::size_t>();
            else if (k == "live_centroids") c.live_centroids = v.get<bool>();
            else if (k == "seed") c.seed = v.get<std::uint64_t>();
            else if (k == "mode") {
                const auto s = v.get<std::string>();
                if (s == "full") c.mode = ConstraintMode::full;
                else if (s == "partial") c.mode = ConstraintMode::partial;
                else throw ConfigError("mode must be full or partial");
            } else if (k == "anchor_sign") {
                const auto s = v.get<std::string>();
                if (s == "attract") c.anchor_sign = AnchorSign::attract;
                else if (s == "literal") c.anchor_sign = AnchorSign::literal;
                else throw ConfigError("anchor_sign must be attract or literal");
            } else {
                throw ConfigError("unknown config key '" + k + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config value has the wrong type: ") + e.what());
    }
    c.validate();
    return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    return train_config_from_json(io::read_text(path));
}

std::string train_config_to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["model"] = c.model;
    j["dim"] = c.dim;
    j["p_norm"] = c.p_norm;
    j["modulus"] = c.modulus;
    j["lambda1"] = c.lambda1;
    j["lambda2"] = c.lambda2;
    j["lambda3"] = c.lambda3;
    j["zeta1"] = c.zeta1;
    j["zeta2"] = c.zeta2;
    j["zeta3"] = c.zeta3;
    j["rho"] = c.rho;
    j["psi"] = c.psi;
    j["beta0"] = c.beta0;
    j["phi"] = c.phi;
    j["neighbors"] = c.neighbors;
    j["gamma"] = c.gamma;
    j["negatives"] = c.negatives;
    j["filter_negatives"] = c.filter_negatives;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["adam_beta1"] = c.adam_beta1;
    j["adam_beta2"] = c.adam_beta2;
    j["adam_eps"] = c.adam_eps;
    j["max_epochs"] = c.max_epochs;
    j["valid_every"] = c.valid_every;
    j["plateau_patience"] = c.plateau_patience;
    j["mode"] = mode_name(c.mode);
    j["anchor_sign"] = sign_name(c.anchor_sign);
    j["live_centroids"] = c.live_centroids;
    j["seed"] = c.seed;
    return j.dump(2) + "\n";
}

double total_loss(double hier, double anchor, double link, double zeta1, double zeta2, double zeta3) {
    return zeta1 * hier + zeta2 * anchor + zeta3 * link;
}

double cosine_distance_grad(std::span<const double> a, std::span<const double> b, double scale,
                            std::span<double> out) {
    if (a.size() != b.size()) {
        throw DimensionError("cosine distance of vectors with different widths");
    }
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) {
        throw DomainError("cosine distance with a zero vector");
    }
    const double na = std::sqrt(aa);
    const double nb = std::sqrt(bb);
    const double s = ab / (na * nb);
    if (!out.empty()) {
        // d(1 - s)/da = -(b / (|a||b|) - s a / |a|^2)
        const double kb = 1.0 / (na * nb);
        const double ka = s / aa;
        for (std::size_t i = 0; i < a.size(); ++i) {
            out[i] += scale * -(b[i] * kb - a[i] * ka);
        }
    }
    return 1.0 - s;
}

LossGrad hier_loss(std::span<const double> e, EntityId entity, const HierPrecomp& precomp,
                   double lambda1, double lambda2, double lambda3) {
    const auto& leaf = precomp.leaf_for(entity);
    LossGrad out;
    out.grad.assign(e.size(), 0.0);
    if (lambda1 != 0.0) {
        out.value += lambda1 * cosine_distance_grad(e, precomp.vec(leaf.node), lambda1, out.grad);
    }
    if (lambda2 != 0.0 && !leaf.neighbors.empty()) {
        const double w = lambda2 / static_cast<double>(leaf.neighbors.size());
        for (NodeId nb : leaf.neighbors) {
            out.value -= w * cosine_distance_grad(e, precomp.vec(nb), -w, out.grad);
        }
    }
    const std::size_t h = leaf.depth();
    if (lambda3 != 0.0 && h > 2) {
        const double base = lambda3 / static_cast<double>(h - 1);
        for (std::size_t j = 1; j + 1 < h; ++j) {
            // parents[j-1] is p_j, parents[j] is p_{j+1}
            const double w = base * leaf.betas[j - 1];
            out.value -= w * cosine_distance_grad(e, precomp.vec(leaf.parents[j]), -w, out.grad);
            out.value += w * cosine_distance_grad(e, precomp.vec(leaf.parents[j - 1]), w, out.grad);
        }
    }
    return out;
}

LossGrad anchor_loss(std::span<const double> e, std::span<const double> anchor, AnchorSign sign) {
    const double s = sign == AnchorSign::attract ? 1.0 : -1.0;
    LossGrad out;
    out.grad.assign(e.size(), 0.0);
    out.value = s * cosine_distance_grad(e, anchor, s, out.grad);
    return out;
}

std::vector<EntityId> sample_negatives(const Triple& triple, Side side, std::size_t k,
                                       std::size_t num_entities, Rng& rng, const FilterIndex* filter) {
    if (k == 0) {
        throw ConfigError("negative sample count must be at least 1");
    }
    const EntityId truth = side == Side::tail ? triple.tail : triple.head;
    static const std::set<EntityId> kNone;
    const auto& known = filter ? (side == Side::tail ? filter->tails(triple.head, triple.rel)
                                                     : filter->heads(triple.rel, triple.tail))
                               : kNone;
    auto excluded = [&](EntityId e) { return e == truth || known.count(e) > 0; };
    std::size_t excluded_count = known.count(truth) ? known.size() : known.size() + 1;
    if (truth < 0 || static_cast<std::size_t>(truth) >= num_entities) {
        --excluded_count;
    }
    if (excluded_count >= num_entities) {
        throw SamplingError("no candidate entity left to corrupt the " +
                            std::string(side == Side::tail ? "tail" : "head"));
    }
    std::vector<EntityId> out;
    out.reserve(k);
    while (out.size() < k) {
        const auto e = static_cast<EntityId>(uniform_index(rng, num_entities));
        if (!excluded(e)) {
            out.push_back(e);
        }
    }
    return out;
}

std::span<double> SparseGrad::entity(std::int32_t id, std::size_t width) {
    auto& v = entities[id];
    if (v.empty()) {
        v.assign(width, 0.0);
    }
    return v;
}

std::span<double> SparseGrad::relation(std::int32_t id, std::size_t width) {
    auto& v = relations[id];
    if (v.empty()) {
        v.assign(width, 0.0);
    }
    return v;
}

double link_loss(const ModelState& state, const Batch& batch, SparseGrad* grad, double scale) {
    if (batch.positives.empty()) {
        return 0.0;
    }
    const std::size_t n = state.entities.cols();
    const std::size_t w = state.relations.cols();
    std::vector<double> gh(n), gr(w), gt(n);
    const double per = 1.0 / static_cast<double>(batch.positives.size());
    double total = 0;
    auto row = [&](EntityId e) { return state.entities.row(static_cast<std::size_t>(e)); };
    auto score_and_grad = [&](const Triple& t) {
        const double f = grad ? score_grad_rows(state.family, state.constants, row(t.head),
                                                state.relations.row(static_cast<std::size_t>(t.rel)),
                                                row(t.tail), gh, gr, gt)
                              : score_rows(state.family, state.constants, row(t.head),
                                           state.relations.row(static_cast<std::size_t>(t.rel)),
                                           row(t.tail));
        return f;
    };
    auto push = [&](const Triple& t, double coef) {
        add_scaled(grad->entity(t.head, n), gh, coef);
        add_scaled(grad->relation(t.rel, w), gr, coef);
        add_scaled(grad->entity(t.tail, n), gt, coef);
    };
    for (std::size_t i = 0; i < batch.positives.size(); ++i) {
        const Triple& pos = batch.positives[i];
        const double f_pos = score_and_grad(pos);
        double li = -log_sigmoid(state.gamma + f_pos);
        if (grad) {
            push(pos, scale * per * -sigmoid(-(state.gamma + f_pos)));
        }
        const auto& negs = batch.negatives[i];
        const double k = static_cast<double>(negs.size());
        for (EntityId e : negs) {
            Triple neg = pos;
            (batch.sides[i] == Side::tail ? neg.tail : neg.head) = e;
            const double f_neg = score_and_grad(neg);
            li -= log_sigmoid(-f_neg - state.gamma) / k;
            if (grad) {
                push(neg, scale * per * sigmoid(f_neg + state.gamma) / k);
            }
        }
        total += li;
    }
    return total * per;
}

std::vector<EntityId> constrained_entities(const Batch& batch, ConstraintMode mode) {
    std::vector<EntityId> out;
    for (std::size_t i = 0; i < batch.positives.size(); ++i) {
        if (mode == ConstraintMode::full) {
            out.push_back(batch.positives[i].head);
            out.push_back(batch.positives[i].tail);
        }
        out.insert(out.end(), batch.negatives[i].begin(), batch.negatives[i].end());
    }
    return out;
}

LossBreakdown batch_loss(const ModelState& state, const Batch& batch, const HierPrecomp& precomp,
                         const Matrix& anchors, const TrainConfig& config, SparseGrad* grad) {
    LossBreakdown out;
    const std::size_t n = state.entities.cols();
    out.link = link_loss(state, batch, grad, config.zeta3);
    const auto ents = constrained_entities(batch, config.mode);
    if (!ents.empty() && (config.zeta1 != 0.0 || config.zeta2 != 0.0)) {
        const double per = 1.0 / static_cast<double>(ents.size());
        for (EntityId e : ents) {
            const auto row = state.entities.row(static_cast<std::size_t>(e));
            if (config.zeta1 != 0.0) {
                const auto hl = hier_loss(row, e, precomp, config.lambda1, config.lambda2, config.lambda3);
                out.hier += hl.value * per;
                if (grad) {
                    add_scaled(grad->entity(e, n), hl.grad, config.zeta1 * per);
                }
            }
            if (config.zeta2 != 0.0) {
                const auto al = anchor_loss(row, anchors.row(static_cast<std::size_t>(e)), config.anchor_sign);
                out.anchor += al.value * per;
                if (grad) {
                    add_scaled(grad->entity(e, n), al.grad, config.zeta2 * per);
                }
            }
        }
    }
    out.total = total_loss(out.hier, out.anchor, out.link, config.zeta1, config.zeta2, config.zeta3);
    return out;
}

SparseAdam::SparseAdam(const ModelState& state, double lr, double beta1, double beta2, double eps)
    : lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      m_ent_(state.entities.rows(), state.entities.cols()),
      v_ent_(state.entities.rows(), state.entities.cols()),
      m_rel_(state.relations.rows(), state.relations.cols()),
      v_rel_(state.relations.rows(), state.relations.cols()) {}

void SparseAdam::update(std::span<double> param, std::span<const double> g, std::span<double> m,
                        std::span<double> v) const {
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
        const double mh = m[i] / c1;
        const double vh = v[i] / c2;
        param[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
}

void SparseAdam::step(ModelState& state, const SparseGrad& grad) {
    ++t_;
    for (const auto& [id, g] : grad.entities) {
        const auto r = static_cast<std::size_t>(id);
        update(state.entities.row(r), g, m_ent_.row(r), v_ent_.row(r));
    }
    for (const auto& [id, g] : grad.relations) {
        const auto r = static_cast<std::size_t>(id);
        update(state.relations.row(r), g, m_rel_.row(r), v_rel_.row(r));
    }
}

std::string epoch_log_json(const EpochLog& log) {
    nlohmann::ordered_json j;
    j["epoch"] = log.epoch;
    j["hier"] = log.loss.hier;
    j["anchor"] = log.loss.anchor;
    j["link"] = log.loss.link;
    j["total"] = log.loss.total;
    j["val_mrr"] = log.val_mrr ? nlohmann::ordered_json(*log.val_mrr) : nlohmann::ordered_json(nullptr);
    j["val_hits10"] =
        log.val_hits10 ? nlohmann::ordered_json(*log.val_hits10) : nlohmann::ordered_json(nullptr);
    return j.dump();
}

ModelState initial_state(const TrainConfig& config, const Matrix& sliced, std::size_t num_relations) {
    config.validate();
    if (sliced.cols() != config.dim) {
        throw DimensionError("sliced text embeddings have width " + std::to_string(sliced.cols()) +
                             ", config dim is " + std::to_string(config.dim));
    }
    ModelState s;
    s.family = parse_family(config.model);
    s.gamma = config.gamma;
    s.constants.p_norm = config.p_norm;
    s.constants.modulus = config.modulus;
    s.entities = init_entities(sliced, config.rho, fork_seed(config.seed, "entities"));
    s.relations = init_relations(s.family, num_relations, config.dim, config.psi,
                                 fork_seed(config.seed, "relations"));
    s.validate();
    return s;
}

TrainResult train(const Dataset& data, const ModelState& initial, const HierPrecomp& precomp,
                  const Matrix& anchors, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    config.validate();
    initial.validate();
    const std::size_t num_entities = initial.entities.rows();
    if (anchors.rows() != num_entities || anchors.cols() != initial.entities.cols()) {
        throw DimensionError("anchor matrix shape does not match the entity table");
    }
    if (precomp.leaf_of.size() != num_entities || precomp.dim != initial.entities.cols()) {
        throw DimensionError("hierarchy precompute does not match the entity table");
    }

    TrainResult result;
    result.best = initial;
    result.last = initial;
    if (config.max_epochs == 0 || data.train.empty()) {
        return result;
    }

    ModelState state = initial;
    HierPrecomp refs = precomp;
    SparseAdam adam(state, config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps);
    const FilterIndex filter = build_filter_index(data);
    Rng rng = make_rng(config.seed, "train");
    std::vector<std::size_t> order(data.train.size());
    std::size_t stale = 0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        if (config.live_centroids) {
            refs.refresh(state.entities);
        }
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[uniform_index(rng, i)]);
        }

        LossBreakdown sum;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            Batch batch;
            for (std::size_t i = start; i < end; ++i) {
                const Triple& t = data.train[order[i]];
                const Side side = i % 2 == 0 ? Side::tail : Side::head;
                batch.positives.push_back(t);
                batch.sides.push_back(side);
                batch.negatives.push_back(sample_negatives(t, side, config.negatives, num_entities, rng,
                                                           config.filter_negatives ? &filter : nullptr));
            }
            SparseGrad grad;
            const auto loss = batch_loss(state, batch, refs, anchors, config, &grad);
            if (!std::isfinite(loss.total)) {
                throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(batches) + " (hier " + std::to_string(loss.hier) +
                                      ", anchor " + std::to_string(loss.anchor) + ", link " +
                                      std::to_string(loss.link) + ")");
            }
            adam.step(state, grad);
            sum.hier += loss.hier;
            sum.anchor += loss.anchor;
            sum.link += loss.link;
            sum.total += loss.total;
            ++batches;
        }

        EpochLog log;
        log.epoch = epoch;
        const double nb = static_cast<double>(batches);
        log.loss = {sum.hier / nb, sum.anchor / nb, sum.link / nb, sum.total / nb};

        if (!data.valid.empty() && epoch % config.valid_every == 0) {
            const auto report = evaluate(data.valid, state, filter);
            log.val_mrr = report.average.mrr;
            log.val_hits10 = report.average.hits10;
            if (!result.best_val_mrr || report.average.mrr > *result.best_val_mrr) {
                result.best_val_mrr = report.average.mrr;
                result.best = state;
                result.best_epoch = epoch;
                stale = 0;
            } else if (config.plateau_patience > 0 && ++stale >= config.plateau_patience) {
                adam.set_learning_rate(adam.learning_rate() / 2);
                stale = 0;
            }
        }
        result.logs.push_back(log);
        if (on_epoch) {
            on_epoch(log);
        }
    }
    result.last = state;
    if (!result.best_val_mrr) {
        result.best = state;
        result.best_epoch = config.max_epochs;
    }
    return result;
}

}  // namespace kgfit
