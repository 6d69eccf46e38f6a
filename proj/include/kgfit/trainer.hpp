#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgfit/hier_precompute.hpp"
#include "kgfit/kg_data.hpp"
#include "kgfit/kge_models.hpp"
#include "kgfit/matrix.hpp"
#include "kgfit/rng.hpp"

namespace kgfit {

enum class ConstraintMode { full, partial };
enum class AnchorSign { attract, literal };

struct TrainConfig {
    std::string model = "transe";
    std::size_t dim = 64;  ///< entity width n
    int p_norm = 2;
    double modulus = 1.0;

    double lambda1 = 1.0;
    double lambda2 = 0.4;
    double lambda3 = 0.5;
    double zeta1 = 0.5;
    double zeta2 = 0.5;
    double zeta3 = 3.5;
    double rho = 0.5;
    double psi = 0.01;
    double beta0 = 1.2;
    double phi = 0.4;
    std::size_t neighbors = 5;
    double gamma = 12.0;

    std::size_t negatives = 64;
    bool filter_negatives = false;
    std::size_t batch_size = 512;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t max_epochs = 100;
    std::size_t valid_every = 1;
    /// Halve the learning rate after this many validations without a new
    /// best MRR; 0 disables.
    std::size_t plateau_patience = 0;

    ConstraintMode mode = ConstraintMode::full;
    AnchorSign anchor_sign = AnchorSign::attract;
    bool live_centroids = false;
    std::uint64_t seed = 0;

    /// Throws ConfigError on negative weights, zero batch/negatives, etc.
    void validate() const;
};

/// Missing keys keep their defaults; unknown keys raise ConfigError.
TrainConfig train_config_from_json(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string train_config_to_json(const TrainConfig& c);

struct LossBreakdown {
    double hier = 0;
    double anchor = 0;
    double link = 0;
    double total = 0;
};

double total_loss(double hier, double anchor, double link, double zeta1, double zeta2, double zeta3);

struct LossGrad {
    double value = 0;
    std::vector<double> grad;
};

/// Gradient of 1 - <a,b>/(|a||b|) with respect to a, added into `out` times
/// `scale`. Returns the distance.
double cosine_distance_grad(std::span<const double> a, std::span<const double> b, double scale,
                            std::span<double> out);

/// Hierarchical constraint for one entity with embedding `e`:
///   l1 d(e,c) - l2 mean_{c'} d(e,c') - l3/(h-1) sum_j beta_j (d(e,p_{j+1}) - d(e,p_j))
/// where the sum runs over the consecutive ancestor pairs that exist
/// (empty when h <= 2). The reference vectors are constants.
LossGrad hier_loss(std::span<const double> e, EntityId entity, const HierPrecomp& precomp,
                   double lambda1, double lambda2, double lambda3);

/// +d(e, anchor) in attract mode, -d(e, anchor) in literal mode.
LossGrad anchor_loss(std::span<const double> e, std::span<const double> anchor, AnchorSign sign);

/// k draws, uniform over entities other than the true one on `side`; with a
/// filter, entities completing a known triple are excluded too. Throws
/// SamplingError when no candidate remains.
std::vector<EntityId> sample_negatives(const Triple& triple, Side side, std::size_t k,
                                       std::size_t num_entities, Rng& rng,
                                       const FilterIndex* filter = nullptr);

struct Batch {
    std::vector<Triple> positives;
    std::vector<Side> sides;                        ///< corrupted side per positive
    std::vector<std::vector<EntityId>> negatives;  ///< replacement entities
};

/// Sparse gradient accumulator keyed by row id.
struct SparseGrad {
    std::map<std::int32_t, std::vector<double>> entities;
    std::map<std::int32_t, std::vector<double>> relations;

    std::span<double> entity(std::int32_t id, std::size_t width);
    std::span<double> relation(std::int32_t id, std::size_t width);
};

/// Mean over positives of
///   -log sig(gamma + f_pos) - (1/k) sum_neg log sig(-f_neg - gamma)
/// i.e. the margin form on distances delta = -f. Gradients are added into
/// `grad` times `scale` when given.
double link_loss(const ModelState& state, const Batch& batch, SparseGrad* grad = nullptr,
                 double scale = 1.0);

/// Entities the hierarchy and anchor terms apply to in a batch: heads and
/// tails of positives plus negatives (full), or negatives only (partial).
std::vector<EntityId> constrained_entities(const Batch& batch, ConstraintMode mode);

/// All three terms on one batch. Hierarchy and anchor terms are averaged
/// over the constrained occurrences; `grad`, when given, receives the
/// gradient of the weighted total.
LossBreakdown batch_loss(const ModelState& state, const Batch& batch, const HierPrecomp& precomp,
                         const Matrix& anchors, const TrainConfig& config, SparseGrad* grad = nullptr);

/// Adam with per-row moment state; only rows present in a gradient are
/// touched. Bias correction uses the global step count.
class SparseAdam {
public:
    SparseAdam(const ModelState& state, double lr, double beta1, double beta2, double eps);
    void step(ModelState& state, const SparseGrad& grad);
    void set_learning_rate(double lr) { lr_ = lr; }
    double learning_rate() const { return lr_; }

private:
    void update(std::span<double> param, std::span<const double> g, std::span<double> m,
                std::span<double> v) const;
    double lr_, beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    Matrix m_ent_, v_ent_, m_rel_, v_rel_;
};

struct EpochLog {
    std::size_t epoch = 0;
    LossBreakdown loss;  ///< mean over the epoch's batches
    std::optional<double> val_mrr;
    std::optional<double> val_hits10;
};

std::string epoch_log_json(const EpochLog& log);

struct TrainResult {
    ModelState best;   ///< state with the best validation MRR (final state without validation)
    ModelState last;
    std::vector<EpochLog> logs;
    std::size_t best_epoch = 0;
    std::optional<double> best_val_mrr;
};

/// Entity rows: init_entities(slice_init(text, n), rho, fork(seed,"entities")).
/// Relation rows: init_relations(..., fork(seed, "relations")).
ModelState initial_state(const TrainConfig& config, const Matrix& sliced, std::size_t num_relations);

/// Mini-batch fine-tuning. Throws DivergenceError on a non-finite loss.
/// `on_epoch` is called after every epoch.
TrainResult train(const Dataset& data, const ModelState& initial, const HierPrecomp& precomp,
                  const Matrix& anchors, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace kgfit
