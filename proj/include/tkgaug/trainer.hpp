#pragma once

// Two-stage embedding training. Stage one minimizes a sampled-softmax loss
// whose negatives avoid the filtered candidate sets (they may be unlabeled
// positives). Between stages, train facts the frozen model cannot rank above
// all sampled negatives are mined as hard samples. Stage two fine-tunes on
// smooth-labeled false negatives plus hard samples against hard negatives
// with a binary cross-entropy objective.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tkgaug/core.hpp"
#include "tkgaug/eval.hpp"
#include "tkgaug/filter.hpp"
#include "tkgaug/index.hpp"
#include "tkgaug/model.hpp"
#include "tkgaug/rng.hpp"
#include "tkgaug/scoring.hpp"

namespace tkgaug {

struct TrainSchedule {
    std::uint32_t total_epochs = 1000;
    std::uint32_t pretrain_epochs = 20;
    std::uint32_t batches_per_epoch = 100;
    std::uint32_t negatives_per_fact = 50;
    std::uint32_t eval_every = 10;       // epochs between validation evaluations
    std::uint32_t patience_rounds = 50;  // evaluations without improvement before stop
    bool literal_negative_term = false;  // fine-tune negatives with -log sigma(+p)
};

inline void validate(const TrainSchedule& s) {
    if (s.total_epochs < 1) throw std::invalid_argument("schedule: total_epochs must be >= 1");
    if (s.pretrain_epochs > s.total_epochs)
        throw std::invalid_argument("schedule: pretrain_epochs exceeds total_epochs");
    if (s.batches_per_epoch < 1)
        throw std::invalid_argument("schedule: batches_per_epoch must be >= 1");
    if (s.negatives_per_fact < 1)
        throw std::invalid_argument("schedule: negatives_per_fact must be >= 1");
    if (s.eval_every < 1) throw std::invalid_argument("schedule: eval_every must be >= 1");
}

struct LabeledFact {
    Quadruple q;
    double label = 1.0;
};

struct AugmentedSets {
    std::vector<LabeledFact> positives;     // false negatives + mined hard samples
    std::vector<Quadruple> hard_negatives;  // candidates judged implausible
    // Source fact -> ascending object ids its negative sampling must avoid
    // (the object-substitution candidates of that fact).
    std::unordered_map<Quadruple, std::vector<EntityId>, QuadrupleHash> object_exclusions;

    const std::vector<EntityId>* exclusions_for(const Quadruple& f) const {
        auto it = object_exclusions.find(f);
        return it == object_exclusions.end() ? nullptr : &it->second;
    }
};

// Builds the augmented sets from scored candidates: false negatives become
// soft positives with labels normalized by the invocation-wide maximum raw
// label; the rest become hard negatives. Exclusion sets are the
// object-substitution candidates of every (gated) train fact.
inline AugmentedSets assemble_augmented_sets(const std::vector<ScoredCandidate>& scored,
                                             const TkgIndex& idx, const FilterParams& params) {
    AugmentedSets out;
    double max_raw = 0.0;
    for (const auto& sc : scored)
        if (sc.false_negative) max_raw = std::max(max_raw, sc.raw_label);
    for (const auto& sc : scored) {
        if (sc.false_negative) {
            double label = max_raw > 0.0 ? sc.raw_label / max_raw : 1.0;
            out.positives.push_back({sc.candidate.candidate, label});
        } else {
            out.hard_negatives.push_back(sc.candidate.candidate);
        }
    }
    detail::TopCache cache(idx, params.top_m);
    for (const auto& f : idx.facts) {
        if (params.sparsity_gate && !detail::passes_sparsity_gate(f, idx, params)) continue;
        std::vector<EntityId> objs;
        detail::emit_entity_candidates(f, idx, cache,
                                       [&](const Quadruple& q, FilterKind) { objs.push_back(q.o); });
        if (objs.empty()) continue;
        std::sort(objs.begin(), objs.end());
        out.object_exclusions.emplace(f, std::move(objs));
    }
    return out;
}

// Up to n_neg distinct object corruptions (s, r, e, t) of f, drawn uniformly
// over entities excluding the true object, existing train facts, and the
// fact's exclusion list. Falls back to an ascending-id exhaustive pass when
// rejection sampling stalls; returns fewer than n_neg only when fewer
// admissible entities exist. The stream is derived from (seed, f), so the
// draw depends only on those two.
inline std::vector<Quadruple> sample_negatives(const Quadruple& f,
                                               const std::vector<EntityId>* exclusions,
                                               const TkgIndex& idx, std::uint32_t n_neg,
                                               std::uint64_t seed) {
    std::uint32_t n_entities = idx.num_entities;
    if (n_entities <= 1)
        throw std::invalid_argument("sample_negatives: need more than one entity");
    auto admissible = [&](EntityId e) {
        if (e == f.o) return false;
        if (exclusions &&
            std::binary_search(exclusions->begin(), exclusions->end(), e))
            return false;
        return !idx.contains(Quadruple{f.s, f.r, e, f.t});
    };
    Rng rng(derive_seed(seed, "negatives", quad_hash(f)));
    std::vector<Quadruple> out;
    out.reserve(n_neg);
    std::unordered_set<EntityId> chosen;
    std::uint64_t attempts = std::max<std::uint64_t>(1000, 20ull * n_neg);
    while (out.size() < n_neg && attempts-- > 0) {
        EntityId e = static_cast<EntityId>(rng.below(n_entities));
        if (!admissible(e) || !chosen.insert(e).second) continue;
        out.push_back(Quadruple{f.s, f.r, e, f.t});
    }
    if (out.size() < n_neg) {
        for (EntityId e = 0; e < n_entities && out.size() < n_neg; ++e) {
            if (!admissible(e) || !chosen.insert(e).second) continue;
            out.push_back(Quadruple{f.s, f.r, e, f.t});
        }
    }
    return out;
}

struct LossResult {
    double loss = 0.0;
    GradientBuffer grads;
};

namespace detail {

// d score / d row contributions of one quadruple, scaled by `coeff`.
inline void add_score_gradient(const ModelState& st, const Quadruple& q, double coeff,
                               GradientBuffer& g) {
    const double* es = st.entity_row(q.s);
    const double* rr = st.relation_row(q.r);
    const double* eo = st.entity_row(q.o);
    const double* tt = st.time_row(q.t);
    auto& gs = g.row(EmbeddingTable::entity, q.s);
    auto& gr = g.row(EmbeddingTable::relation, q.r);
    auto& go = g.row(EmbeddingTable::entity, q.o);
    auto& gt = g.row(EmbeddingTable::time, q.t);
    for (std::uint32_t k = 0; k < st.dim; ++k) {
        gs[k] += coeff * rr[k] * eo[k] * tt[k];
        go[k] += coeff * es[k] * rr[k] * tt[k];
        gr[k] += coeff * es[k] * eo[k] * tt[k];
        gt[k] += coeff * es[k] * rr[k] * eo[k];
    }
}

// Adds lambda * ||row||^2 over every row already touched by `g` (each row
// once per batch) and the matching 2*lambda*row gradient.
inline double add_row_regularization(const ModelState& st, GradientBuffer& g, double lambda) {
    if (lambda == 0.0) return 0.0;
    double reg = 0.0;
    auto handle = [&](std::unordered_map<std::uint32_t, std::vector<double>>& rows,
                      const std::vector<double>& emb) {
        for (auto& [id, grad] : rows) {
            const double* p = emb.data() + std::size_t(id) * st.dim;
            for (std::uint32_t k = 0; k < st.dim; ++k) {
                reg += p[k] * p[k];
                grad[k] += 2.0 * lambda * p[k];
            }
        }
    };
    handle(g.entity, st.entity_emb);
    handle(g.relation, st.relation_emb);
    handle(g.time, st.time_emb);
    return lambda * reg;
}

inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace detail

// Sampled-softmax loss over a batch: per fact, -log of the positive's softmax
// share among {positive} + its sampled negatives, summed; plus the per-batch
// L2 term on touched rows.
inline LossResult pretrain_loss(const ModelState& st, std::span<const Quadruple> batch,
                                const std::vector<std::vector<Quadruple>>& negatives,
                                const ModelConfig& cfg) {
    if (batch.size() != negatives.size())
        throw std::invalid_argument("pretrain_loss: one negative list per fact required");
    LossResult res;
    res.grads = GradientBuffer(st.dim);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Quadruple& pos = batch[i];
        const auto& negs = negatives[i];
        double z_pos = score(st, pos);
        std::vector<double> z_neg;
        z_neg.reserve(negs.size());
        double z_max = z_pos;
        for (const auto& q : negs) {
            z_neg.push_back(score(st, q));
            z_max = std::max(z_max, z_neg.back());
        }
        double denom = std::exp(z_pos - z_max);
        for (double z : z_neg) denom += std::exp(z - z_max);
        double log_z = z_max + std::log(denom);
        res.loss += log_z - z_pos;
        // Softmax probabilities: d loss/d z_pos = p_pos - 1, d/d z_neg = p_neg.
        detail::add_score_gradient(st, pos, std::exp(z_pos - log_z) - 1.0, res.grads);
        for (std::size_t j = 0; j < negs.size(); ++j)
            detail::add_score_gradient(st, negs[j], std::exp(z_neg[j] - log_z), res.grads);
    }
    res.loss += detail::add_row_regularization(st, res.grads, cfg.reg_weight);
    if (!std::isfinite(res.loss))
        throw std::runtime_error("pretrain loss diverged to a non-finite value");
    return res;
}

// Binary cross-entropy fine-tune loss: soft positives -l * log sigma(p),
// negatives -log sigma(-p) (or the literal -log sigma(p) variant).
inline LossResult finetune_loss(const ModelState& st, std::span<const LabeledFact> positives,
                                std::span<const Quadruple> negatives, const ModelConfig& cfg,
                                bool literal_negative_term = false) {
    (void)cfg;
    LossResult res;
    res.grads = GradientBuffer(st.dim);
    // Softplus maps an infinite score of the right sign to 0, so checking the
    // summed loss alone would let NaN gradients through; check every score.
    auto checked_score = [&](const Quadruple& q) {
        double p = score(st, q);
        if (!std::isfinite(p))
            throw std::runtime_error("fine-tune loss diverged to a non-finite value");
        return p;
    };
    for (const auto& [q, label] : positives) {
        double p = checked_score(q);
        res.loss += label * detail::softplus(-p);
        detail::add_score_gradient(st, q, label * (detail::sigmoid(p) - 1.0), res.grads);
    }
    for (const auto& q : negatives) {
        double p = checked_score(q);
        if (literal_negative_term) {
            res.loss += detail::softplus(-p);
            detail::add_score_gradient(st, q, detail::sigmoid(p) - 1.0, res.grads);
        } else {
            res.loss += detail::softplus(p);
            detail::add_score_gradient(st, q, detail::sigmoid(p), res.grads);
        }
    }
    if (!std::isfinite(res.loss))
        throw std::runtime_error("fine-tune loss diverged to a non-finite value");
    return res;
}

// One pre-training update on a batch; samples fresh negatives from `seed`.
inline double pretrain_step(ModelState& st, std::span<const Quadruple> batch,
                            const AugmentedSets& aug, const TkgIndex& idx,
                            const ModelConfig& cfg, const TrainSchedule& sched,
                            std::uint64_t seed) {
    std::vector<std::vector<Quadruple>> negatives;
    negatives.reserve(batch.size());
    for (const auto& f : batch)
        negatives.push_back(
            sample_negatives(f, aug.exclusions_for(f), idx, sched.negatives_per_fact, seed));
    LossResult res = pretrain_loss(st, batch, negatives, cfg);
    apply_gradients(st, res.grads, cfg);
    return res.loss;
}

// One fine-tune update on a mixed batch.
inline double finetune_step(ModelState& st, std::span<const LabeledFact> positives,
                            std::span<const Quadruple> negatives, const ModelConfig& cfg,
                            bool literal_negative_term = false) {
    LossResult res = finetune_loss(st, positives, negatives, cfg, literal_negative_term);
    apply_gradients(st, res.grads, cfg);
    return res.loss;
}

// Train facts the frozen model fails to rank strictly above every freshly
// sampled negative (ties count as failures). Deterministic in (state, seed).
inline std::vector<Quadruple> mine_hard_positives(const ModelState& st, const TkgIndex& idx,
                                                  const AugmentedSets& aug,
                                                  const TrainSchedule& sched,
                                                  std::uint64_t seed) {
    std::vector<Quadruple> out;
    std::uint64_t mine_seed = derive_seed(seed, "mine");
    for (const auto& f : idx.facts) {
        auto negs =
            sample_negatives(f, aug.exclusions_for(f), idx, sched.negatives_per_fact, mine_seed);
        double z_pos = score(st, f);
        for (const auto& q : negs) {
            if (score(st, q) >= z_pos) {
                out.push_back(f);
                break;
            }
        }
    }
    return out;
}

struct EpochLog {
    std::uint32_t epoch = 0;
    std::string stage;  // "pretrain" or "finetune"
    double loss = 0.0;  // mean per-item loss over the epoch
    std::optional<double> valid_mrr;
};

struct TrainResult {
    ModelState model;
    std::vector<EpochLog> log;
    double best_valid_mrr = 0.0;
    std::uint32_t best_epoch = 0;
};

// Full schedule: pre-train, mine hard samples on the frozen stage-one model,
// fine-tune on the augmented sets with periodic validation and early stopping,
// and return the best-validation model.
inline TrainResult run_two_stage(const Dataset& d, const TkgIndex& idx, const AugmentedSets& aug,
                                 ModelConfig cfg, const TrainSchedule& sched, std::uint64_t seed,
                                 unsigned threads = 1) {
    validate(sched);
    cfg.seed = derive_seed(seed, "init");
    ModelState state =
        init_model(cfg, ModelSizes{d.num_entities(), d.num_relations(), d.num_timestamps()});
    KnownObjects known = build_known_objects(d);

    TrainResult result;
    double best = -std::numeric_limits<double>::infinity();
    ModelState best_state = state;
    std::uint32_t best_epoch = 0;
    std::uint32_t stale_rounds = 0;
    bool stopped = false;

    // Fine-tune pools; filled once pre-training finishes.
    std::vector<LabeledFact> pool_pos;
    std::vector<Quadruple> pool_neg;
    bool pools_ready = false;

    auto split_batches = [&](std::size_t n) {
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        std::uint32_t b = sched.batches_per_epoch;
        for (std::uint32_t i = 0; i < b; ++i) {
            std::size_t lo = n * i / b, hi = n * (i + 1) / b;
            if (lo < hi) spans.push_back({lo, hi});
        }
        return spans;
    };

    auto run_validation = [&](std::uint32_t epoch, EpochLog& entry) {
        if (d.valid.empty()) return;  // no validation signal; keep final state
        double mrr = mean_reciprocal_rank(state, d.valid, &known, true, threads);
        entry.valid_mrr = mrr;
        if (mrr > best) {
            best = mrr;
            best_state = state;
            best_epoch = epoch;
            stale_rounds = 0;
        } else if (++stale_rounds >= sched.patience_rounds) {
            stopped = true;
        }
    };

    for (std::uint32_t epoch = 1; epoch <= sched.total_epochs && !stopped; ++epoch) {
        bool pretraining = epoch <= sched.pretrain_epochs;
        EpochLog entry;
        entry.epoch = epoch;
        entry.stage = pretraining ? "pretrain" : "finetune";

        if (pretraining) {
            std::vector<Quadruple> order = idx.facts;
            Rng shuffle_rng(derive_seed(seed, "epoch-order", epoch));
            shuffle_rng.shuffle(order);
            double total = 0.0;
            for (auto [lo, hi] : split_batches(order.size())) {
                total += pretrain_step(state,
                                       std::span<const Quadruple>(order.data() + lo, hi - lo),
                                       aug, idx, cfg, sched, derive_seed(seed, "pretrain-neg", epoch));
            }
            entry.loss = order.empty() ? 0.0 : total / double(order.size());
        } else {
            if (!pools_ready) {
                // Stage boundary: mine on the frozen stage-one model.
                std::vector<Quadruple> hard = mine_hard_positives(state, idx, aug, sched, seed);
                pool_pos = aug.positives;
                pool_pos.reserve(pool_pos.size() + hard.size());
                for (const auto& q : hard) pool_pos.push_back({q, 1.0});
                pool_neg = aug.hard_negatives;
                pools_ready = true;
                if (pool_pos.empty() && pool_neg.empty()) break;  // nothing to fine-tune on
            }
            std::size_t n_items = pool_pos.size() + pool_neg.size();
            std::vector<std::size_t> order(n_items);
            for (std::size_t i = 0; i < n_items; ++i) order[i] = i;
            Rng shuffle_rng(derive_seed(seed, "epoch-order", epoch));
            shuffle_rng.shuffle(order);
            double total = 0.0;
            std::vector<LabeledFact> batch_pos;
            std::vector<Quadruple> batch_neg;
            for (auto [lo, hi] : split_batches(n_items)) {
                batch_pos.clear();
                batch_neg.clear();
                for (std::size_t i = lo; i < hi; ++i) {
                    std::size_t id = order[i];
                    if (id < pool_pos.size())
                        batch_pos.push_back(pool_pos[id]);
                    else
                        batch_neg.push_back(pool_neg[id - pool_pos.size()]);
                }
                total += finetune_step(state, batch_pos, batch_neg, cfg,
                                       sched.literal_negative_term);
            }
            entry.loss = n_items == 0 ? 0.0 : total / double(n_items);
        }

        if (epoch % sched.eval_every == 0 || epoch == sched.total_epochs)
            run_validation(epoch, entry);
        result.log.push_back(entry);
    }

    if (best > -std::numeric_limits<double>::infinity()) {
        result.model = std::move(best_state);
        result.best_valid_mrr = best;
        result.best_epoch = best_epoch;
    } else {
        result.model = std::move(state);
    }
    return result;
}

// Baseline for A/B comparison: the pre-training objective with uniform
// negatives (no exclusion sets) over the full epoch budget.
inline TrainResult run_baseline(const Dataset& d, const TkgIndex& idx, ModelConfig cfg,
                                TrainSchedule sched, std::uint64_t seed, unsigned threads = 1) {
    sched.pretrain_epochs = sched.total_epochs;
    return run_two_stage(d, idx, AugmentedSets{}, cfg, sched, seed, threads);
}

}  // namespace tkgaug
