#pragma once

// Candidate scoring. A candidate (s, r, o, t) is judged by the two-hop
// structure around its endpoints: every bridge entity e linked to both s and o
// by facts within a time window contributes the relation pairs of those facts,
// attention-weighted by temporal closeness and scored against the triangle
// tables. A candidate whose score survives structure perturbation better than
// its source fact's own score is labeled a false negative.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tkgaug/core.hpp"
#include "tkgaug/filter.hpp"
#include "tkgaug/index.hpp"
#include "tkgaug/rng.hpp"
#include "tkgaug/triangles.hpp"

namespace tkgaug {

// One (fact near s, fact near o) pairing through a bridge entity. Timestamps
// are doubles because perturbation adds continuous noise.
struct RelationPairItem {
    RelationId r_near_s = 0;
    double t_near_s = 0.0;
    RelationId r_near_o = 0;
    double t_near_o = 0.0;
};

struct BridgeStructure {
    EntityId bridge = 0;
    std::vector<RelationPairItem> items;
};

struct LocalStructure {
    std::vector<BridgeStructure> bridges;  // ascending bridge id

    std::size_t total_items() const {
        std::size_t n = 0;
        for (const auto& b : bridges) n += b.items.size();
        return n;
    }
};

namespace detail {

// Facts incident to `e` with |t_fact - t| <= window, grouped by other endpoint.
inline std::map<EntityId, std::vector<std::pair<RelationId, TimeId>>> windowed_links(
    const TkgIndex& idx, EntityId e, TimeId t, std::uint32_t window) {
    const auto& adj = idx.adjacency[e];
    TimeId lo = t >= window ? t - window : 0;
    TimeId hi = t + window;
    auto first = std::lower_bound(adj.begin(), adj.end(), AdjEntry{lo, 0, 0});
    std::map<EntityId, std::vector<std::pair<RelationId, TimeId>>> out;
    for (auto it = first; it != adj.end() && it->t <= hi; ++it)
        out[it->other].push_back({it->r, it->t});
    return out;
}

}  // namespace detail

// Assembles the bridge structure of f: for every entity e (not s or o) with
// window-near facts to both s and o, the full cross product of those facts'
// (relation, time) records, in adjacency order.
inline LocalStructure build_local_structure(const Quadruple& f, const TkgIndex& idx,
                                            std::uint32_t structure_window) {
    auto near_s = detail::windowed_links(idx, f.s, f.t, structure_window);
    auto near_o = detail::windowed_links(idx, f.o, f.t, structure_window);
    LocalStructure out;
    for (const auto& [e, links_s] : near_s) {
        if (e == f.s || e == f.o) continue;
        auto it = near_o.find(e);
        if (it == near_o.end()) continue;
        BridgeStructure bridge;
        bridge.bridge = e;
        bridge.items.reserve(links_s.size() * it->second.size());
        for (const auto& [rs, ts] : links_s)
            for (const auto& [ro, to] : it->second)
                bridge.items.push_back({rs, double(ts), ro, double(to)});
        out.bridges.push_back(std::move(bridge));
    }
    return out;
}

// Attention over one bridge's items: softmax of the negated time gaps
// |t_near_s - t_near_o|. Empty item lists yield an empty weight vector.
inline std::vector<double> bridge_attention(const BridgeStructure& bridge) {
    std::vector<double> w;
    w.reserve(bridge.items.size());
    if (bridge.items.empty()) return w;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& it : bridge.items)
        best = std::max(best, -std::abs(it.t_near_s - it.t_near_o));
    double z = 0.0;
    for (const auto& it : bridge.items) {
        double v = std::exp(-std::abs(it.t_near_s - it.t_near_o) - best);
        w.push_back(v);
        z += v;
    }
    for (double& v : w) v /= z;
    return w;
}

// Structure-based plausibility of f: per bridge, the attention-weighted mean
// of relation-triangle scores (pair relations closing with f's relation),
// amplified by 1 + the entity-triangle score of (s, bridge, o); summed over
// bridges. No bridges -> 0.
inline double aggregate_score(const Quadruple& f, const LocalStructure& structure,
                              const TriangleScores& tables) {
    double total = 0.0;
    for (const auto& bridge : structure.bridges) {
        if (bridge.items.empty()) continue;
        auto alpha = bridge_attention(bridge);
        double relation_part = 0.0;
        for (std::size_t i = 0; i < bridge.items.size(); ++i) {
            const auto& item = bridge.items[i];
            relation_part += alpha[i] * tables.relation.score(item.r_near_s, item.r_near_o, f.r);
        }
        total += relation_part * (1.0 + tables.entity.score(f.s, bridge.bridge, f.o));
    }
    return total;
}

struct PerturbParams {
    std::uint32_t rounds = 5;        // independent perturbations averaged
    double drop_prob = 0.1;          // chance an item is removed
    double duplicate_prob = 0.1;     // chance a kept item is emitted twice
    double time_noise = 1.0;         // uniform(-x, x) added to each timestamp
    bool perturb_reference = false;  // perturb the source fact's score too
};

struct ScoredCandidate {
    CandidateNegative candidate;
    double reference_score = 0.0;          // source fact's structure score
    std::vector<double> perturbed_scores;  // one per round
    double mean_perturbed = 0.0;
    bool false_negative = false;
    double raw_label = 0.0;  // mean perturbed score; normalized at assembly
};

namespace detail {

inline LocalStructure perturb_structure(const LocalStructure& base, const PerturbParams& p,
                                        Rng& rng) {
    LocalStructure out;
    out.bridges.reserve(base.bridges.size());
    for (const auto& bridge : base.bridges) {
        BridgeStructure nb;
        nb.bridge = bridge.bridge;
        for (const auto& item : bridge.items) {
            if (rng.uniform() < p.drop_prob) continue;
            std::uint32_t copies = rng.uniform() < p.duplicate_prob ? 2 : 1;
            for (std::uint32_t c = 0; c < copies; ++c) {
                RelationPairItem ni = item;
                ni.t_near_s += rng.uniform(-p.time_noise, p.time_noise);
                ni.t_near_o += rng.uniform(-p.time_noise, p.time_noise);
                nb.items.push_back(ni);
            }
        }
        out.bridges.push_back(std::move(nb));
    }
    return out;
}

inline double reference_score_of(const Quadruple& source, const TkgIndex& idx,
                                 const TriangleScores& tables, std::uint32_t structure_window,
                                 const PerturbParams& p, std::uint64_t seed) {
    LocalStructure structure = build_local_structure(source, idx, structure_window);
    if (!p.perturb_reference) return aggregate_score(source, structure, tables);
    Rng rng(derive_seed(seed, "perturb-reference", quad_hash(source)));
    double sum = 0.0;
    for (std::uint32_t k = 0; k < p.rounds; ++k)
        sum += aggregate_score(source, perturb_structure(structure, p, rng), tables);
    return sum / double(p.rounds);
}

}  // namespace detail

// Scores one candidate under `rounds` independent structure perturbations and
// classifies it against its source fact's reference score (strictly greater
// mean -> false negative). The RNG stream is derived from the candidate
// quadruple, so results do not depend on evaluation order or worker count.
inline ScoredCandidate perturb_and_classify(const CandidateNegative& cand, const TkgIndex& idx,
                                            const TriangleScores& tables,
                                            std::uint32_t structure_window,
                                            const PerturbParams& p, std::uint64_t seed) {
    if (p.rounds < 1)
        throw std::invalid_argument("perturb_and_classify: rounds must be at least 1");
    ScoredCandidate out;
    out.candidate = cand;
    out.reference_score =
        detail::reference_score_of(cand.source, idx, tables, structure_window, p, seed);

    LocalStructure base = build_local_structure(cand.candidate, idx, structure_window);
    Rng rng(derive_seed(seed, "perturb", quad_hash(cand.candidate)));
    out.perturbed_scores.reserve(p.rounds);
    double sum = 0.0;
    for (std::uint32_t k = 0; k < p.rounds; ++k) {
        double v = aggregate_score(cand.candidate, detail::perturb_structure(base, p, rng), tables);
        out.perturbed_scores.push_back(v);
        sum += v;
    }
    out.mean_perturbed = sum / double(p.rounds);
    out.raw_label = out.mean_perturbed;
    out.false_negative = out.mean_perturbed > out.reference_score;
    return out;
}

// Relation-triangle keys that scoring the given candidates (and their source
// facts) can touch; feeds the lazy relation-table builder.
inline std::vector<IdTriple> collect_relation_keys(const std::vector<CandidateNegative>& cands,
                                                   const TkgIndex& idx,
                                                   std::uint32_t structure_window) {
    std::unordered_set<IdTriple, IdTripleHash> keys;
    std::unordered_set<Quadruple, QuadrupleHash> seen;
    auto visit = [&](const Quadruple& q) {
        if (!seen.insert(q).second) return;
        LocalStructure structure = build_local_structure(q, idx, structure_window);
        for (const auto& bridge : structure.bridges)
            for (const auto& item : bridge.items)
                keys.insert({item.r_near_s, item.r_near_o, q.r});
    };
    for (const auto& c : cands) {
        visit(c.candidate);
        visit(c.source);
    }
    std::vector<IdTriple> out(keys.begin(), keys.end());
    std::sort(out.begin(), out.end());
    return out;
}

// Scores a batch; deterministic for a given seed regardless of `threads`.
inline std::vector<ScoredCandidate> score_candidates(const std::vector<CandidateNegative>& cands,
                                                     const TkgIndex& idx,
                                                     const TriangleScores& tables,
                                                     std::uint32_t structure_window,
                                                     const PerturbParams& p, std::uint64_t seed,
                                                     unsigned threads = 1) {
    std::vector<ScoredCandidate> out(cands.size());
    parallel_for(cands.size(), threads, [&](std::size_t i) {
        out[i] = perturb_and_classify(cands[i], idx, tables, structure_window, p, seed);
    });
    return out;
}

}  // namespace tkgaug
