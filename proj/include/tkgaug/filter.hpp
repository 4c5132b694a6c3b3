#pragma once

// Candidate false-negative generation. Three per-fact generators propose
// unobserved quadruples near an observed fact: relation substitution guided by
// windowed co-occurrence, object substitution guided by frequent neighbors,
// and gap timestamps between close repeats of the same triple. A sparsity gate
// restricts generation to facts whose endpoints have few distinct neighbors.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tkgaug/core.hpp"
#include "tkgaug/index.hpp"

namespace tkgaug {

struct FilterParams {
    std::uint32_t top_m = 10;             // size of the frequency-truncated sets
    std::uint32_t relation_window = 3;    // co-occurrence window (index build + here)
    std::uint32_t time_window = 3;        // max gap bridged by the time filter
    std::uint32_t sparsity_threshold = 10;  // gate: |N(s)| or |N(o)| must be <= this
    bool sparsity_gate = true;
};

enum class FilterKind { relation, entity, time };

inline const char* to_string(FilterKind k) {
    switch (k) {
        case FilterKind::relation: return "relation";
        case FilterKind::entity: return "entity";
        case FilterKind::time: return "time";
    }
    throw std::logic_error("unknown filter kind");
}

struct CandidateNegative {
    Quadruple candidate;  // proposed unobserved quadruple
    Quadruple source;     // observed fact that proposed it
    FilterKind origin = FilterKind::relation;
};

// The m keys of highest frequency; ties broken by ascending id. Returned
// ascending by id for binary-search membership tests.
template <typename Key>
std::vector<Key> top_m(const std::unordered_map<Key, std::uint32_t>& freq, std::uint32_t m) {
    std::vector<std::pair<Key, std::uint32_t>> items(freq.begin(), freq.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (items.size() > m) items.resize(m);
    std::vector<Key> out;
    out.reserve(items.size());
    for (const auto& [k, _] : items) out.push_back(k);
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

// Memoizes the truncated frequency sets for one (index, m) pass.
class TopCache {
public:
    TopCache(const TkgIndex& idx, std::uint32_t m)
        : idx_(idx), m_(m),
          entity_rels_(idx.num_entities),
          entity_nbrs_(idx.num_entities),
          relation_rels_(idx.num_relations) {}

    const std::vector<RelationId>& entity_relations(EntityId e) {
        auto& slot = entity_rels_[e];
        if (!slot) slot = top_m(idx_.entity_relations[e], m_);
        return *slot;
    }
    const std::vector<EntityId>& entity_neighbors(EntityId e) {
        auto& slot = entity_nbrs_[e];
        if (!slot) slot = top_m(idx_.entity_neighbors[e], m_);
        return *slot;
    }
    const std::vector<RelationId>& relation_cooccur(RelationId r) {
        auto& slot = relation_rels_[r];
        if (!slot) slot = top_m(idx_.relation_cooccur[r], m_);
        return *slot;
    }

private:
    const TkgIndex& idx_;
    std::uint32_t m_;
    std::vector<std::optional<std::vector<RelationId>>> entity_rels_;
    std::vector<std::optional<std::vector<EntityId>>> entity_nbrs_;
    std::vector<std::optional<std::vector<RelationId>>> relation_rels_;
};

template <typename Sink>
void emit_relation_candidates(const Quadruple& f, const TkgIndex& idx, TopCache& cache,
                              Sink&& sink) {
    const auto& near_r = cache.relation_cooccur(f.r);
    const auto& near_s = cache.entity_relations(f.s);
    // Both ascending: intersect by merge walk.
    std::size_t i = 0, j = 0;
    while (i < near_r.size() && j < near_s.size()) {
        if (near_r[i] < near_s[j]) {
            ++i;
        } else if (near_s[j] < near_r[i]) {
            ++j;
        } else {
            Quadruple q{f.s, near_r[i], f.o, f.t};
            if (!idx.contains(q)) sink(q, FilterKind::relation);
            ++i;
            ++j;
        }
    }
}

template <typename Sink>
void emit_entity_candidates(const Quadruple& f, const TkgIndex& idx, TopCache& cache,
                            Sink&& sink) {
    for (EntityId cand_o : cache.entity_neighbors(f.s)) {
        const auto& rels = cache.entity_relations(cand_o);
        if (!std::binary_search(rels.begin(), rels.end(), f.r)) continue;
        Quadruple q{f.s, f.r, cand_o, f.t};
        if (!idx.contains(q)) sink(q, FilterKind::entity);
    }
}

template <typename Sink>
void emit_time_candidates(const Quadruple& f, const TkgIndex& idx, std::uint32_t time_window,
                          Sink&& sink) {
    auto it = idx.pair_timeline.find({f.s, f.r, f.o});
    if (it == idx.pair_timeline.end()) return;
    const auto& times = it->second;
    auto pos = std::lower_bound(times.begin(), times.end(), f.t);
    if (pos == times.begin()) return;  // no earlier occurrence
    TimeId prev = *(pos - 1);
    if (f.t - prev >= time_window) return;
    // The predecessor bounds an empty stretch of the timeline, so every gap
    // timestamp is guaranteed unobserved for this triple.
    for (TimeId t = prev + 1; t < f.t; ++t) sink(Quadruple{f.s, f.r, f.o, t}, FilterKind::time);
}

inline bool passes_sparsity_gate(const Quadruple& f, const TkgIndex& idx,
                                 const FilterParams& p) {
    return idx.entity_neighbors[f.s].size() <= p.sparsity_threshold ||
           idx.entity_neighbors[f.o].size() <= p.sparsity_threshold;
}

// Runs all three generators over every indexed fact; `sink(candidate, source,
// kind)` sees raw (pre-dedup) emissions in fact order, relation -> entity ->
// time within a fact.
template <typename Sink>
void for_each_candidate(const TkgIndex& idx, const FilterParams& p, bool use_sparsity_gate,
                        Sink&& sink) {
    TopCache cache(idx, p.top_m);
    for (const auto& f : idx.facts) {
        if (use_sparsity_gate && !passes_sparsity_gate(f, idx, p)) continue;
        auto forward = [&](const Quadruple& q, FilterKind kind) { sink(q, f, kind); };
        emit_relation_candidates(f, idx, cache, forward);
        emit_entity_candidates(f, idx, cache, forward);
        emit_time_candidates(f, idx, p.time_window, forward);
    }
}

}  // namespace detail

inline std::vector<CandidateNegative> relation_filter(const Quadruple& f, const TkgIndex& idx,
                                                      const FilterParams& p) {
    detail::TopCache cache(idx, p.top_m);
    std::vector<CandidateNegative> out;
    detail::emit_relation_candidates(
        f, idx, cache, [&](const Quadruple& q, FilterKind k) { out.push_back({q, f, k}); });
    return out;
}

inline std::vector<CandidateNegative> entity_filter(const Quadruple& f, const TkgIndex& idx,
                                                    const FilterParams& p) {
    detail::TopCache cache(idx, p.top_m);
    std::vector<CandidateNegative> out;
    detail::emit_entity_candidates(
        f, idx, cache, [&](const Quadruple& q, FilterKind k) { out.push_back({q, f, k}); });
    return out;
}

inline std::vector<CandidateNegative> time_filter(const Quadruple& f, const TkgIndex& idx,
                                                  const FilterParams& p) {
    std::vector<CandidateNegative> out;
    detail::emit_time_candidates(
        f, idx, p.time_window,
        [&](const Quadruple& q, FilterKind k) { out.push_back({q, f, k}); });
    return out;
}

// All three generators over every (gated) train fact, deduplicated by
// candidate quadruple keeping the first-emitting (source, origin), then sorted
// by candidate (s, r, o, t) for order-stable output.
inline std::vector<CandidateNegative> filter_all(const TkgIndex& idx, const FilterParams& p) {
    std::vector<CandidateNegative> out;
    std::unordered_set<Quadruple, QuadrupleHash> seen;
    detail::for_each_candidate(idx, p, p.sparsity_gate,
                               [&](const Quadruple& q, const Quadruple& src, FilterKind kind) {
                                   if (seen.insert(q).second) out.push_back({q, src, kind});
                               });
    std::sort(out.begin(), out.end(), [](const CandidateNegative& a, const CandidateNegative& b) {
        return a.candidate < b.candidate;
    });
    return out;
}

// Fraction of `removed` facts regenerated by the filters over the retained
// index. The sparsity gate defaults to off here so recovery measures the
// generators themselves.
inline double recovery_rate(const TkgIndex& retained_idx, const std::vector<Quadruple>& removed,
                            const FilterParams& p, bool use_sparsity_gate = false) {
    if (removed.empty())
        throw std::invalid_argument("recovery_rate: removed fact list is empty");
    std::unordered_set<Quadruple, QuadrupleHash> candidates;
    detail::for_each_candidate(
        retained_idx, p, use_sparsity_gate,
        [&](const Quadruple& q, const Quadruple&, FilterKind) { candidates.insert(q); });
    std::size_t hit = 0;
    for (const auto& q : removed)
        if (candidates.count(q)) ++hit;
    return double(hit) / double(removed.size());
}

}  // namespace tkgaug
