#pragma once

// Triadic-closure statistics over the time-collapsed train multigraph.
// Entity triangles: unordered entity triples scored by the minimum pairwise
// edge multiplicity. Relation triangles: ordered relation triples counted over
// ordered entity triples matching the two-hop-plus-closure template. Both
// tables normalize a count into (0, 1] against the observed extremes.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tkgaug/core.hpp"
#include "tkgaug/index.hpp"

namespace tkgaug {

// (count - min + 1) / (max - min + 1), clamped below at zero so that an
// absent triple (count 0) in a populated table scores 0. An empty table has
// min = max = 0 and every lookup scores 1 (neutral).
inline double normalized_count_score(std::uint32_t count, std::uint32_t min_count,
                                     std::uint32_t max_count) {
    double v = (double(count) - double(min_count) + 1.0) /
               (double(max_count) - double(min_count) + 1.0);
    return v < 0.0 ? 0.0 : v;
}

using IdTriple = std::array<std::uint32_t, 3>;

struct EntityTriangleTable {
    // Key: entity triple sorted ascending. Value: min pairwise multiplicity.
    std::unordered_map<IdTriple, std::uint32_t, IdTripleHash> counts;
    std::uint32_t min_count = 0;
    std::uint32_t max_count = 0;

    std::uint32_t count(EntityId a, EntityId b, EntityId c) const {
        IdTriple k{a, b, c};
        std::sort(k.begin(), k.end());
        auto it = counts.find(k);
        return it == counts.end() ? 0 : it->second;
    }

    double score(EntityId a, EntityId b, EntityId c) const {
        return normalized_count_score(count(a, b, c), min_count, max_count);
    }
};

struct RelationTriangleTable {
    // Key: (r1, r2, r3) for the template a-r1->b, b-r2->c, a-r3->c.
    std::unordered_map<IdTriple, std::uint32_t, IdTripleHash> counts;
    std::uint32_t min_count = 0;
    std::uint32_t max_count = 0;
    bool complete = true;  // false when built for a requested key subset only

    std::uint32_t count(RelationId r1, RelationId r2, RelationId r3) const {
        auto it = counts.find({r1, r2, r3});
        return it == counts.end() ? 0 : it->second;
    }

    double score(RelationId r1, RelationId r2, RelationId r3) const {
        return normalized_count_score(count(r1, r2, r3), min_count, max_count);
    }
};

struct TriangleScores {
    EntityTriangleTable entity;
    RelationTriangleTable relation;
};

namespace detail {

// Visits every unordered triangle {u < v < w} of the undirected pair graph.
template <typename Fn>
void for_each_triangle(const TkgIndex& idx, Fn&& fn) {
    for (EntityId u = 0; u < idx.num_entities; ++u) {
        const auto& nu = idx.neighbor_lists[u];
        for (EntityId v : nu) {
            if (v <= u) continue;
            const auto& nv = idx.neighbor_lists[v];
            auto iu = std::upper_bound(nu.begin(), nu.end(), v);
            auto iv = std::upper_bound(nv.begin(), nv.end(), v);
            while (iu != nu.end() && iv != nv.end()) {
                if (*iu < *iv) {
                    ++iu;
                } else if (*iv < *iu) {
                    ++iv;
                } else {
                    fn(u, v, *iu);
                    ++iu;
                    ++iv;
                }
            }
        }
    }
}

inline void finalize_extremes(const std::unordered_map<IdTriple, std::uint32_t, IdTripleHash>& m,
                              std::uint32_t& min_out, std::uint32_t& max_out) {
    std::uint32_t lo = std::numeric_limits<std::uint32_t>::max(), hi = 0;
    for (const auto& [k, c] : m) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    if (m.empty()) {
        min_out = max_out = 0;
    } else {
        min_out = lo;
        max_out = hi;
    }
}

}  // namespace detail

inline EntityTriangleTable entity_triangle_scores(const TkgIndex& idx) {
    EntityTriangleTable table;
    detail::for_each_triangle(idx, [&](EntityId u, EntityId v, EntityId w) {
        std::uint32_t c = std::min({idx.multiplicity(u, v), idx.multiplicity(v, w),
                                    idx.multiplicity(u, w)});
        table.counts.emplace(IdTriple{u, v, w}, c);
    });
    detail::finalize_extremes(table.counts, table.min_count, table.max_count);
    return table;
}

// Total work of full relation-triangle enumeration: over all triangles, the
// sum across the 6 vertex orderings of the directed relation-set size products.
inline std::uint64_t relation_combo_estimate(const TkgIndex& idx) {
    std::uint64_t total = 0;
    auto sz = [&](EntityId a, EntityId b) -> std::uint64_t {
        const auto* rels = idx.relations_between(a, b);
        return rels ? rels->size() : 0;
    };
    detail::for_each_triangle(idx, [&](EntityId u, EntityId v, EntityId w) {
        const EntityId perms[6][3] = {{u, v, w}, {u, w, v}, {v, u, w},
                                      {v, w, u}, {w, u, v}, {w, v, u}};
        for (const auto& p : perms) total += sz(p[0], p[1]) * sz(p[1], p[2]) * sz(p[0], p[2]);
    });
    return total;
}

// Exhaustive table over every ordered entity triple with all three directed
// edges present.
inline RelationTriangleTable relation_triangle_scores(const TkgIndex& idx) {
    RelationTriangleTable table;
    detail::for_each_triangle(idx, [&](EntityId u, EntityId v, EntityId w) {
        const EntityId perms[6][3] = {{u, v, w}, {u, w, v}, {v, u, w},
                                      {v, w, u}, {w, u, v}, {w, v, u}};
        for (const auto& p : perms) {
            const auto* r1s = idx.relations_between(p[0], p[1]);
            if (!r1s) continue;
            const auto* r2s = idx.relations_between(p[1], p[2]);
            if (!r2s) continue;
            const auto* r3s = idx.relations_between(p[0], p[2]);
            if (!r3s) continue;
            for (RelationId r1 : *r1s)
                for (RelationId r2 : *r2s)
                    for (RelationId r3 : *r3s) table.counts[{r1, r2, r3}] += 1;
        }
    });
    detail::finalize_extremes(table.counts, table.min_count, table.max_count);
    table.complete = true;
    return table;
}

// Exact counts for the requested keys only. Normalization extremes are taken
// over the requested keys with nonzero counts, an approximation of the global
// extremes that keeps oversized graphs tractable.
inline RelationTriangleTable relation_triangle_scores(const TkgIndex& idx,
                                                      const std::vector<IdTriple>& requested) {
    RelationTriangleTable table;
    table.complete = false;
    std::unordered_set<IdTriple, IdTripleHash> wanted(requested.begin(), requested.end());

    // Group the wanted keys by closing relation r3 and walk r3's edges.
    std::unordered_map<RelationId, std::vector<IdTriple>> by_r3;
    for (const auto& k : wanted) by_r3[k[2]].push_back(k);
    if (by_r3.empty()) {
        table.min_count = table.max_count = 0;
        return table;
    }
    std::unordered_map<RelationId, std::vector<std::pair<EntityId, EntityId>>> edges_of;
    for (const auto& [key, rels] : idx.directed_relations) {
        EntityId a = static_cast<EntityId>(key >> 32);
        EntityId b = static_cast<EntityId>(key & 0xffffffffull);
        if (a == b) continue;
        for (RelationId r : rels)
            if (by_r3.count(r)) edges_of[r].push_back({a, b});
    }

    for (const auto& [r3, keys] : by_r3) {
        auto eit = edges_of.find(r3);
        if (eit == edges_of.end()) continue;
        for (const auto& [a, c] : eit->second) {
            const auto& na = idx.neighbor_lists[a];
            const auto& nc = idx.neighbor_lists[c];
            auto ia = na.begin();
            auto ic = nc.begin();
            while (ia != na.end() && ic != nc.end()) {
                if (*ia < *ic) {
                    ++ia;
                    continue;
                }
                if (*ic < *ia) {
                    ++ic;
                    continue;
                }
                EntityId b = *ia;
                ++ia;
                ++ic;
                if (b == a || b == c) continue;
                const auto* r1s = idx.relations_between(a, b);
                if (!r1s) continue;
                const auto* r2s = idx.relations_between(b, c);
                if (!r2s) continue;
                for (RelationId r1 : *r1s)
                    for (RelationId r2 : *r2s)
                        if (wanted.count({r1, r2, r3})) table.counts[{r1, r2, r3}] += 1;
            }
        }
    }

    // Entries exist only for keys that were actually counted; absent keys
    // score through the clamp path against these observed extremes.
    detail::finalize_extremes(table.counts, table.min_count, table.max_count);
    return table;
}

// Builds both tables; the relation table falls back to the lazy per-key mode
// when full enumeration would exceed `combo_budget` and a key set is supplied.
inline TriangleScores build_triangle_scores(const TkgIndex& idx,
                                            const std::vector<IdTriple>* requested_relation_keys,
                                            std::uint64_t combo_budget = 200000000ull) {
    TriangleScores ts;
    ts.entity = entity_triangle_scores(idx);
    if (!requested_relation_keys || relation_combo_estimate(idx) <= combo_budget)
        ts.relation = relation_triangle_scores(idx);
    else
        ts.relation = relation_triangle_scores(idx, *requested_relation_keys);
    return ts;
}

}  // namespace tkgaug
