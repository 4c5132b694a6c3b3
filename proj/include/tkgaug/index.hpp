#pragma once

// Train-split index: fact-set membership, per-entity neighbor/relation
// frequency tables, windowed relation co-occurrence counts, per-triple
// timelines, and the time-collapsed multigraph views used by triangle
// counting and local-structure assembly.

#include <algorithm>
#include <array>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tkgaug/core.hpp"
#include "tkgaug/dataset.hpp"

namespace tkgaug {

// One fact incident to an entity, seen from that entity: the other endpoint,
// the fact's relation, and its timestamp. Direction is not recorded; consumers
// that need it use the directed views below.
struct AdjEntry {
    TimeId t;
    EntityId other;
    RelationId r;

    friend auto operator<=>(const AdjEntry&, const AdjEntry&) = default;
};

struct TkgIndex {
    std::uint32_t num_entities = 0;
    std::uint32_t num_relations = 0;
    std::uint32_t num_timestamps = 0;
    std::uint32_t relation_window = 0;  // co-occurrence window used at build time

    // Distinct train facts in first-occurrence order, and their membership set.
    std::vector<Quadruple> facts;
    std::unordered_set<Quadruple, QuadrupleHash> fact_set;

    // N(e): distinct co-entities with fact counts (either role).
    std::vector<std::unordered_map<EntityId, std::uint32_t>> entity_neighbors;
    // R(e): relations of facts touching e (either role), with fact counts.
    std::vector<std::unordered_map<RelationId, std::uint32_t>> entity_relations;
    // R(r): relations co-occurring with r on a shared directed (s, o) pair
    // within the relation window; values count ordered witnessing fact pairs.
    std::vector<std::unordered_map<RelationId, std::uint32_t>> relation_cooccur;

    // (s, r, o) -> ascending timestamps of its occurrences.
    std::unordered_map<std::array<std::uint32_t, 3>, std::vector<TimeId>, IdTripleHash>
        pair_timeline;
    // Directed (s, o) -> ascending distinct relations (time-collapsed edges).
    std::unordered_map<std::uint64_t, std::vector<RelationId>, U64Hash> directed_relations;
    // Unordered {a, b} -> number of time-collapsed triples on the pair,
    // both directions summed.
    std::unordered_map<std::uint64_t, std::uint32_t, U64Hash> pair_multiplicity;
    // Undirected distinct-neighbor lists, ascending, self excluded.
    std::vector<std::vector<EntityId>> neighbor_lists;
    // All incident facts per entity, sorted by (t, other, r).
    std::vector<std::vector<AdjEntry>> adjacency;

    bool contains(const Quadruple& q) const { return fact_set.count(q) != 0; }

    const std::vector<RelationId>* relations_between(EntityId from, EntityId to) const {
        auto it = directed_relations.find(pair_key(from, to));
        return it == directed_relations.end() ? nullptr : &it->second;
    }

    std::uint32_t multiplicity(EntityId a, EntityId b) const {
        auto it = pair_multiplicity.find(unordered_pair_key(a, b));
        return it == pair_multiplicity.end() ? 0 : it->second;
    }
};

// Builds every index from the train split only (duplicate rows collapse into
// one fact). `relation_window` bounds |t - t'| for co-occurrence witnesses.
inline TkgIndex build_indices(const Dataset& d, std::uint32_t relation_window) {
    TkgIndex idx;
    idx.num_entities = d.num_entities();
    idx.num_relations = d.num_relations();
    idx.num_timestamps = d.num_timestamps();
    idx.relation_window = relation_window;
    idx.entity_neighbors.resize(idx.num_entities);
    idx.entity_relations.resize(idx.num_entities);
    idx.relation_cooccur.resize(idx.num_relations);
    idx.neighbor_lists.resize(idx.num_entities);
    idx.adjacency.resize(idx.num_entities);

    struct TimedRel {
        TimeId t;
        RelationId r;
    };
    std::unordered_map<std::uint64_t, std::vector<TimedRel>, U64Hash> directed_facts;

    idx.facts.reserve(d.train.size());
    for (const auto& q : d.train) {
        if (!idx.fact_set.insert(q).second) continue;
        idx.facts.push_back(q);
        if (q.s >= idx.num_entities || q.o >= idx.num_entities || q.r >= idx.num_relations)
            throw std::out_of_range("train fact references an id outside the vocabularies");

        idx.entity_neighbors[q.s][q.o] += 1;
        idx.entity_relations[q.s][q.r] += 1;
        if (q.o != q.s) {
            idx.entity_neighbors[q.o][q.s] += 1;
            idx.entity_relations[q.o][q.r] += 1;
        }
        idx.pair_timeline[{q.s, q.r, q.o}].push_back(q.t);
        directed_facts[pair_key(q.s, q.o)].push_back({q.t, q.r});
        idx.adjacency[q.s].push_back({q.t, q.o, q.r});
        if (q.o != q.s) idx.adjacency[q.o].push_back({q.t, q.s, q.r});
    }

    for (auto& [key, times] : idx.pair_timeline) std::sort(times.begin(), times.end());
    for (auto& adj : idx.adjacency) std::sort(adj.begin(), adj.end());

    for (auto& [key, entries] : directed_facts) {
        // Time-collapsed directed edge: distinct relations on this (s, o).
        auto& rels = idx.directed_relations[key];
        rels.reserve(entries.size());
        for (const auto& e : entries) rels.push_back(e.r);
        std::sort(rels.begin(), rels.end());
        rels.erase(std::unique(rels.begin(), rels.end()), rels.end());

        // Windowed co-occurrence: every ordered pair of distinct facts on this
        // directed pair with |t_a - t_b| < relation_window witnesses both
        // (anchor r_a sees r_b) and (anchor r_b sees r_a).
        std::sort(entries.begin(), entries.end(),
                  [](const TimedRel& a, const TimedRel& b) { return a.t < b.t; });
        std::size_t lo = 0;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            while (lo < i && entries[i].t - entries[lo].t >= relation_window) ++lo;
            if (relation_window == 0) {
                lo = i;
                continue;
            }
            for (std::size_t j = lo; j < i; ++j) {
                idx.relation_cooccur[entries[j].r][entries[i].r] += 1;
                idx.relation_cooccur[entries[i].r][entries[j].r] += 1;
            }
        }
    }

    for (const auto& [key, rels] : idx.directed_relations) {
        EntityId s = static_cast<EntityId>(key >> 32);
        EntityId o = static_cast<EntityId>(key & 0xffffffffull);
        idx.pair_multiplicity[unordered_pair_key(s, o)] +=
            static_cast<std::uint32_t>(rels.size());
    }

    for (EntityId e = 0; e < idx.num_entities; ++e) {
        auto& list = idx.neighbor_lists[e];
        list.reserve(idx.entity_neighbors[e].size());
        for (const auto& [other, _] : idx.entity_neighbors[e])
            if (other != e) list.push_back(other);
        std::sort(list.begin(), list.end());
    }
    return idx;
}

}  // namespace tkgaug
