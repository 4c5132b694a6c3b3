#pragma once

// Brute-force reference implementations used to cross-check the library.
// Everything here recomputes from the raw fact list with naive exhaustive
// loops and ordered containers; none of it shares code with the indexed
// implementations under include/.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "tkgaug/core.hpp"
#include "tkgaug/filter.hpp"
#include "tkgaug/model.hpp"
#include "tkgaug/rng.hpp"
#include "tkgaug/trainer.hpp"

namespace tkgaug::testing::oracle {

using Triple = std::array<std::uint32_t, 3>;

struct Tables {
    std::vector<Quadruple> facts;  // distinct, first-occurrence order
    std::set<Quadruple> fact_set;
    std::map<EntityId, std::map<EntityId, std::uint32_t>> neighbor_freq;    // N(e)
    std::map<EntityId, std::map<RelationId, std::uint32_t>> relation_freq;  // R(e)
    std::map<RelationId, std::map<RelationId, std::uint32_t>> cooccur;      // R(r)
    std::set<Triple> triples;                                               // time-collapsed
    std::map<std::pair<EntityId, EntityId>, std::uint32_t> pair_mult;       // N(a,b), a <= b
    std::map<Triple, std::vector<TimeId>> timeline;                         // (s,r,o) -> times
};

inline Tables brute_tables(const std::vector<Quadruple>& train, std::uint32_t relation_window) {
    Tables t;
    for (const auto& q : train) {
        if (t.fact_set.insert(q).second) t.facts.push_back(q);
    }
    for (const auto& q : t.facts) {
        t.neighbor_freq[q.s][q.o] += 1;
        t.relation_freq[q.s][q.r] += 1;
        if (q.o != q.s) {
            t.neighbor_freq[q.o][q.s] += 1;
            t.relation_freq[q.o][q.r] += 1;
        }
        t.triples.insert({q.s, q.r, q.o});
        t.timeline[{q.s, q.r, q.o}].push_back(q.t);
    }
    for (auto& [k, v] : t.timeline) std::sort(v.begin(), v.end());
    for (const auto& tr : t.triples) {
        auto key = std::minmax(tr[0], tr[2]);
        t.pair_mult[{key.first, key.second}] += 1;
    }
    // Every ordered pair of distinct facts on the same directed (s, o) whose
    // timestamps differ by less than the window witnesses a co-occurrence.
    for (std::size_t i = 0; i < t.facts.size(); ++i) {
        for (std::size_t j = 0; j < t.facts.size(); ++j) {
            if (i == j) continue;
            const auto& a = t.facts[i];
            const auto& b = t.facts[j];
            if (a.s != b.s || a.o != b.o) continue;
            std::int64_t gap = std::int64_t(a.t) - std::int64_t(b.t);
            if (std::llabs(gap) < std::int64_t(relation_window)) t.cooccur[a.r][b.r] += 1;
        }
    }
    return t;
}

template <typename Key>
std::set<Key> brute_top_m(const std::map<Key, std::uint32_t>& freq, std::uint32_t m) {
    std::vector<std::pair<Key, std::uint32_t>> items(freq.begin(), freq.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::set<Key> out;
    for (std::size_t i = 0; i < items.size() && i < m; ++i) out.insert(items[i].first);
    return out;
}

inline std::set<RelationId> top_cooccur(const Tables& t, RelationId r, std::uint32_t m) {
    auto it = t.cooccur.find(r);
    return it == t.cooccur.end() ? std::set<RelationId>{} : brute_top_m(it->second, m);
}
inline std::set<RelationId> top_entity_relations(const Tables& t, EntityId e, std::uint32_t m) {
    auto it = t.relation_freq.find(e);
    return it == t.relation_freq.end() ? std::set<RelationId>{} : brute_top_m(it->second, m);
}
inline std::set<EntityId> top_neighbors(const Tables& t, EntityId e, std::uint32_t m) {
    auto it = t.neighbor_freq.find(e);
    return it == t.neighbor_freq.end() ? std::set<EntityId>{} : brute_top_m(it->second, m);
}

inline std::vector<Quadruple> brute_relation_filter(const Quadruple& f, const Tables& t,
                                                    std::uint32_t m) {
    auto near_r = top_cooccur(t, f.r, m);
    auto near_s = top_entity_relations(t, f.s, m);
    std::vector<Quadruple> out;
    for (RelationId r : near_r) {
        if (!near_s.count(r)) continue;
        Quadruple q{f.s, r, f.o, f.t};
        if (!t.fact_set.count(q)) out.push_back(q);
    }
    return out;
}

inline std::vector<Quadruple> brute_entity_filter(const Quadruple& f, const Tables& t,
                                                  std::uint32_t m) {
    std::vector<Quadruple> out;
    for (EntityId o : top_neighbors(t, f.s, m)) {
        if (!top_entity_relations(t, o, m).count(f.r)) continue;
        Quadruple q{f.s, f.r, o, f.t};
        if (!t.fact_set.count(q)) out.push_back(q);
    }
    return out;
}

inline std::vector<Quadruple> brute_time_filter(const Quadruple& f, const Tables& t,
                                                std::uint32_t time_window) {
    std::vector<Quadruple> out;
    bool found = false;
    TimeId latest = 0;
    auto it = t.timeline.find({f.s, f.r, f.o});
    if (it == t.timeline.end()) return out;
    for (TimeId x : it->second) {
        if (x < f.t && (!found || x > latest)) {
            latest = x;
            found = true;
        }
    }
    if (!found) return out;
    if (f.t - latest >= time_window) return out;
    for (TimeId x = latest + 1; x < f.t; ++x) {
        Quadruple q{f.s, f.r, f.o, x};
        if (!t.fact_set.count(q)) out.push_back(q);
    }
    return out;
}

inline std::vector<CandidateNegative> brute_filter_all(const Tables& t, const FilterParams& p,
                                                       bool use_sparsity_gate) {
    std::vector<CandidateNegative> out;
    std::set<Quadruple> seen;
    auto push = [&](const Quadruple& q, const Quadruple& src, FilterKind kind) {
        if (seen.insert(q).second) out.push_back({q, src, kind});
    };
    for (const auto& f : t.facts) {
        if (use_sparsity_gate) {
            std::size_t deg_s = t.neighbor_freq.count(f.s) ? t.neighbor_freq.at(f.s).size() : 0;
            std::size_t deg_o = t.neighbor_freq.count(f.o) ? t.neighbor_freq.at(f.o).size() : 0;
            if (deg_s > p.sparsity_threshold && deg_o > p.sparsity_threshold) continue;
        }
        for (const auto& q : brute_relation_filter(f, t, p.top_m)) push(q, f, FilterKind::relation);
        for (const auto& q : brute_entity_filter(f, t, p.top_m)) push(q, f, FilterKind::entity);
        for (const auto& q : brute_time_filter(f, t, p.time_window)) push(q, f, FilterKind::time);
    }
    std::sort(out.begin(), out.end(), [](const CandidateNegative& a, const CandidateNegative& b) {
        return a.candidate < b.candidate;
    });
    return out;
}

// --- triangles ------------------------------------------------------------

inline std::uint32_t brute_pair_mult(const Tables& t, EntityId a, EntityId b) {
    auto key = std::minmax(a, b);
    auto it = t.pair_mult.find({key.first, key.second});
    return it == t.pair_mult.end() ? 0 : it->second;
}

// min over the three pairwise multiplicities, for unordered triples of
// distinct entities whose pairs are all connected.
inline std::map<Triple, std::uint32_t> brute_entity_triangles(const Tables& t,
                                                              std::uint32_t num_entities) {
    std::map<Triple, std::uint32_t> counts;
    for (EntityId a = 0; a < num_entities; ++a)
        for (EntityId b = a + 1; b < num_entities; ++b)
            for (EntityId c = b + 1; c < num_entities; ++c) {
                std::uint32_t ab = brute_pair_mult(t, a, b);
                std::uint32_t bc = brute_pair_mult(t, b, c);
                std::uint32_t ac = brute_pair_mult(t, a, c);
                if (ab && bc && ac) counts[{a, b, c}] = std::min({ab, bc, ac});
            }
    return counts;
}

inline std::set<RelationId> brute_directed_relations(const Tables& t, EntityId from, EntityId to) {
    std::set<RelationId> out;
    for (const auto& tr : t.triples)
        if (tr[0] == from && tr[2] == to) out.insert(tr[1]);
    return out;
}

// Ordered relation triples (r1, r2, r3): one count per ordered entity triple
// (a, b, c) of distinct entities with a -r1-> b, b -r2-> c, a -r3-> c.
inline std::map<Triple, std::uint32_t> brute_relation_triangles(const Tables& t,
                                                                std::uint32_t num_entities) {
    std::map<Triple, std::uint32_t> counts;
    for (EntityId a = 0; a < num_entities; ++a)
        for (EntityId b = 0; b < num_entities; ++b)
            for (EntityId c = 0; c < num_entities; ++c) {
                if (a == b || b == c || a == c) continue;
                auto ab = brute_directed_relations(t, a, b);
                if (ab.empty()) continue;
                auto bc = brute_directed_relations(t, b, c);
                if (bc.empty()) continue;
                auto ac = brute_directed_relations(t, a, c);
                if (ac.empty()) continue;
                for (RelationId r1 : ab)
                    for (RelationId r2 : bc)
                        for (RelationId r3 : ac) counts[{r1, r2, r3}] += 1;
            }
    return counts;
}

// (count - min + 1) / (max - min + 1), clamped at zero; an empty table means
// every lookup is 1.
inline double brute_triangle_score(const std::map<Triple, std::uint32_t>& counts,
                                   const Triple& key) {
    if (counts.empty()) return 1.0;
    std::uint32_t mn = counts.begin()->second, mx = counts.begin()->second;
    for (const auto& [k, v] : counts) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    auto it = counts.find(key);
    std::uint32_t c = it == counts.end() ? 0 : it->second;
    double v = (double(c) - double(mn) + 1.0) / (double(mx) - double(mn) + 1.0);
    return v < 0.0 ? 0.0 : v;
}

// --- local structure and aggregate score ----------------------------------

struct BruteItem {
    RelationId r_near_s;
    double t_near_s;
    RelationId r_near_o;
    double t_near_o;

    friend bool operator<(const BruteItem& a, const BruteItem& b) {
        return std::tie(a.r_near_s, a.t_near_s, a.r_near_o, a.t_near_o) <
               std::tie(b.r_near_s, b.t_near_s, b.r_near_o, b.t_near_o);
    }
};

// bridge entity -> item multiset (order-free representation).
inline std::map<EntityId, std::vector<BruteItem>> brute_local_structure(
    const Quadruple& f, const Tables& t, std::uint32_t num_entities, std::uint32_t window) {
    std::map<EntityId, std::vector<BruteItem>> out;
    for (EntityId e = 0; e < num_entities; ++e) {
        if (e == f.s || e == f.o) continue;
        std::vector<std::pair<RelationId, TimeId>> links_s, links_o;
        for (const auto& q : t.facts) {
            if (std::llabs(std::int64_t(q.t) - std::int64_t(f.t)) > std::int64_t(window)) continue;
            bool touches_s = (q.s == f.s && q.o == e) || (q.s == e && q.o == f.s);
            bool touches_o = (q.s == f.o && q.o == e) || (q.s == e && q.o == f.o);
            if (touches_s) links_s.push_back({q.r, q.t});
            if (touches_o) links_o.push_back({q.r, q.t});
        }
        if (links_s.empty() || links_o.empty()) continue;
        auto& items = out[e];
        for (const auto& [rs, ts] : links_s)
            for (const auto& [ro, to] : links_o)
                items.push_back({rs, double(ts), ro, double(to)});
        std::sort(items.begin(), items.end());
    }
    return out;
}

// Direct transcription of the aggregate: per bridge, softmax-weighted mean of
// relation-triangle scores closed by f.r, amplified by 1 + the entity score.
inline double brute_aggregate(const Quadruple& f, const Tables& t, std::uint32_t num_entities,
                              std::uint32_t window,
                              const std::map<Triple, std::uint32_t>& entity_counts,
                              const std::map<Triple, std::uint32_t>& relation_counts) {
    auto structure = brute_local_structure(f, t, num_entities, window);
    double total = 0.0;
    for (const auto& [e, items] : structure) {
        if (items.empty()) continue;
        double z = 0.0;
        for (const auto& it : items) z += std::exp(-std::abs(it.t_near_s - it.t_near_o));
        double rel = 0.0;
        for (const auto& it : items) {
            double alpha = std::exp(-std::abs(it.t_near_s - it.t_near_o)) / z;
            rel += alpha * brute_triangle_score(relation_counts, {it.r_near_s, it.r_near_o, f.r});
        }
        EntityId x = std::min({f.s, e, f.o});
        EntityId zz = std::max({f.s, e, f.o});
        EntityId y = EntityId(std::uint64_t(f.s) + e + f.o - x - zz);
        total += rel * (1.0 + brute_triangle_score(entity_counts, {x, y, zz}));
    }
    return total;
}

// --- embedding-side oracles -----------------------------------------------

inline double brute_score(const ModelState& st, const Quadruple& q) {
    double sum = 0.0;
    for (std::uint32_t k = 0; k < st.dim; ++k)
        sum += st.entity_emb[q.s * st.dim + k] * st.relation_emb[q.r * st.dim + k] *
               st.entity_emb[q.o * st.dim + k] * st.time_emb[q.t * st.dim + k];
    return sum;
}

// Pessimistic filtered rank by full sort-free counting.
inline std::uint32_t brute_rank(const ModelState& st, const Quadruple& f,
                                const std::vector<EntityId>& known_true_objects,
                                bool filter_known) {
    double target = brute_score(st, {f.s, f.r, f.o, f.t});
    std::uint32_t ahead = 0;
    for (EntityId o = 0; o < st.sizes.entities; ++o) {
        if (o == f.o) continue;
        if (filter_known &&
            std::find(known_true_objects.begin(), known_true_objects.end(), o) !=
                known_true_objects.end())
            continue;
        if (brute_score(st, {f.s, f.r, o, f.t}) >= target) ++ahead;
    }
    return 1 + ahead;
}

// Hard-positive mining over the exact same negative draws as the trainer:
// a fact is hard when any of its sampled corruptions scores at least as high.
inline std::vector<Quadruple> brute_mine(const ModelState& st, const std::vector<Quadruple>& facts,
                                         const std::vector<std::vector<Quadruple>>& negatives) {
    std::vector<Quadruple> out;
    for (std::size_t i = 0; i < facts.size(); ++i) {
        double z = brute_score(st, facts[i]);
        for (const auto& q : negatives[i]) {
            if (brute_score(st, q) >= z) {
                out.push_back(facts[i]);
                break;
            }
        }
    }
    return out;
}

}  // namespace tkgaug::testing::oracle
