#pragma once

// Ranking evaluation and diagnostics: MRR / Hits@k with pessimistic tie
// handling and optional known-object filtering, per-timestamp balance
// statistics, subject-degree strata, cross-run rank fluctuation, and the
// top-ranked-entity preference profile.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "tkgaug/core.hpp"
#include "tkgaug/dataset.hpp"
#include "tkgaug/index.hpp"
#include "tkgaug/model.hpp"

namespace tkgaug {

// (s, r, t) -> ascending object ids observed in any split; used to exclude
// other known-true objects from ranking.
struct KnownObjects {
    std::unordered_map<std::array<std::uint32_t, 3>, std::vector<EntityId>, IdTripleHash> map;

    const std::vector<EntityId>* find(EntityId s, RelationId r, TimeId t) const {
        auto it = map.find({s, r, t});
        return it == map.end() ? nullptr : &it->second;
    }
};

inline KnownObjects build_known_objects(const Dataset& d) {
    KnownObjects known;
    for (const auto* split : {&d.train, &d.valid, &d.test})
        for (const auto& q : *split) known.map[{q.s, q.r, q.t}].push_back(q.o);
    for (auto& [k, v] : known.map) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return known;
}

// Pessimistic rank of the true object among all entities: 1 + the number of
// candidates scoring >= it (ties count against). With filtering, candidates
// other than the true object that are known true for (s, r, t) are skipped.
inline std::uint32_t rank(const ModelState& st, const Quadruple& f, const KnownObjects* known,
                          bool filter_known) {
    st.check_ids(f);
    std::vector<double> weight(st.dim);
    const double* es = st.entity_row(f.s);
    const double* rr = st.relation_row(f.r);
    const double* tt = st.time_row(f.t);
    for (std::uint32_t k = 0; k < st.dim; ++k) weight[k] = es[k] * rr[k];
    // Multiplication order matches score() so ties resolve identically.
    auto score_of = [&](EntityId o) {
        const double* eo = st.entity_row(o);
        double sum = 0.0;
        for (std::uint32_t k = 0; k < st.dim; ++k) sum += weight[k] * eo[k] * tt[k];
        return sum;
    };
    const std::vector<EntityId>* skip =
        filter_known && known ? known->find(f.s, f.r, f.t) : nullptr;
    double true_score = score_of(f.o);
    std::uint32_t ahead = 0;
    for (EntityId o = 0; o < st.sizes.entities; ++o) {
        if (o == f.o) continue;
        if (skip && std::binary_search(skip->begin(), skip->end(), o)) continue;
        if (score_of(o) >= true_score) ++ahead;
    }
    return 1 + ahead;
}

struct EvalReport {
    double mrr = 0.0;
    std::map<int, double> hits;  // k in {1, 3, 10}
    std::map<TimeId, std::pair<double, std::uint32_t>> per_timestamp;  // mean MRR, fact count
    double per_timestamp_std = 0.0;
    std::map<std::string, double> degree_strata;  // subject neighbor-count band -> MRR
    std::vector<std::pair<Quadruple, std::uint32_t>> rank_records;
};

inline std::vector<std::uint32_t> compute_ranks(const ModelState& st,
                                                const std::vector<Quadruple>& facts,
                                                const KnownObjects* known, bool filter_known,
                                                unsigned threads) {
    std::vector<std::uint32_t> ranks(facts.size());
    parallel_for(facts.size(), threads,
                 [&](std::size_t i) { ranks[i] = rank(st, facts[i], known, filter_known); });
    return ranks;
}

inline double mean_reciprocal_rank(const ModelState& st, const std::vector<Quadruple>& facts,
                                   const KnownObjects* known, bool filter_known,
                                   unsigned threads = 1) {
    if (facts.empty()) throw std::invalid_argument("mean_reciprocal_rank: no facts");
    auto ranks = compute_ranks(st, facts, known, filter_known, threads);
    double sum = 0.0;
    for (auto r : ranks) sum += 1.0 / double(r);
    return sum / double(ranks.size());
}

// Full report over `facts`. Degree strata bucket the subject's distinct
// neighbor count; the per-timestamp spread is the population standard
// deviation of per-timestamp mean MRRs.
inline EvalReport evaluate(const ModelState& st, const std::vector<Quadruple>& facts,
                           const TkgIndex& idx, const KnownObjects* known,
                           bool filter_known = true, unsigned threads = 1) {
    if (facts.empty()) throw std::invalid_argument("evaluate: no facts");
    auto ranks = compute_ranks(st, facts, known, filter_known, threads);

    EvalReport rep;
    double sum_rr = 0.0;
    std::map<int, std::uint32_t> hit_counts = {{1, 0}, {3, 0}, {10, 0}};
    std::map<TimeId, std::pair<double, std::uint32_t>> by_time;  // sum RR, count
    struct Stratum {
        std::uint32_t lo, hi;
        const char* label;
        double sum_rr = 0.0;
        std::uint32_t count = 0;
    };
    std::array<Stratum, 4> strata = {{{0, 10, "[0,10)"},
                                      {10, 50, "[10,50)"},
                                      {50, 100, "[50,100)"},
                                      {100, std::uint32_t(-1), "[100,inf)"}}};

    rep.rank_records.reserve(facts.size());
    for (std::size_t i = 0; i < facts.size(); ++i) {
        std::uint32_t r = ranks[i];
        double rr = 1.0 / double(r);
        sum_rr += rr;
        for (auto& [k, c] : hit_counts)
            if (r <= std::uint32_t(k)) ++c;
        auto& t_slot = by_time[facts[i].t];
        t_slot.first += rr;
        t_slot.second += 1;
        std::uint32_t degree = facts[i].s < idx.num_entities
                                   ? std::uint32_t(idx.entity_neighbors[facts[i].s].size())
                                   : 0;
        for (auto& s : strata) {
            if (degree >= s.lo && degree < s.hi) {
                s.sum_rr += rr;
                s.count += 1;
                break;
            }
        }
        rep.rank_records.push_back({facts[i], r});
    }

    rep.mrr = sum_rr / double(facts.size());
    for (auto& [k, c] : hit_counts) rep.hits[k] = double(c) / double(facts.size());
    double mean_of_means = 0.0;
    for (auto& [t, slot] : by_time) {
        double mean = slot.first / double(slot.second);
        rep.per_timestamp[t] = {mean, slot.second};
        mean_of_means += mean;
    }
    mean_of_means /= double(by_time.size());
    double var = 0.0;
    for (auto& [t, slot] : rep.per_timestamp) {
        double dlt = slot.first - mean_of_means;
        var += dlt * dlt;
    }
    rep.per_timestamp_std = std::sqrt(var / double(rep.per_timestamp.size()));
    for (auto& s : strata)
        if (s.count > 0) rep.degree_strata[s.label] = s.sum_rr / double(s.count);
    return rep;
}

struct FactFluctuation {
    Quadruple fact;
    double mean_rank = 0.0;
    std::uint32_t min_rank = 0;
    std::uint32_t max_rank = 0;
    double std_rank = 0.0;
};

struct FluctuationReport {
    std::vector<FactFluctuation> facts;
    double mean_range = 0.0;  // average of (max - min) across facts
};

// Cross-run stability of per-fact ranks; every report must cover the same
// facts in the same order.
inline FluctuationReport rank_fluctuation(const std::vector<EvalReport>& runs) {
    if (runs.size() < 2)
        throw std::invalid_argument("rank_fluctuation: need at least two runs");
    const auto& base = runs.front().rank_records;
    for (const auto& r : runs) {
        if (r.rank_records.size() != base.size())
            throw std::invalid_argument("rank_fluctuation: runs cover different fact sets");
        for (std::size_t i = 0; i < base.size(); ++i)
            if (r.rank_records[i].first != base[i].first)
                throw std::invalid_argument("rank_fluctuation: runs cover different fact sets");
    }
    FluctuationReport out;
    out.facts.reserve(base.size());
    double range_sum = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        FactFluctuation f;
        f.fact = base[i].first;
        f.min_rank = std::uint32_t(-1);
        double sum = 0.0, sq = 0.0;
        for (const auto& r : runs) {
            std::uint32_t v = r.rank_records[i].second;
            f.min_rank = std::min(f.min_rank, v);
            f.max_rank = std::max(f.max_rank, v);
            sum += v;
            sq += double(v) * double(v);
        }
        double n = double(runs.size());
        f.mean_rank = sum / n;
        double var = sq / n - f.mean_rank * f.mean_rank;
        f.std_rank = std::sqrt(std::max(0.0, var));
        range_sum += double(f.max_rank - f.min_rank);
        out.facts.push_back(f);
    }
    out.mean_range = base.empty() ? 0.0 : range_sum / double(base.size());
    return out;
}

struct QueryTriple {
    EntityId s = 0;
    RelationId r = 0;
    TimeId t = 0;
};

struct PreferenceProfile {
    double mean_entity_interactions = 0.0;   // train facts touching the entity
    double mean_time_span = 0.0;             // gap to nearest active timestamp <= t
    double mean_relation_interactions = 0.0; // entity's facts carrying the query relation
};

// Statistics of the entities the model ranks highest: for each query, the
// top-n entities by score (ties by ascending id) contribute their train-side
// interaction count, their temporal distance to the query (entities never
// active at or before t contribute the sentinel t + 1), and their familiarity
// with the query relation.
inline PreferenceProfile preference_profile(const ModelState& st,
                                            const std::vector<QueryTriple>& queries,
                                            const TkgIndex& idx, std::uint32_t top_n) {
    if (top_n < 1) throw std::invalid_argument("preference_profile: top_n must be >= 1");
    PreferenceProfile out;
    std::size_t samples = 0;
    for (const auto& query : queries) {
        std::vector<EntityId> all(st.sizes.entities);
        for (EntityId e = 0; e < st.sizes.entities; ++e) all[e] = e;
        std::vector<double> scores = score_objects(st, query.s, query.r, query.t, all);
        std::uint32_t n = std::min<std::uint32_t>(top_n, st.sizes.entities);
        std::partial_sort(all.begin(), all.begin() + n, all.end(), [&](EntityId a, EntityId b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;
        });
        for (std::uint32_t i = 0; i < n; ++i) {
            EntityId e = all[i];
            out.mean_entity_interactions += double(idx.adjacency[e].size());
            const auto& adj = idx.adjacency[e];
            // adjacency is sorted by timestamp; find the latest entry <= t.
            auto it = std::upper_bound(
                adj.begin(), adj.end(), query.t,
                [](TimeId t, const AdjEntry& a) { return t < a.t; });
            if (it == adj.begin())
                out.mean_time_span += double(query.t) + 1.0;
            else
                out.mean_time_span += double(query.t) - double((it - 1)->t);
            auto rit = idx.entity_relations[e].find(query.r);
            out.mean_relation_interactions +=
                rit == idx.entity_relations[e].end() ? 0.0 : double(rit->second);
            ++samples;
        }
    }
    if (samples > 0) {
        out.mean_entity_interactions /= double(samples);
        out.mean_time_span /= double(samples);
        out.mean_relation_interactions /= double(samples);
    }
    return out;
}

}  // namespace tkgaug
