#pragma once

// Deterministic synthetic event-graph generator. Produces datasets with the
// statistical texture of news-style temporal knowledge graphs: one real-world
// event is reported as several parallel relations between the same pair on
// the same day, pairs are observed in long regular-cadence series with
// occasional skipped days, each actor draws its relations from a small
// repertoire, entity and relation popularity are Zipf, a few "wire" pairs
// report daily, and a thin noise floor remains. Entity, relation, timestamp,
// and fact counts come out exactly as requested.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "tkgaug/core.hpp"
#include "tkgaug/dataset.hpp"
#include "tkgaug/rng.hpp"

namespace tkgaug {

struct SyntheticSpec {
    std::uint32_t entities = 7128;
    std::uint32_t relations = 230;
    std::uint32_t timestamps = 365;
    std::uint32_t facts = 90730;
    std::uint64_t seed = 7;

    double entity_exponent = 0.9;    // Zipf exponent for entity popularity
    double relation_exponent = 0.8;  // Zipf exponent for relation-block popularity
    double series_heavy_tail = 1.1;  // Pareto shape of series observation counts
    std::uint32_t series_min = 6;    // Pareto scale (minimum observations)
    std::uint32_t series_cap = 120;  // max observations of one dyad series
    double object_palette_bias = 0.65;  // fresh pair block taken from object's palette
    double trio_prob = 0.05;         // third same-day relation per observation
    double parallel_prob = 0.9;      // chance each clique partner joins one observation day
    double skip_prob = 0.08;         // observation skipped (gap in the series)
    double jitter_prob = 0.1;        // observation lands a day off cadence
    double noise_fraction = 0.005;   // uniform one-off facts
};

namespace detail {

// Cumulative Zipf sampler over [0, n).
class ZipfSampler {
public:
    ZipfSampler(std::uint32_t n, double exponent) : cdf_(n) {
        double acc = 0.0;
        for (std::uint32_t i = 0; i < n; ++i) {
            acc += std::pow(double(i + 1), -exponent);
            cdf_[i] = acc;
        }
    }
    std::uint32_t draw(Rng& rng) const {
        double u = rng.uniform() * cdf_.back();
        return static_cast<std::uint32_t>(
            std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
};

}  // namespace detail

inline Dataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.entities < 64 || spec.relations < 3 || spec.timestamps < 2)
        throw std::invalid_argument("generate_synthetic: graph dimensions too small");
    std::uint64_t floor_facts = 3ull * spec.entities + spec.relations + spec.timestamps + 100;
    if (spec.facts < floor_facts)
        throw std::invalid_argument("generate_synthetic: fact budget below coverage floor");

    const std::uint32_t E = spec.entities, R = spec.relations, T = spec.timestamps;
    Rng rng(derive_seed(spec.seed, "synthetic"));

    // Relations come in blocks of up to five "companion" codes; one observed
    // event usually yields facts under two or three codes of one block.
    const std::uint32_t n_blocks = (R + 4) / 5;
    auto block_begin = [](std::uint32_t b) { return 5 * b; };
    auto block_size = [&](std::uint32_t b) { return std::min(R, 5 * b + 5) - 5 * b; };
    auto pick_in_block = [&](std::uint32_t b) {
        std::uint32_t m = block_size(b), off = 0;
        while (off + 1 < m && rng.uniform() < 0.45) ++off;  // skew toward the block head
        return RelationId(block_begin(b) + off);
    };
    auto sibling = [&](RelationId r, std::uint32_t step) {
        std::uint32_t b = r / 5, base = block_begin(b), m = block_size(b);
        return RelationId(base + (r - base + step) % m);
    };

    detail::ZipfSampler ent_pop(E, spec.entity_exponent);
    detail::ZipfSampler block_pop(n_blocks, spec.relation_exponent);

    // Every actor has a home relation block, and a hard repertoire cap of two
    // blocks total across both directions. The cap keeps any entity at <= 10
    // distinct relation codes over all its facts, which is what makes
    // per-entity relation frequencies genuinely top-heavy.
    std::vector<std::uint32_t> palette(E);
    for (auto& b : palette) b = block_pop.draw(rng);
    std::vector<std::vector<std::uint32_t>> blocks(E);
    auto has_block = [](const std::vector<std::uint32_t>& v, std::uint32_t b) {
        return std::find(v.begin(), v.end(), b) != v.end();
    };
    auto adopt = [&](EntityId s, EntityId o, std::uint32_t b) {
        auto& bs = blocks[s];
        auto& bo = blocks[o];
        bool s_has = has_block(bs, b), o_has = has_block(bo, b);
        if (!s_has && bs.size() >= 2) return false;
        if (!o_has && bo.size() >= 2) return false;
        if (!s_has) bs.push_back(b);
        if (!o_has) bo.push_back(b);
        return true;
    };
    // A block both endpoints may report under, or nothing if their repertoires
    // are full and disjoint.
    auto pair_block = [&](EntityId s, EntityId o) -> std::optional<std::uint32_t> {
        const auto& bs = blocks[s];
        const auto& bo = blocks[o];
        for (std::uint32_t b : bs)
            if (has_block(bo, b)) return b;
        std::uint32_t fresh[3] = {rng.uniform() < spec.object_palette_bias ? palette[o]
                                                                           : palette[s],
                                  palette[s], block_pop.draw(rng)};
        for (std::uint32_t b : fresh)
            if (adopt(s, o, b)) return b;
        for (std::uint32_t b : bo)
            if (adopt(s, o, b)) return b;
        for (std::uint32_t b : bs)
            if (adopt(s, o, b)) return b;
        return std::nullopt;
    };

    std::unordered_set<Quadruple, QuadrupleHash> seen;
    std::vector<Quadruple> facts;
    facts.reserve(spec.facts);
    auto emit = [&](EntityId s, RelationId r, EntityId o, TimeId t) {
        if (facts.size() >= spec.facts) return false;
        Quadruple q{s, r, o, t};
        if (!seen.insert(q).second) return false;
        facts.push_back(q);
        return true;
    };

    // --- core coverage; fits inside the validated floor -------------------
    // Wire pairs adopt their blocks first, while their ledgers are empty.
    const std::uint32_t n_wire = std::min<std::uint32_t>(4, E / 2);
    std::vector<RelationId> wire_rel(n_wire);
    for (std::uint32_t k = 0; k < n_wire; ++k) {
        adopt(EntityId(2 * k), EntityId(2 * k + 1), palette[2 * k]);
        wire_rel[k] = pick_in_block(palette[2 * k]);
    }

    // Every entity: introduced by a same-day relation trio on a dedicated
    // pair. Consecutive ids are paired off so one series covers two sparse
    // actors; the texture pass later revisits these pairs on follow-up days,
    // so the trio day is drawn with room for a short series after it.
    struct Recur {
        EntityId s, o;
        RelationId c;
        TimeId t0;
        std::uint32_t delta;
    };
    auto draw_cadence = [&] {
        std::uint32_t delta = 2 + rng.below(5);  // cadence 2..6, span <= 18
        if (3 * delta >= T) delta = std::max<std::uint32_t>(1, (T - 1) / 3);
        std::uint32_t span = 3 * delta;
        TimeId t0 = TimeId(rng.below(T > span ? T - span : 1));
        return std::pair<TimeId, std::uint32_t>{t0, delta};
    };
    std::vector<Recur> cover;
    cover.reserve((E + 1) / 2);
    for (EntityId a = 0; a < E; a += 2) {
        auto try_partner = [&](EntityId b) {
            if (b == a) return false;
            auto blk = pair_block(a, b);
            if (!blk) return false;
            RelationId c = pick_in_block(*blk);
            auto [t0, delta] = draw_cadence();
            for (std::uint32_t k = 0; k < 3; ++k) emit(a, sibling(c, k), b, t0);
            cover.push_back({a, b, c, t0, delta});
            return true;
        };
        bool done = false;
        if (a + 1 < E)
            done = try_partner(EntityId(a + 1));
        else  // odd entity count: pair the last id with a popular partner
            for (std::uint32_t attempt = 0; attempt < 16 && !done; ++attempt)
                done = try_partner(ent_pop.draw(rng));
        for (EntityId b = 0; b < E && !done; ++b) done = try_partner(b);
        if (!done) throw std::runtime_error("generate_synthetic: repertoire caps too tight");
    }

    // Every day: one backbone fact from a rotating set of wire pairs, so each
    // wire pair forms a long fixed-cadence series spanning the calendar.
    for (TimeId t = 0; t < T; ++t) {
        std::uint32_t k = t % n_wire;
        emit(EntityId(2 * k), wire_rel[k], EntityId(2 * k + 1), t);
    }

    // Every relation: one seed fact on a pair that can adopt the relation's
    // block, remembered so the texture pass can grow a small series around it.
    std::vector<Recur> rel_seed(R);
    for (RelationId r = 0; r < R; ++r) {
        std::uint32_t br = r / 5;
        EntityId s = 0, o = 0;
        bool found = false;
        for (std::uint32_t attempt = 0; attempt < 32 && !found; ++attempt) {
            s = ent_pop.draw(rng);
            o = ent_pop.draw(rng);
            if (s == o) continue;
            found = adopt(s, o, br);
        }
        for (EntityId x = E; x >= 2 && !found; x -= 2) {
            s = EntityId(x - 2);
            o = EntityId(x - 1);
            found = adopt(s, o, br);
        }
        if (!found) throw std::runtime_error("generate_synthetic: repertoire caps too tight");
        auto [t0, delta] = draw_cadence();
        rel_seed[r] = {s, o, r, t0, delta};
        emit(s, r, o, t0);
    }

    // --- texture; best effort within the remaining budget -----------------
    std::size_t noise_budget = std::size_t(spec.noise_fraction * double(spec.facts));
    std::size_t series_target = spec.facts - std::min<std::size_t>(noise_budget, spec.facts);
    auto room = [&] { return facts.size() < series_target; };

    // Grow a coverage pair into a four-day fixed-cadence series: the lead
    // pair of codes repeats every day, and the rarer third code returns on
    // the later days so no code of the group hangs off a single report.
    auto extend_series = [&](const Recur& g) {
        RelationId c2 = sibling(g.c, 1), c3 = sibling(g.c, 2);
        for (std::uint32_t j = 1; j <= 3 && room(); ++j) {
            std::uint64_t t = std::uint64_t(g.t0) + std::uint64_t(j) * g.delta;
            if (t >= T) break;
            emit(g.s, g.c, g.o, TimeId(t));
            emit(g.s, c2, g.o, TimeId(t));
            emit(g.s, c3, g.o, TimeId(t));
        }
    };
    for (std::size_t i = 0; i < cover.size() && room(); ++i) extend_series(cover[i]);

    // Wire pairs report daily under two companion codes.
    for (TimeId t = 0; t < T && room(); ++t) {
        for (std::uint32_t k = 0; k < n_wire && room(); ++k) {
            emit(EntityId(2 * k), wire_rel[k], EntityId(2 * k + 1), t);
            emit(EntityId(2 * k), sibling(wire_rel[k], 1), EntityId(2 * k + 1), t);
        }
    }

    // Each relation's seed fact becomes the head of the same series shape,
    // so no relation lives on isolated facts.
    for (RelationId r = 0; r < R && room(); ++r) {
        const Recur& sd = rel_seed[r];
        emit(sd.s, sibling(r, 1), sd.o, sd.t0);  // companions on the seed day
        emit(sd.s, sibling(r, 2), sd.o, sd.t0);
        extend_series(sd);
    }

    // Main mass: recurring dyad series. A pair is observed every delta days
    // for a Pareto-long stretch; each observation reports two (sometimes
    // three) companion codes from one endpoint's repertoire, occasionally
    // skips a day or drifts off cadence. Half the series also thread in a
    // second partner on scattered days, so the answer to "who, on this day?"
    // genuinely depends on the day.
    std::vector<std::vector<EntityId>> recent(E);
    std::uint64_t attempts = 0;
    const std::uint64_t max_attempts = 200ull * spec.facts;
    while (room()) {
        if (++attempts > max_attempts)
            throw std::runtime_error("generate_synthetic: fact budget unreachable");
        EntityId s = ent_pop.draw(rng);
        EntityId o = ent_pop.draw(rng);
        if (s == o) continue;
        auto bb = pair_block(s, o);
        if (!bb) continue;  // repertoires full and disjoint; try another pair
        RelationId a = pick_in_block(*bb);
        RelationId a2 = sibling(a, 1);
        EntityId par = 0;
        bool has_par = false;
        if (!recent[s].empty() && rng.uniform() < 0.5) {
            EntityId cand = recent[s][rng.below(recent[s].size())];
            if (cand != o && cand != s && adopt(s, cand, *bb)) {
                par = cand;
                has_par = true;
            }
        }

        double u = std::max(rng.uniform(), 1e-12);
        std::uint32_t n = std::uint32_t(std::min<double>(
            spec.series_cap, double(spec.series_min) * std::pow(u, -1.0 / spec.series_heavy_tail)));
        double cu = rng.uniform();
        std::uint32_t delta = cu < 0.5 ? 1 : cu < 0.8 ? 2 : 3;
        if (std::uint64_t(delta) * (n - 1) >= T) n = (T - 1) / delta + 1;
        std::uint32_t span = delta * (n - 1);
        TimeId t0 = TimeId(rng.below(T - span));

        for (std::uint32_t i = 0; i < n && room(); ++i) {
            if (rng.uniform() < spec.skip_prob) continue;  // a gap in the series
            std::int64_t t = std::int64_t(t0) + std::int64_t(i) * delta;
            if (rng.uniform() < spec.jitter_prob) {
                t += rng.below(2) == 0 ? -1 : 1;
                if (t < 0 || t >= std::int64_t(T)) t = std::int64_t(t0) + std::int64_t(i) * delta;
            }
            emit(s, a, o, TimeId(t));
            emit(s, a2, o, TimeId(t));
            if (rng.uniform() < spec.trio_prob) emit(s, sibling(a, 2), o, TimeId(t));
            if (has_par && rng.uniform() < spec.parallel_prob) {
                emit(s, a, par, TimeId(t));
                emit(s, a2, par, TimeId(t));
            }
        }
        if (recent[s].size() < 8) recent[s].push_back(o);
    }

    // Uniform noise one-offs up to the exact budget, still within the pair's
    // adoptable blocks so no repertoire ever exceeds its cap.
    while (facts.size() < spec.facts) {
        if (++attempts > max_attempts)
            throw std::runtime_error("generate_synthetic: fact budget unreachable");
        EntityId s = EntityId(rng.below(E));
        EntityId o = EntityId(rng.below(E));
        if (s == o) continue;
        auto bb = pair_block(s, o);
        if (!bb) continue;
        emit(s, pick_in_block(*bb), o, TimeId(rng.below(T)));
    }

    // Assemble the dataset with an 8:1:1 shuffled split.
    Dataset d;
    d.granularity = TimeGranularity::day;
    char buf[32];
    for (EntityId e = 0; e < E; ++e) {
        std::snprintf(buf, sizeof(buf), "e%05u", e);
        d.entities.add(buf);
    }
    for (RelationId r = 0; r < R; ++r) {
        std::snprintf(buf, sizeof(buf), "r%03u", r);
        d.relations.add(buf);
    }
    d.raw_relation_count = R;
    using namespace std::chrono;
    sys_days base = sys_days{year{2014} / month{1} / day{1}};
    d.time_keys.reserve(T);
    d.time_tokens.reserve(T);
    for (TimeId t = 0; t < T; ++t) {
        sys_days sd = base + days{t};
        year_month_day ymd{sd};
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                      unsigned(ymd.day()));
        d.time_keys.push_back(sd.time_since_epoch().count());
        d.time_tokens.push_back(buf);
    }

    std::vector<std::size_t> order(facts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng split_rng(derive_seed(spec.seed, "synthetic-split"));
    split_rng.shuffle(order);
    std::size_t n_valid = facts.size() / 10, n_test = facts.size() / 10;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Quadruple& q = facts[order[i]];
        if (i < n_valid)
            d.valid.push_back(q);
        else if (i < n_valid + n_test)
            d.test.push_back(q);
        else
            d.train.push_back(q);
    }
    return d;
}

// Writes token-level train/valid/test TSVs readable by the day-granularity
// dataset loader.
inline void write_raw_splits(const Dataset& d, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const char* name, const std::vector<Quadruple>& split) {
        std::ofstream out(dir / name);
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        for (const auto& q : split)
            out << d.entities.tokens[q.s] << '\t' << d.relations.tokens[q.r] << '\t'
                << d.entities.tokens[q.o] << '\t' << d.time_tokens[q.t] << '\n';
    };
    write("train.txt", d.train);
    write("valid.txt", d.valid);
    write("test.txt", d.test);
}

}  // namespace tkgaug
