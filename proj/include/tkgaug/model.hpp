#pragma once

// Reference completion scorer: real-valued 4-way tensor factorization with
// one embedding table each for entities, relations, and timestamps.
// p(s, r, o, t) = sum_k E[s]_k * R[r]_k * E[o]_k * T[t]_k. Training uses
// sparse per-row gradients applied with Adagrad.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unordered_map>
#include <vector>

#include "tkgaug/core.hpp"
#include "tkgaug/rng.hpp"

namespace tkgaug {

struct ModelConfig {
    std::uint32_t dim = 200;
    double learning_rate = 0.001;
    double reg_weight = 0.001;  // L2 weight on rows touched by a batch
    std::uint64_t seed = 0;
};

struct ModelSizes {
    std::uint32_t entities = 0;
    std::uint32_t relations = 0;
    std::uint32_t timestamps = 0;

    friend bool operator==(const ModelSizes&, const ModelSizes&) = default;
};

struct ModelState {
    std::uint32_t dim = 0;
    ModelSizes sizes;
    std::vector<double> entity_emb, relation_emb, time_emb;
    std::vector<double> entity_acc, relation_acc, time_acc;  // Adagrad sums of g^2

    double* entity_row(EntityId e) { return entity_emb.data() + std::size_t(e) * dim; }
    double* relation_row(RelationId r) { return relation_emb.data() + std::size_t(r) * dim; }
    double* time_row(TimeId t) { return time_emb.data() + std::size_t(t) * dim; }
    const double* entity_row(EntityId e) const { return entity_emb.data() + std::size_t(e) * dim; }
    const double* relation_row(RelationId r) const {
        return relation_emb.data() + std::size_t(r) * dim;
    }
    const double* time_row(TimeId t) const { return time_emb.data() + std::size_t(t) * dim; }

    void check_ids(const Quadruple& q) const {
        if (q.s >= sizes.entities || q.o >= sizes.entities)
            throw std::out_of_range("score: entity id out of range");
        if (q.r >= sizes.relations) throw std::out_of_range("score: relation id out of range");
        if (q.t >= sizes.timestamps) throw std::out_of_range("score: timestamp id out of range");
    }

    friend bool operator==(const ModelState&, const ModelState&) = default;
};

inline ModelState init_model(const ModelConfig& cfg, const ModelSizes& sizes) {
    if (cfg.dim < 1) throw std::invalid_argument("init_model: dim must be positive");
    if (sizes.entities == 0 || sizes.relations == 0 || sizes.timestamps == 0)
        throw std::invalid_argument("init_model: all table sizes must be positive");
    ModelState st;
    st.dim = cfg.dim;
    st.sizes = sizes;
    double bound = 0.5 / std::sqrt(double(cfg.dim));
    auto fill = [&](std::vector<double>& table, std::size_t rows, const char* label) {
        table.resize(rows * cfg.dim);
        Rng rng(derive_seed(cfg.seed, label));
        for (auto& v : table) v = rng.uniform(-bound, bound);
    };
    fill(st.entity_emb, sizes.entities, "init-entity");
    fill(st.relation_emb, sizes.relations, "init-relation");
    fill(st.time_emb, sizes.timestamps, "init-time");
    st.entity_acc.assign(st.entity_emb.size(), 0.0);
    st.relation_acc.assign(st.relation_emb.size(), 0.0);
    st.time_acc.assign(st.time_emb.size(), 0.0);
    return st;
}

inline double score(const ModelState& st, const Quadruple& q) {
    st.check_ids(q);
    const double* es = st.entity_row(q.s);
    const double* rr = st.relation_row(q.r);
    const double* eo = st.entity_row(q.o);
    const double* tt = st.time_row(q.t);
    double sum = 0.0;
    for (std::uint32_t k = 0; k < st.dim; ++k) sum += es[k] * rr[k] * eo[k] * tt[k];
    return sum;
}

// Batch object scoring for a fixed (s, r, t). The subject-relation product is
// shared; the remaining factors multiply in the same order as score() so both
// paths round identically and ranking ties agree between them.
inline std::vector<double> score_objects(const ModelState& st, EntityId s, RelationId r, TimeId t,
                                         const std::vector<EntityId>& objects) {
    st.check_ids(Quadruple{s, r, s, t});
    std::vector<double> weight(st.dim);
    const double* tt = st.time_row(t);
    {
        const double* es = st.entity_row(s);
        const double* rr = st.relation_row(r);
        for (std::uint32_t k = 0; k < st.dim; ++k) weight[k] = es[k] * rr[k];
    }
    std::vector<double> out;
    out.reserve(objects.size());
    for (EntityId o : objects) {
        if (o >= st.sizes.entities) throw std::out_of_range("score_objects: entity id out of range");
        const double* eo = st.entity_row(o);
        double sum = 0.0;
        for (std::uint32_t k = 0; k < st.dim; ++k) sum += weight[k] * eo[k] * tt[k];
        out.push_back(sum);
    }
    return out;
}

enum class EmbeddingTable { entity, relation, time };

// Sparse row-gradient accumulator; rows absent from the maps are untouched.
struct GradientBuffer {
    std::uint32_t dim = 0;
    std::unordered_map<std::uint32_t, std::vector<double>> entity, relation, time;

    explicit GradientBuffer(std::uint32_t d = 0) : dim(d) {}

    std::vector<double>& row(EmbeddingTable table, std::uint32_t id) {
        auto& m = table == EmbeddingTable::entity     ? entity
                  : table == EmbeddingTable::relation ? relation
                                                      : time;
        auto [it, inserted] = m.try_emplace(id);
        if (inserted) it->second.assign(dim, 0.0);
        return it->second;
    }

    bool empty() const { return entity.empty() && relation.empty() && time.empty(); }
};

// Adagrad: accumulator += g^2; param -= lr * g / (sqrt(accumulator) + 1e-10).
// Validates all gradients finite before touching any parameter.
inline void apply_gradients(ModelState& st, const GradientBuffer& grads, const ModelConfig& cfg) {
    if (grads.dim != st.dim)
        throw std::invalid_argument("apply_gradients: gradient width does not match model");
    constexpr double eps = 1e-10;
    auto validate = [](const std::unordered_map<std::uint32_t, std::vector<double>>& m) {
        for (const auto& [id, g] : m)
            for (double v : g)
                if (!std::isfinite(v))
                    throw std::runtime_error("apply_gradients: non-finite gradient");
    };
    validate(grads.entity);
    validate(grads.relation);
    validate(grads.time);

    auto apply = [&](const std::unordered_map<std::uint32_t, std::vector<double>>& m,
                     std::vector<double>& emb, std::vector<double>& acc, std::size_t rows,
                     const char* label) {
        for (const auto& [id, g] : m) {
            if (id >= rows)
                throw std::out_of_range(std::string("apply_gradients: ") + label +
                                        " row out of range");
            double* p = emb.data() + std::size_t(id) * st.dim;
            double* a = acc.data() + std::size_t(id) * st.dim;
            for (std::uint32_t k = 0; k < st.dim; ++k) {
                a[k] += g[k] * g[k];
                p[k] -= cfg.learning_rate * g[k] / (std::sqrt(a[k]) + eps);
            }
        }
    };
    apply(grads.entity, st.entity_emb, st.entity_acc, st.sizes.entities, "entity");
    apply(grads.relation, st.relation_emb, st.relation_acc, st.sizes.relations, "relation");
    apply(grads.time, st.time_emb, st.time_acc, st.sizes.timestamps, "time");
}

// --- checkpoint format ----------------------------------------------------
// Binary, little-endian: magic "TKGA", u32 version, u32 dim, u32 entities,
// u32 relations, u32 timestamps, then the six f64 arrays (three embedding
// tables followed by their Adagrad accumulators) in row-major order.

inline void save_checkpoint(const ModelState& st, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    const char magic[4] = {'T', 'K', 'G', 'A'};
    out.write(magic, 4);
    auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(1);  // version
    put_u32(st.dim);
    put_u32(st.sizes.entities);
    put_u32(st.sizes.relations);
    put_u32(st.sizes.timestamps);
    auto put_array = [&](const std::vector<double>& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    put_array(st.entity_emb);
    put_array(st.relation_emb);
    put_array(st.time_emb);
    put_array(st.entity_acc);
    put_array(st.relation_acc);
    put_array(st.time_acc);
    if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

inline ModelState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TKGA", 4) != 0)
        throw std::runtime_error("not a checkpoint file: " + path.string());
    auto get_u32 = [&]() {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    std::uint32_t version = get_u32();
    if (version != 1)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    ModelState st;
    st.dim = get_u32();
    st.sizes.entities = get_u32();
    st.sizes.relations = get_u32();
    st.sizes.timestamps = get_u32();
    auto get_array = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
    };
    std::size_t d = st.dim;
    get_array(st.entity_emb, st.sizes.entities * d);
    get_array(st.relation_emb, st.sizes.relations * d);
    get_array(st.time_emb, st.sizes.timestamps * d);
    get_array(st.entity_acc, st.sizes.entities * d);
    get_array(st.relation_acc, st.sizes.relations * d);
    get_array(st.time_acc, st.sizes.timestamps * d);
    if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
    return st;
}

}  // namespace tkgaug
