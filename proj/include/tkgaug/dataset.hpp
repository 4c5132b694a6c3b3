#pragma once

// Dataset ingestion: raw TSV dialects -> dense integer ids, inverse-relation
// augmentation, seeded holdout splitting, and a canonical on-disk artifact
// layout that round-trips ids exactly.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "tkgaug/core.hpp"
#include "tkgaug/rng.hpp"

namespace tkgaug {

enum class TimeGranularity { day, year, index };

inline std::string to_string(TimeGranularity g) {
    switch (g) {
        case TimeGranularity::day: return "day";
        case TimeGranularity::year: return "year";
        case TimeGranularity::index: return "index";
    }
    throw std::logic_error("unknown granularity");
}

inline TimeGranularity granularity_from_string(const std::string& s) {
    if (s == "day") return TimeGranularity::day;
    if (s == "year") return TimeGranularity::year;
    if (s == "index") return TimeGranularity::index;
    throw std::runtime_error("unknown time granularity: " + s);
}

enum class DatasetFormat { icews_tsv, yago_tsv, wikidata_tsv, generic_tsv };

inline DatasetFormat format_from_string(const std::string& s) {
    if (s == "icews-tsv") return DatasetFormat::icews_tsv;
    if (s == "yago-tsv") return DatasetFormat::yago_tsv;
    if (s == "wikidata-tsv") return DatasetFormat::wikidata_tsv;
    if (s == "generic-tsv") return DatasetFormat::generic_tsv;
    throw std::runtime_error("unknown dataset format: " + s);
}

// Append-only token <-> dense id map; ids are assigned in first-seen order.
struct Vocab {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, std::uint32_t> ids;

    std::uint32_t add(const std::string& token) {
        auto it = ids.find(token);
        if (it != ids.end()) return it->second;
        std::uint32_t id = static_cast<std::uint32_t>(tokens.size());
        tokens.push_back(token);
        ids.emplace(token, id);
        return id;
    }

    std::optional<std::uint32_t> find(const std::string& token) const {
        auto it = ids.find(token);
        if (it == ids.end()) return std::nullopt;
        return it->second;
    }

    std::uint32_t size() const { return static_cast<std::uint32_t>(tokens.size()); }
};

struct Dataset {
    Vocab entities;
    Vocab relations;
    std::vector<std::string> time_tokens;  // indexed by TimeId
    std::vector<std::int64_t> time_keys;   // ascending raw values, same index
    TimeGranularity granularity = TimeGranularity::index;
    bool inverse_added = false;
    std::uint32_t raw_relation_count = 0;  // relation count before inverses

    std::vector<Quadruple> train;
    std::vector<Quadruple> valid;
    std::vector<Quadruple> test;

    std::uint32_t num_entities() const { return entities.size(); }
    std::uint32_t num_relations() const { return relations.size(); }
    std::uint32_t num_timestamps() const { return static_cast<std::uint32_t>(time_tokens.size()); }
    std::size_t num_facts() const { return train.size() + valid.size() + test.size(); }

    std::vector<Quadruple> all_facts() const {
        std::vector<Quadruple> out;
        out.reserve(num_facts());
        out.insert(out.end(), train.begin(), train.end());
        out.insert(out.end(), valid.begin(), valid.end());
        out.insert(out.end(), test.begin(), test.end());
        return out;
    }
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
        out.back().pop_back();
    return out;
}

// Days since 1970-01-01 for a proleptic-Gregorian civil date.
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw std::runtime_error("invalid calendar date");
    return sys_days{ymd}.time_since_epoch().count();
}

inline std::int64_t parse_date_key(const std::string& tok) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(tok.c_str(), "%d-%u-%u", &y, &m, &d) != 3)
        throw std::runtime_error("expected YYYY-MM-DD date, got '" + tok + "'");
    return days_from_civil(y, m, d);
}

// Leading signed year of a date token; YAGO-style wildcard digits ("1980-##-##")
// resolve to the leading year, a fully wild year has no digits and fails.
inline std::optional<std::int64_t> try_parse_year(const std::string& tok) {
    const char* p = tok.c_str();
    char* end = nullptr;
    long v = std::strtol(p, &end, 10);
    if (end == p) return std::nullopt;
    return static_cast<std::int64_t>(v);
}

struct RawFact {
    std::string s, r, o;
    std::int64_t time_key = 0;
    std::string time_token;
};

inline RawFact parse_row(const std::vector<std::string>& cols, DatasetFormat format,
                         const std::string& file, std::size_t line_no) {
    auto fail = [&](const std::string& msg) -> RawFact {
        throw ParseError(file, line_no, msg);
    };
    RawFact f;
    switch (format) {
        case DatasetFormat::icews_tsv:
        case DatasetFormat::generic_tsv: {
            if (cols.size() != 4)
                return fail("expected 4 tab-separated columns, got " + std::to_string(cols.size()));
            f.s = cols[0];
            f.r = cols[1];
            f.o = cols[2];
            if (format == DatasetFormat::icews_tsv) {
                try {
                    f.time_key = parse_date_key(cols[3]);
                } catch (const std::exception& e) {
                    return fail(e.what());
                }
                f.time_token = cols[3];
            } else {
                std::int64_t v = 0;
                const char* first = cols[3].c_str();
                const char* last = first + cols[3].size();
                auto res = std::from_chars(first, last, v);
                if (res.ec != std::errc{} || res.ptr != last)
                    return fail("expected integer timestamp, got '" + cols[3] + "'");
                f.time_key = v;
                f.time_token = std::to_string(v);
            }
            break;
        }
        case DatasetFormat::yago_tsv:
        case DatasetFormat::wikidata_tsv: {
            if (cols.size() != 5)
                return fail("expected 5 tab-separated columns, got " + std::to_string(cols.size()));
            f.s = cols[0];
            f.r = cols[1];
            f.o = cols[2];
            auto since = try_parse_year(cols[3]);
            auto until = try_parse_year(cols[4]);
            if (since)
                f.time_key = *since;
            else if (until)
                f.time_key = *until;
            else
                return fail("no parseable year in '" + cols[3] + "' or '" + cols[4] + "'");
            f.time_token = std::to_string(f.time_key);
            break;
        }
    }
    return f;
}

inline void parse_file(const std::filesystem::path& path, DatasetFormat format,
                       std::vector<RawFact>& out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        out.push_back(parse_row(split_tabs(line), format, path.filename().string(), line_no));
    }
}

inline std::filesystem::path find_split_file(const std::filesystem::path& dir,
                                             const std::string& stem) {
    for (const char* ext : {".txt", ".tsv", ""}) {
        auto p = dir / (stem + ext);
        if (std::filesystem::is_regular_file(p)) return p;
    }
    throw std::runtime_error("missing split file '" + stem + "[.txt|.tsv]' in " + dir.string());
}

}  // namespace detail

// Loads a dataset. `path` is either a directory holding train/valid/test files
// or a single file that gets an 8:1:1 random split driven by `split_seed`.
inline Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                            std::uint64_t split_seed = 0) {
    using detail::RawFact;
    std::vector<RawFact> raw_train, raw_valid, raw_test;
    if (std::filesystem::is_directory(path)) {
        detail::parse_file(detail::find_split_file(path, "train"), format, raw_train);
        detail::parse_file(detail::find_split_file(path, "valid"), format, raw_valid);
        detail::parse_file(detail::find_split_file(path, "test"), format, raw_test);
    } else if (std::filesystem::is_regular_file(path)) {
        std::vector<RawFact> all;
        detail::parse_file(path, format, all);
        if (all.empty()) throw std::runtime_error("empty dataset: " + path.string());
        std::vector<std::size_t> order(all.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(derive_seed(split_seed, "split"));
        rng.shuffle(order);
        std::size_t n = all.size();
        std::size_t n_valid = n / 10, n_test = n / 10;
        std::vector<int> bucket(n, 0);  // 0 train, 1 valid, 2 test
        for (std::size_t i = 0; i < n_valid; ++i) bucket[order[i]] = 1;
        for (std::size_t i = n_valid; i < n_valid + n_test; ++i) bucket[order[i]] = 2;
        for (std::size_t i = 0; i < n; ++i) {
            (bucket[i] == 0 ? raw_train : bucket[i] == 1 ? raw_valid : raw_test)
                .push_back(std::move(all[i]));
        }
    } else {
        throw std::runtime_error("dataset path does not exist: " + path.string());
    }

    if (raw_train.size() + raw_valid.size() + raw_test.size() == 0)
        throw std::runtime_error("empty dataset: " + path.string());

    Dataset d;
    d.granularity = format == DatasetFormat::icews_tsv  ? TimeGranularity::day
                    : format == DatasetFormat::generic_tsv ? TimeGranularity::index
                                                           : TimeGranularity::year;

    // Timestamp ids are the chronological ranks of the distinct raw values.
    std::unordered_map<std::int64_t, std::string> key_token;
    for (const auto* split : {&raw_train, &raw_valid, &raw_test})
        for (const auto& f : *split) key_token.emplace(f.time_key, f.time_token);
    std::vector<std::int64_t> keys;
    keys.reserve(key_token.size());
    for (const auto& [k, _] : key_token) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    std::unordered_map<std::int64_t, TimeId> key_rank;
    d.time_keys = keys;
    d.time_tokens.reserve(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        key_rank.emplace(keys[i], static_cast<TimeId>(i));
        d.time_tokens.push_back(key_token.at(keys[i]));
    }

    auto convert = [&](std::vector<RawFact>& src, std::vector<Quadruple>& dst) {
        dst.reserve(src.size());
        for (const auto& f : src) {
            Quadruple q;
            q.s = d.entities.add(f.s);
            q.r = d.relations.add(f.r);
            q.o = d.entities.add(f.o);
            q.t = key_rank.at(f.time_key);
            dst.push_back(q);
        }
    };
    convert(raw_train, d.train);
    convert(raw_valid, d.valid);
    convert(raw_test, d.test);
    d.raw_relation_count = d.relations.size();
    return d;
}

// Adds the inverse twin (o, r + |R_raw|, s, t) of every fact; doubles the
// relation vocabulary with "_inverse"-suffixed tokens. Appends inverses after
// the originals within each split.
inline void add_inverse_relations(Dataset& d) {
    if (d.inverse_added)
        throw std::runtime_error("inverse relations already added to this dataset");
    std::uint32_t raw = d.raw_relation_count;
    for (std::uint32_t r = 0; r < raw; ++r) {
        std::uint32_t id = d.relations.add(d.relations.tokens[r] + "_inverse");
        if (id != raw + r)
            throw std::runtime_error("inverse token collides with existing relation: " +
                                     d.relations.tokens[r] + "_inverse");
    }
    for (auto* split : {&d.train, &d.valid, &d.test}) {
        std::size_t n = split->size();
        split->reserve(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            const Quadruple& q = (*split)[i];
            split->push_back(Quadruple{q.o, q.r + raw, q.s, q.t});
        }
    }
    d.inverse_added = true;
}

struct HoldoutSplit {
    Dataset retained;
    std::vector<Quadruple> removed;
};

// Removes `fraction` of the train facts uniformly at random (seeded); retained
// facts keep their relative order. Vocabularies and eval splits are untouched.
inline HoldoutSplit split_holdout(const Dataset& d, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("split_holdout: fraction must lie in (0, 1)");
    std::size_t n = d.train.size();
    std::size_t n_removed = static_cast<std::size_t>(std::floor(fraction * double(n)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, "holdout"));
    rng.shuffle(order);
    std::vector<char> removed_flag(n, 0);
    for (std::size_t i = 0; i < n_removed; ++i) removed_flag[order[i]] = 1;

    HoldoutSplit out;
    out.retained = d;
    out.retained.train.clear();
    out.retained.train.reserve(n - n_removed);
    out.removed.reserve(n_removed);
    for (std::size_t i = 0; i < n; ++i)
        (removed_flag[i] ? out.removed : out.retained.train).push_back(d.train[i]);
    return out;
}

// --- canonical artifact layout -------------------------------------------
//
//   <dir>/train.tsv, valid.tsv, test.tsv   integer-id "s r o t" rows
//   <dir>/entities.tsv, relations.tsv      "token <TAB> id"
//   <dir>/times.tsv                        "token <TAB> id <TAB> raw_key"
//   <dir>/meta.json                        granularity, counters, flags

namespace detail {

inline void write_id_split(const std::filesystem::path& p, const std::vector<Quadruple>& facts) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    for (const auto& q : facts)
        out << q.s << '\t' << q.r << '\t' << q.o << '\t' << q.t << '\n';
}

inline std::vector<Quadruple> read_id_split(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::vector<Quadruple> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        if (cols.size() != 4)
            throw ParseError(p.filename().string(), line_no, "expected 4 id columns");
        Quadruple q;
        try {
            q.s = static_cast<std::uint32_t>(std::stoul(cols[0]));
            q.r = static_cast<std::uint32_t>(std::stoul(cols[1]));
            q.o = static_cast<std::uint32_t>(std::stoul(cols[2]));
            q.t = static_cast<std::uint32_t>(std::stoul(cols[3]));
        } catch (const std::exception&) {
            throw ParseError(p.filename().string(), line_no, "malformed id row");
        }
        out.push_back(q);
    }
    return out;
}

}  // namespace detail

inline void write_canonical(const Dataset& d, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    detail::write_id_split(dir / "train.tsv", d.train);
    detail::write_id_split(dir / "valid.tsv", d.valid);
    detail::write_id_split(dir / "test.tsv", d.test);
    auto write_vocab = [&](const std::filesystem::path& p, const std::vector<std::string>& tokens) {
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        for (std::size_t i = 0; i < tokens.size(); ++i) out << tokens[i] << '\t' << i << '\n';
    };
    write_vocab(dir / "entities.tsv", d.entities.tokens);
    write_vocab(dir / "relations.tsv", d.relations.tokens);
    {
        std::ofstream out(dir / "times.tsv");
        if (!out) throw std::runtime_error("cannot write " + (dir / "times.tsv").string());
        for (std::size_t i = 0; i < d.time_tokens.size(); ++i)
            out << d.time_tokens[i] << '\t' << i << '\t' << d.time_keys[i] << '\n';
    }
    nlohmann::json meta = {
        {"granularity", to_string(d.granularity)},
        {"inverse_added", d.inverse_added},
        {"raw_relation_count", d.raw_relation_count},
        {"num_entities", d.num_entities()},
        {"num_relations", d.num_relations()},
        {"num_timestamps", d.num_timestamps()},
        {"num_facts", d.num_facts()},
    };
    std::ofstream meta_out(dir / "meta.json");
    if (!meta_out) throw std::runtime_error("cannot write " + (dir / "meta.json").string());
    meta_out << meta.dump(2) << '\n';
}

inline Dataset load_canonical(const std::filesystem::path& dir) {
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in)
        throw std::runtime_error("not a canonical dataset directory (missing meta.json): " +
                                 dir.string());
    nlohmann::json meta = nlohmann::json::parse(meta_in);
    Dataset d;
    d.granularity = granularity_from_string(meta.at("granularity").get<std::string>());
    d.inverse_added = meta.at("inverse_added").get<bool>();
    d.raw_relation_count = meta.at("raw_relation_count").get<std::uint32_t>();

    auto read_vocab = [&](const std::filesystem::path& p, Vocab& v) {
        std::ifstream in(p);
        if (!in) throw std::runtime_error("cannot open " + p.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto cols = detail::split_tabs(line);
            v.add(cols.at(0));
        }
    };
    read_vocab(dir / "entities.tsv", d.entities);
    read_vocab(dir / "relations.tsv", d.relations);
    {
        std::ifstream in(dir / "times.tsv");
        if (!in) throw std::runtime_error("cannot open " + (dir / "times.tsv").string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto cols = detail::split_tabs(line);
            if (cols.size() != 3)
                throw std::runtime_error("malformed times.tsv row in " + dir.string());
            d.time_tokens.push_back(cols[0]);
            d.time_keys.push_back(std::stoll(cols[2]));
        }
    }
    d.train = detail::read_id_split(dir / "train.tsv");
    d.valid = detail::read_id_split(dir / "valid.tsv");
    d.test = detail::read_id_split(dir / "test.tsv");
    return d;
}

// Token-level single-file export in the generic-tsv dialect (all splits
// concatenated train, valid, test). Reloading yields the same fact multiset
// modulo re-tokenization.
inline void write_generic_tsv(const Dataset& d, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    for (const auto* split : {&d.train, &d.valid, &d.test})
        for (const auto& q : *split)
            out << d.entities.tokens[q.s] << '\t' << d.relations.tokens[q.r] << '\t'
                << d.entities.tokens[q.o] << '\t' << d.time_keys[q.t] << '\n';
}

// Entities ordered by descending train-fact count (either role), ties by
// ascending id; returns the first n.
inline std::vector<EntityId> top_degree_entities(const Dataset& d, std::uint32_t n) {
    std::vector<std::uint64_t> degree(d.num_entities(), 0);
    for (const auto& q : d.train) {
        degree[q.s] += 1;
        if (q.o != q.s) degree[q.o] += 1;
    }
    std::vector<EntityId> ids(d.num_entities());
    for (std::uint32_t i = 0; i < ids.size(); ++i) ids[i] = i;
    std::stable_sort(ids.begin(), ids.end(), [&](EntityId a, EntityId b) {
        if (degree[a] != degree[b]) return degree[a] > degree[b];
        return a < b;
    });
    if (ids.size() > n) ids.resize(n);
    return ids;
}

// Keeps only facts whose both endpoints lie in `keep`; rebuilds dense vocabs
// and timestamp ranks from the surviving facts.
inline Dataset restrict_to_entities(const Dataset& d, const std::vector<EntityId>& keep) {
    std::unordered_set<EntityId> keep_set(keep.begin(), keep.end());
    Dataset out;
    out.granularity = d.granularity;
    out.inverse_added = d.inverse_added;

    std::vector<std::int64_t> keys;
    auto collect = [&](const std::vector<Quadruple>& split) {
        for (const auto& q : split)
            if (keep_set.count(q.s) && keep_set.count(q.o)) keys.push_back(d.time_keys[q.t]);
    };
    collect(d.train);
    collect(d.valid);
    collect(d.test);
    if (keys.empty()) throw std::runtime_error("entity restriction removed every fact");
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    std::unordered_map<std::int64_t, TimeId> key_rank;
    for (std::size_t i = 0; i < keys.size(); ++i) key_rank.emplace(keys[i], TimeId(i));
    out.time_keys = keys;

    std::unordered_map<RelationId, RelationId> rel_map;
    auto convert = [&](const std::vector<Quadruple>& src, std::vector<Quadruple>& dst) {
        for (const auto& q : src) {
            if (!keep_set.count(q.s) || !keep_set.count(q.o)) continue;
            Quadruple nq;
            nq.s = out.entities.add(d.entities.tokens[q.s]);
            nq.o = out.entities.add(d.entities.tokens[q.o]);
            auto it = rel_map.find(q.r);
            if (it == rel_map.end())
                it = rel_map.emplace(q.r, out.relations.add(d.relations.tokens[q.r])).first;
            nq.r = it->second;
            nq.t = key_rank.at(d.time_keys[q.t]);
            dst.push_back(nq);
        }
    };
    convert(d.train, out.train);
    convert(d.valid, out.valid);
    convert(d.test, out.test);
    out.time_tokens.reserve(keys.size());
    std::unordered_map<std::int64_t, std::string> key_token;
    for (std::size_t i = 0; i < d.time_keys.size(); ++i)
        key_token.emplace(d.time_keys[i], d.time_tokens[i]);
    for (auto k : keys) out.time_tokens.push_back(key_token.at(k));
    out.raw_relation_count = out.relations.size();
    return out;
}

}  // namespace tkgaug
