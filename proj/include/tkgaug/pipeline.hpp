#pragma once

// Batch pipeline stages behind the command-line front end. Each stage reads
// its declared inputs from the output directory, writes its own artifacts
// with stable names, and is deterministic given the configuration (the seed
// is part of it).
//
//   ingest    raw files -> dataset/ (canonical ids, inverse-augmented)
//   augment   dataset/ -> candidates.tsv, scored.tsv, augment_summary.json
//   train     dataset/ [+ scored.tsv] -> model.bin, train_log.jsonl
//   eval      dataset/ + model.bin -> eval_report.json, rank_records.tsv
//   recovery  dataset/ -> recovery.json

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tkgaug/core.hpp"
#include "tkgaug/dataset.hpp"
#include "tkgaug/eval.hpp"
#include "tkgaug/filter.hpp"
#include "tkgaug/index.hpp"
#include "tkgaug/model.hpp"
#include "tkgaug/rng.hpp"
#include "tkgaug/scoring.hpp"
#include "tkgaug/trainer.hpp"
#include "tkgaug/triangles.hpp"

namespace tkgaug {

struct PipelineConfig {
    std::filesystem::path dataset_path;
    DatasetFormat dataset_format = DatasetFormat::generic_tsv;
    std::uint64_t split_seed = 0;  // for single-file random splits

    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0 -> all available cores

    FilterParams filter;
    std::uint32_t structure_window = 3;
    PerturbParams perturb;
    std::uint64_t combo_budget = 200000000ull;

    ModelConfig model;
    TrainSchedule schedule;
    bool no_augment = false;

    bool eval_filter_known = true;
    std::uint32_t profile_top_n = 10;

    double recovery_fraction = 0.2;
    bool recovery_sweep = false;
    bool recovery_sparsity_gate = false;
};

// Reads a nested JSON config; absent keys keep their defaults.
inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path.string() + ": " + e.what());
    }
    PipelineConfig c;
    auto get = [](const nlohmann::json& obj, const char* key, auto& slot) {
        if (obj.contains(key)) slot = obj.at(key).get<std::decay_t<decltype(slot)>>();
    };

    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        std::string path_str, format_str = "generic-tsv";
        get(d, "path", path_str);
        get(d, "format", format_str);
        get(d, "split_seed", c.split_seed);
        c.dataset_path = path_str;
        c.dataset_format = format_from_string(format_str);
    }
    {
        std::string out_str;
        get(j, "output_dir", out_str);
        if (!out_str.empty()) c.output_dir = out_str;
        get(j, "seed", c.seed);
        get(j, "threads", c.threads);
    }
    if (j.contains("filter")) {
        const auto& f = j.at("filter");
        get(f, "top_m", c.filter.top_m);
        get(f, "relation_window", c.filter.relation_window);
        get(f, "time_window", c.filter.time_window);
        get(f, "sparsity_threshold", c.filter.sparsity_threshold);
        get(f, "sparsity_gate", c.filter.sparsity_gate);
    }
    if (j.contains("scoring")) {
        const auto& s = j.at("scoring");
        get(s, "structure_window", c.structure_window);
        get(s, "rounds", c.perturb.rounds);
        get(s, "drop_prob", c.perturb.drop_prob);
        get(s, "duplicate_prob", c.perturb.duplicate_prob);
        get(s, "time_noise", c.perturb.time_noise);
        get(s, "perturb_reference", c.perturb.perturb_reference);
        get(s, "combo_budget", c.combo_budget);
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        get(m, "dim", c.model.dim);
        get(m, "learning_rate", c.model.learning_rate);
        get(m, "reg_weight", c.model.reg_weight);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        get(t, "total_epochs", c.schedule.total_epochs);
        get(t, "pretrain_epochs", c.schedule.pretrain_epochs);
        get(t, "batches_per_epoch", c.schedule.batches_per_epoch);
        get(t, "negatives_per_fact", c.schedule.negatives_per_fact);
        get(t, "eval_every", c.schedule.eval_every);
        get(t, "patience_rounds", c.schedule.patience_rounds);
        get(t, "literal_negative_term", c.schedule.literal_negative_term);
        get(t, "no_augment", c.no_augment);
    }
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        get(e, "filter_known", c.eval_filter_known);
        get(e, "profile_top_n", c.profile_top_n);
    }
    if (j.contains("recovery")) {
        const auto& r = j.at("recovery");
        get(r, "fraction", c.recovery_fraction);
        get(r, "sweep", c.recovery_sweep);
        get(r, "sparsity_gate", c.recovery_sparsity_gate);
    }
    return c;
}

namespace detail {

inline std::filesystem::path dataset_dir(const PipelineConfig& c) {
    return c.output_dir / "dataset";
}

inline Dataset load_stage_dataset(const PipelineConfig& c, const std::string& needed_by) {
    auto dir = dataset_dir(c);
    if (!std::filesystem::exists(dir / "meta.json"))
        throw std::runtime_error(needed_by + ": missing ingest output at " + dir.string() +
                                 " (run ingest first)");
    return load_canonical(dir);
}

inline void write_candidates_tsv(const std::filesystem::path& path,
                                 const std::vector<CandidateNegative>& cands) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "s\tr\to\tt\tprovenance\tsource_s\tsource_r\tsource_o\tsource_t\n";
    for (const auto& c : cands) {
        out << c.candidate.s << '\t' << c.candidate.r << '\t' << c.candidate.o << '\t'
            << c.candidate.t << '\t' << to_string(c.origin) << '\t' << c.source.s << '\t'
            << c.source.r << '\t' << c.source.o << '\t' << c.source.t << '\n';
    }
}

inline void write_scored_tsv(const std::filesystem::path& path,
                             const std::vector<ScoredCandidate>& scored) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "s\tr\to\tt\tprovenance\tmean_score\tsource_score\tclassification\tsmooth_label\n";
    for (const auto& sc : scored) {
        out << sc.candidate.candidate.s << '\t' << sc.candidate.candidate.r << '\t'
            << sc.candidate.candidate.o << '\t' << sc.candidate.candidate.t << '\t'
            << to_string(sc.candidate.origin) << '\t' << format_double(sc.mean_perturbed) << '\t'
            << format_double(sc.reference_score) << '\t'
            << (sc.false_negative ? "false-negative" : "hard-negative") << '\t'
            << (sc.false_negative ? format_double(sc.raw_label) : std::string()) << '\n';
    }
}

inline std::vector<ScoredCandidate> read_scored_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<ScoredCandidate> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("s\t", 0) == 0) continue;  // header
        auto cols = split_tabs(line);
        if (cols.size() != 9)
            throw ParseError(path.filename().string(), line_no, "expected 9 columns");
        ScoredCandidate sc;
        try {
            sc.candidate.candidate = Quadruple{std::uint32_t(std::stoul(cols[0])),
                                               std::uint32_t(std::stoul(cols[1])),
                                               std::uint32_t(std::stoul(cols[2])),
                                               std::uint32_t(std::stoul(cols[3]))};
            sc.mean_perturbed = std::stod(cols[5]);
            sc.reference_score = std::stod(cols[6]);
            sc.false_negative = cols[7] == "false-negative";
            sc.raw_label = sc.false_negative ? std::stod(cols[8]) : 0.0;
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError(path.filename().string(), line_no, "malformed scored row");
        }
        out.push_back(sc);
    }
    return out;
}

inline nlohmann::json report_to_json(const EvalReport& rep) {
    nlohmann::json j;
    j["mrr"] = rep.mrr;
    for (const auto& [k, v] : rep.hits) j["hits"]["@" + std::to_string(k)] = v;
    j["per_timestamp_std"] = rep.per_timestamp_std;
    nlohmann::json per_t = nlohmann::json::object();
    for (const auto& [t, slot] : rep.per_timestamp)
        per_t[std::to_string(t)] = {{"mrr", slot.first}, {"count", slot.second}};
    j["per_timestamp"] = per_t;
    j["degree_strata"] = rep.degree_strata;
    return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body;
}

}  // namespace detail

// Loads the raw dataset, applies inverse-relation doubling, and writes the
// canonical artifact directory. Returns a Table-1-style summary line.
inline std::string run_ingest(const PipelineConfig& c) {
    if (c.dataset_path.empty()) throw std::runtime_error("ingest: no dataset path configured");
    Dataset d = load_dataset(c.dataset_path, c.dataset_format, c.split_seed);
    std::string summary =
        "entities=" + std::to_string(d.num_entities()) +
        " relations=" + std::to_string(d.raw_relation_count) +
        " timestamps=" + std::to_string(d.num_timestamps()) +
        " facts=" + std::to_string(d.num_facts()) +
        " (train=" + std::to_string(d.train.size()) + " valid=" + std::to_string(d.valid.size()) +
        " test=" + std::to_string(d.test.size()) + ")";
    add_inverse_relations(d);
    write_canonical(d, detail::dataset_dir(c));
    return summary;
}

struct AugmentOutcome {
    std::size_t candidates = 0;
    std::size_t from_relation = 0, from_entity = 0, from_time = 0;
    std::size_t false_negatives = 0, hard_negatives = 0;
};

inline AugmentOutcome run_augment(const PipelineConfig& c) {
    Dataset d = detail::load_stage_dataset(c, "augment");
    TkgIndex idx = build_indices(d, c.filter.relation_window);
    std::vector<CandidateNegative> cands = filter_all(idx, c.filter);

    AugmentOutcome outcome;
    outcome.candidates = cands.size();
    for (const auto& cn : cands) {
        if (cn.origin == FilterKind::relation)
            ++outcome.from_relation;
        else if (cn.origin == FilterKind::entity)
            ++outcome.from_entity;
        else
            ++outcome.from_time;
    }

    std::vector<IdTriple> keys;
    if (relation_combo_estimate(idx) > c.combo_budget)
        keys = collect_relation_keys(cands, idx, c.structure_window);
    TriangleScores tables =
        build_triangle_scores(idx, keys.empty() ? nullptr : &keys, c.combo_budget);

    std::vector<ScoredCandidate> scored = score_candidates(
        cands, idx, tables, c.structure_window, c.perturb, c.seed, c.threads);
    for (const auto& sc : scored)
        (sc.false_negative ? outcome.false_negatives : outcome.hard_negatives) += 1;

    std::filesystem::create_directories(c.output_dir);
    detail::write_candidates_tsv(c.output_dir / "candidates.tsv", cands);
    detail::write_scored_tsv(c.output_dir / "scored.tsv", scored);
    nlohmann::json j = {
        {"candidates", outcome.candidates},
        {"by_provenance",
         {{"relation", outcome.from_relation},
          {"entity", outcome.from_entity},
          {"time", outcome.from_time}}},
        {"false_negatives", outcome.false_negatives},
        {"hard_negatives", outcome.hard_negatives},
    };
    detail::write_text(c.output_dir / "augment_summary.json", j.dump(2) + "\n");
    return outcome;
}

struct TrainOutcome {
    double best_valid_mrr = 0.0;
    std::uint32_t best_epoch = 0;
    std::size_t positives = 0, negatives = 0;
};

inline TrainOutcome run_train(const PipelineConfig& c) {
    Dataset d = detail::load_stage_dataset(c, "train");
    TkgIndex idx = build_indices(d, c.filter.relation_window);

    TrainResult result;
    TrainOutcome outcome;
    if (c.no_augment) {
        result = run_baseline(d, idx, c.model, c.schedule, c.seed, c.threads);
    } else {
        auto scored_path = c.output_dir / "scored.tsv";
        if (!std::filesystem::exists(scored_path))
            throw std::runtime_error("train: missing " + scored_path.string() +
                                     " (run augment first, or pass --no-augment)");
        std::vector<ScoredCandidate> scored = detail::read_scored_tsv(scored_path);
        AugmentedSets aug = assemble_augmented_sets(scored, idx, c.filter);
        outcome.positives = aug.positives.size();
        outcome.negatives = aug.hard_negatives.size();
        result = run_two_stage(d, idx, aug, c.model, c.schedule, c.seed, c.threads);
    }

    save_checkpoint(result.model, c.output_dir / "model.bin");
    std::string log_body;
    for (const auto& entry : result.log) {
        nlohmann::json j = {{"epoch", entry.epoch}, {"stage", entry.stage},
                            {"loss", entry.loss}};
        if (entry.valid_mrr) j["valid_mrr"] = *entry.valid_mrr;
        log_body += j.dump() + "\n";
    }
    detail::write_text(c.output_dir / "train_log.jsonl", log_body);
    outcome.best_valid_mrr = result.best_valid_mrr;
    outcome.best_epoch = result.best_epoch;
    return outcome;
}

struct EvalOutcome {
    EvalReport report;
    PreferenceProfile profile;
    std::string printed_mrr;  // exact digits printed/logged for the final MRR
};

inline EvalOutcome run_eval(const PipelineConfig& c,
                            std::optional<std::filesystem::path> checkpoint = std::nullopt) {
    Dataset d = detail::load_stage_dataset(c, "eval");
    auto model_path = checkpoint.value_or(c.output_dir / "model.bin");
    if (!std::filesystem::exists(model_path))
        throw std::runtime_error("eval: missing checkpoint " + model_path.string() +
                                 " (run train first)");
    ModelState state = load_checkpoint(model_path);
    TkgIndex idx = build_indices(d, c.filter.relation_window);
    KnownObjects known = build_known_objects(d);

    EvalOutcome outcome;
    outcome.report = evaluate(state, d.test, idx, &known, c.eval_filter_known, c.threads);
    std::vector<QueryTriple> queries;
    queries.reserve(d.test.size());
    for (const auto& q : d.test) queries.push_back({q.s, q.r, q.t});
    outcome.profile = preference_profile(state, queries, idx, c.profile_top_n);
    outcome.printed_mrr = format_double(outcome.report.mrr);

    nlohmann::json j = detail::report_to_json(outcome.report);
    j["preference_profile"] = {
        {"mean_entity_interactions", outcome.profile.mean_entity_interactions},
        {"mean_time_span", outcome.profile.mean_time_span},
        {"mean_relation_interactions", outcome.profile.mean_relation_interactions},
        {"time_span_sentinel", "entities never active at or before t contribute t + 1"},
    };
    std::filesystem::create_directories(c.output_dir);
    detail::write_text(c.output_dir / "eval_report.json", j.dump(2) + "\n");
    {
        std::ofstream out(c.output_dir / "rank_records.tsv");
        if (!out) throw std::runtime_error("cannot write rank_records.tsv");
        out << "s\tr\to\tt\trank\n";
        for (const auto& [q, r] : outcome.report.rank_records)
            out << q.s << '\t' << q.r << '\t' << q.o << '\t' << q.t << '\t' << r << '\n';
    }
    return outcome;
}

struct RecoveryOutcome {
    double fraction = 0.0;
    std::size_t removed = 0;
    double best_rate = 0.0;
    FilterParams best_params;
    std::vector<std::pair<FilterParams, double>> sweep;  // populated in sweep mode
};

// Holdout-removal experiment: drop `fraction` of train facts, regenerate
// candidates from the rest, and measure how many removed facts reappear.
// In sweep mode the cutoff and both windows range over {1, 3, 5, 10, 20}.
inline RecoveryOutcome run_recovery(const PipelineConfig& c) {
    Dataset d = detail::load_stage_dataset(c, "recovery");
    HoldoutSplit holdout = split_holdout(d, c.recovery_fraction, derive_seed(c.seed, "recovery"));

    RecoveryOutcome outcome;
    outcome.fraction = c.recovery_fraction;
    outcome.removed = holdout.removed.size();
    outcome.best_rate = -1.0;

    const std::vector<std::uint32_t> grid = {1, 3, 5, 10, 20};
    std::vector<std::uint32_t> rel_windows =
        c.recovery_sweep ? grid : std::vector<std::uint32_t>{c.filter.relation_window};
    for (std::uint32_t rel_w : rel_windows) {
        TkgIndex idx = build_indices(holdout.retained, rel_w);
        std::vector<std::uint32_t> ms =
            c.recovery_sweep ? grid : std::vector<std::uint32_t>{c.filter.top_m};
        std::vector<std::uint32_t> time_ws =
            c.recovery_sweep ? grid : std::vector<std::uint32_t>{c.filter.time_window};
        for (std::uint32_t m : ms) {
            for (std::uint32_t time_w : time_ws) {
                FilterParams p = c.filter;
                p.top_m = m;
                p.relation_window = rel_w;
                p.time_window = time_w;
                double rate =
                    recovery_rate(idx, holdout.removed, p, c.recovery_sparsity_gate);
                if (c.recovery_sweep) outcome.sweep.push_back({p, rate});
                if (rate > outcome.best_rate) {
                    outcome.best_rate = rate;
                    outcome.best_params = p;
                }
            }
        }
    }

    auto params_json = [](const FilterParams& p) {
        return nlohmann::json{{"top_m", p.top_m},
                              {"relation_window", p.relation_window},
                              {"time_window", p.time_window}};
    };
    nlohmann::json j = {
        {"fraction", outcome.fraction},
        {"removed", outcome.removed},
        {"sparsity_gate", c.recovery_sparsity_gate},
        {"best", {{"rate", outcome.best_rate}, {"params", params_json(outcome.best_params)}}},
    };
    if (c.recovery_sweep) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& [p, rate] : outcome.sweep) {
            nlohmann::json row = params_json(p);
            row["rate"] = rate;
            rows.push_back(row);
        }
        j["sweep"] = rows;
    }
    std::filesystem::create_directories(c.output_dir);
    detail::write_text(c.output_dir / "recovery.json", j.dump(2) + "\n");
    return outcome;
}

}  // namespace tkgaug
