#pragma once

// End-to-end pipeline: configuration, the per-video stage document that each
// stage extends, stage functions, and the dataset-level evaluation report.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "clustering.hpp"
#include "errors.hpp"
#include "keyframes.hpp"
#include "manifest.hpp"
#include "metrics.hpp"
#include "partitioning.hpp"
#include "reduction.hpp"
#include "sampling.hpp"
#include "summary.hpp"
#include "types.hpp"

namespace vsumm {

struct PipelineConfig {
    // sampling
    double target_fps = 4.0;
    // reduction
    std::string reducer = "pca:6+tsne:2";
    double tsne_perplexity = 30.0;
    int tsne_iterations = 1000;
    double tsne_learning_rate = 200.0;
    double tsne_exaggeration = 12.0;
    int tsne_exaggeration_iterations = 250;
    std::uint64_t seed = 0;
    // clustering
    std::string distance = "euclidean";
    std::string linkage = "average";
    std::optional<double> birch_threshold = 0.5;  // null: birch_threshold_scale * median pairwise distance
    double birch_threshold_scale = 0.5;
    int birch_branching = 50;
    int max_clusters = 60;
    double modulation = 1e-3;
    // partitioning
    int window = 5;
    Index min_length = 4;
    // importance
    std::string keyframes = "middle+ends";
    std::string bias_scheme = "increase";
    double bias = 0.5;
    std::string interpolation = "cosine";
    // summaries
    double summary_rate = 0.2;
    double max_seconds = 120.0;
    std::optional<double> output_fps;  // unset: input fps
    std::string extrapolation = "linear";
    double budget = 0.15;
    // evaluation
    int splits = 5;
    double split_fraction = 0.2;
    std::uint64_t split_seed = 0;
    int baseline_repeats = 100;
    std::uint64_t baseline_seed = 0;
};

inline const std::vector<std::string>& pipeline_config_keys() {
    static const std::vector<std::string> keys = {
        "target_fps", "reducer", "tsne_perplexity", "tsne_iterations", "tsne_learning_rate", "tsne_exaggeration",
        "tsne_exaggeration_iterations", "seed", "distance", "linkage", "birch_threshold", "birch_threshold_scale",
        "birch_branching", "max_clusters", "modulation", "window", "min_length", "keyframes", "bias_scheme", "bias",
        "interpolation", "summary_rate", "max_seconds", "output_fps", "extrapolation", "budget", "splits",
        "split_fraction", "split_seed", "baseline_repeats", "baseline_seed"};
    return keys;
}

inline nlohmann::json to_json(const PipelineConfig& c) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"target_fps", c.target_fps},
            {"reducer", c.reducer},
            {"tsne_perplexity", c.tsne_perplexity},
            {"tsne_iterations", c.tsne_iterations},
            {"tsne_learning_rate", c.tsne_learning_rate},
            {"tsne_exaggeration", c.tsne_exaggeration},
            {"tsne_exaggeration_iterations", c.tsne_exaggeration_iterations},
            {"seed", c.seed},
            {"distance", c.distance},
            {"linkage", c.linkage},
            {"birch_threshold", opt(c.birch_threshold)},
            {"birch_threshold_scale", c.birch_threshold_scale},
            {"birch_branching", c.birch_branching},
            {"max_clusters", c.max_clusters},
            {"modulation", c.modulation},
            {"window", c.window},
            {"min_length", c.min_length},
            {"keyframes", c.keyframes},
            {"bias_scheme", c.bias_scheme},
            {"bias", c.bias},
            {"interpolation", c.interpolation},
            {"summary_rate", c.summary_rate},
            {"max_seconds", c.max_seconds},
            {"output_fps", opt(c.output_fps)},
            {"extrapolation", c.extrapolation},
            {"budget", c.budget},
            {"splits", c.splits},
            {"split_fraction", c.split_fraction},
            {"split_seed", c.split_seed},
            {"baseline_repeats", c.baseline_repeats},
            {"baseline_seed", c.baseline_seed}};
}

/// Checks every enumerated or ranged value so bad configs fail before any work.
inline void validate(const PipelineConfig& c) {
    auto bad = [](const std::string& key, const std::string& why) { throw ValidationError("config '" + key + "': " + why); };
    if (!(c.target_fps > 0.0)) bad("target_fps", "must be positive");
    parse_chain(c.reducer);
    parse_distance(c.distance);
    parse_linkage(c.linkage);
    parse_keyframe_rules(c.keyframes);
    parse_bias_scheme(c.bias_scheme);
    parse_interpolation(c.interpolation);
    parse_extrapolation(c.extrapolation);
    if (!(c.tsne_perplexity > 0.0)) bad("tsne_perplexity", "must be positive");
    if (c.tsne_iterations < 1) bad("tsne_iterations", "must be >= 1");
    if (!(c.tsne_learning_rate > 0.0)) bad("tsne_learning_rate", "must be positive");
    if (!(c.tsne_exaggeration >= 1.0)) bad("tsne_exaggeration", "must be >= 1");
    if (c.tsne_exaggeration_iterations < 0) bad("tsne_exaggeration_iterations", "must be >= 0");
    if (c.birch_threshold && !(*c.birch_threshold >= 0.0)) bad("birch_threshold", "must be >= 0");
    if (!(c.birch_threshold_scale > 0.0)) bad("birch_threshold_scale", "must be positive");
    if (c.birch_branching < 2) bad("birch_branching", "must be >= 2");
    if (c.max_clusters < 1) bad("max_clusters", "must be >= 1");
    if (!(c.modulation > 0.0)) bad("modulation", "must be positive");
    if (c.window < 1 || c.window % 2 == 0) bad("window", "must be odd and >= 1");
    if (c.min_length < 1) bad("min_length", "must be >= 1");
    if (c.bias < 0.0 || (c.bias_scheme == "decrease" && c.bias > 1.0)) bad("bias", "out of range for the scheme");
    if (!(c.summary_rate > 0.0 && c.summary_rate < 1.0)) bad("summary_rate", "must lie in (0, 1)");
    if (!(c.max_seconds > 0.0)) bad("max_seconds", "must be positive");
    if (c.output_fps && !(*c.output_fps > 0.0)) bad("output_fps", "must be positive");
    if (!(c.budget > 0.0 && c.budget <= 1.0)) bad("budget", "must lie in (0, 1]");
    if (c.splits < 0) bad("splits", "must be >= 0 (0 disables splits)");
    if (!(c.split_fraction > 0.0 && c.split_fraction < 1.0)) bad("split_fraction", "must lie in (0, 1)");
    if (c.baseline_repeats < 0) bad("baseline_repeats", "must be >= 0 (0 disables the baseline)");
}

/// Overlays `doc` on `base`. Unknown keys are rejected with the accepted list.
inline PipelineConfig apply_config(PipelineConfig c, const nlohmann::json& doc) {
    if (!doc.is_object()) throw ValidationError("config must be an object");
    const auto& keys = pipeline_config_keys();
    detail::reject_unknown_keys(doc, std::set<std::string>(keys.begin(), keys.end()), "config");
    try {
        auto get = [&doc](const char* key, auto& field) {
            if (doc.contains(key)) field = doc.at(key).get<std::remove_reference_t<decltype(field)>>();
        };
        auto get_opt = [&doc](const char* key, std::optional<double>& field) {
            if (!doc.contains(key)) return;
            if (doc.at(key).is_null())
                field.reset();
            else
                field = doc.at(key).get<double>();
        };
        get("target_fps", c.target_fps);
        get("reducer", c.reducer);
        get("tsne_perplexity", c.tsne_perplexity);
        get("tsne_iterations", c.tsne_iterations);
        get("tsne_learning_rate", c.tsne_learning_rate);
        get("tsne_exaggeration", c.tsne_exaggeration);
        get("tsne_exaggeration_iterations", c.tsne_exaggeration_iterations);
        get("seed", c.seed);
        get("distance", c.distance);
        get("linkage", c.linkage);
        get_opt("birch_threshold", c.birch_threshold);
        get("birch_threshold_scale", c.birch_threshold_scale);
        get("birch_branching", c.birch_branching);
        get("max_clusters", c.max_clusters);
        get("modulation", c.modulation);
        get("window", c.window);
        get("min_length", c.min_length);
        get("keyframes", c.keyframes);
        get("bias_scheme", c.bias_scheme);
        get("bias", c.bias);
        get("interpolation", c.interpolation);
        get("summary_rate", c.summary_rate);
        get("max_seconds", c.max_seconds);
        get_opt("output_fps", c.output_fps);
        get("extrapolation", c.extrapolation);
        get("budget", c.budget);
        get("splits", c.splits);
        get("split_fraction", c.split_fraction);
        get("split_seed", c.split_seed);
        get("baseline_repeats", c.baseline_repeats);
        get("baseline_seed", c.baseline_seed);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    validate(c);
    return c;
}

/// "key=value" override; the value is read as JSON, falling back to a string.
inline PipelineConfig apply_override(const PipelineConfig& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + assignment + "' must be key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        value = text;
    }
    if (value.is_number() && to_json(c).contains(key) && to_json(c).at(key).is_string()) value = text;
    return apply_config(c, nlohmann::json{{key, value}});
}

inline TsneConfig tsne_config(const PipelineConfig& c) {
    TsneConfig t;
    t.perplexity = c.tsne_perplexity;
    t.iterations = c.tsne_iterations;
    t.learning_rate = c.tsne_learning_rate;
    t.exaggeration = c.tsne_exaggeration;
    t.exaggeration_iterations = c.tsne_exaggeration_iterations;
    t.momentum_switch_iteration = c.tsne_exaggeration_iterations;
    t.seed = c.seed;
    return t;
}

inline ClusteringConfig clustering_config(const PipelineConfig& c) {
    ClusteringConfig k;
    k.max_clusters = c.max_clusters;
    k.modulation = c.modulation;
    k.birch_threshold = c.birch_threshold;
    k.birch_threshold_scale = c.birch_threshold_scale;
    k.birch_branching = c.birch_branching;
    k.linkage = parse_linkage(c.linkage);
    k.distance = parse_distance(c.distance);
    return k;
}

/// Everything known about one video; each stage fills more of it.
struct VideoDocument {
    VideoMeta meta;
    double sample_fps = 1.0;
    std::string sampling = "plan";  // "plan": rows picked by plan_sampling; "provided": used as stored
    std::vector<Index> sample_indexes;
    Index input_dim = 0;
    // reduce
    std::optional<Matrix> reduced;
    std::string reducer;
    Index intermediate_dim = 0;
    // cluster
    std::optional<LabelSequence> coarse, fine;
    int coarse_clusters = 0, target_clusters = 0;
    double birch_threshold = 0.0;
    Index target_frames = 0;  // L'
    // partition
    std::optional<PartitionSet> partitions;
    // score
    std::optional<KeyframeSet> keyframes;
    std::optional<std::vector<double>> flat, importance;
    // summarize
    std::optional<SummarySelection> usable, evaluation;
    std::optional<std::vector<double>> per_frame;

    std::string stage() const {
        if (usable) return "summarize";
        if (importance) return "score";
        if (partitions) return "partition";
        if (fine) return "cluster";
        if (reduced) return "reduce";
        return "sample";
    }
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError("stage input is missing " + what);
}

/// Keeps the rows that plan_sampling picks for the target rate when the input
/// holds them all; otherwise the stored samples are used as they are.
inline VideoDocument sample_stage(const EmbeddingSet& input, const PipelineConfig& cfg, Matrix& rows) {
    validate(input);
    VideoDocument doc;
    doc.meta = input.meta;
    doc.input_dim = input.dim();
    const auto plan = plan_sampling(input.meta.total_frames, input.meta.input_fps, cfg.target_fps);
    std::vector<Index> pick;
    std::size_t j = 0;
    for (Index t : plan.indexes) {
        while (j < input.sample_indexes.size() && input.sample_indexes[j] < t) ++j;
        if (j == input.sample_indexes.size() || input.sample_indexes[j] != t) break;
        pick.push_back(static_cast<Index>(j));
    }
    if (pick.size() == plan.indexes.size()) {
        doc.sampling = "plan";
        doc.sample_indexes = plan.indexes;
        doc.sample_fps = plan.achieved_fps();
        rows.resize(static_cast<Index>(pick.size()), input.dim());
        for (std::size_t i = 0; i < pick.size(); ++i) rows.row(static_cast<Index>(i)) = input.embeddings.row(pick[i]);
    } else {
        doc.sampling = "provided";
        doc.sample_indexes = input.sample_indexes;
        doc.sample_fps = input.sample_fps;
        rows = input.embeddings;
    }
    return doc;
}

inline double output_fps(const VideoDocument& doc, const PipelineConfig& cfg) {
    return cfg.output_fps ? *cfg.output_fps : doc.meta.input_fps;
}

inline void reduce_stage(VideoDocument& doc, const Matrix& rows, const PipelineConfig& cfg) {
    EmbeddingSet set;
    set.meta = doc.meta;
    set.sample_indexes = doc.sample_indexes;
    set.embeddings = rows;
    set.sample_fps = doc.sample_fps;
    const auto reduced = reduce_chain(set, parse_chain(cfg.reducer), tsne_config(cfg));
    doc.reduced = reduced.set.embeddings;
    doc.reducer = format_chain(reduced.applied);
    doc.intermediate_dim = reduced.intermediate_dim;
}

inline void cluster_stage(VideoDocument& doc, const PipelineConfig& cfg) {
    require(doc.reduced.has_value(), "reduced embeddings");
    doc.target_frames = target_length(doc.meta.total_frames, cfg.summary_rate, cfg.max_seconds, output_fps(doc, cfg));
    const auto c = cluster_context(*doc.reduced, static_cast<double>(doc.target_frames), clustering_config(cfg));
    doc.coarse = c.coarse;
    doc.fine = c.fine;
    doc.coarse_clusters = c.coarse_count;
    doc.target_clusters = c.target;
    doc.birch_threshold = c.threshold;
}

inline void partition_stage(VideoDocument& doc, const PipelineConfig& cfg) {
    require(doc.fine.has_value(), "fine cluster labels");
    doc.partitions = partition_labels(*doc.fine, cfg.window, cfg.min_length);
}

inline void score_stage(VideoDocument& doc, const PipelineConfig& cfg) {
    require(doc.partitions.has_value(), "partitions");
    const auto rules = parse_keyframe_rules(cfg.keyframes);
    if (rules.mean) require(doc.reduced.has_value(), "reduced embeddings (Mean keyframes)");
    doc.keyframes = select_keyframes(*doc.partitions, doc.reduced ? &*doc.reduced : nullptr, rules);
    doc.flat = flat_scores(*doc.partitions);
    if (rules.mean_only())
        doc.importance = doc.flat;
    else
        doc.importance = bias_and_interpolate(*doc.flat, *doc.partitions, keypoints(*doc.partitions, *doc.keyframes),
                                              parse_bias_scheme(cfg.bias_scheme), cfg.bias, parse_interpolation(cfg.interpolation));
}

/// Usable summary always; the evaluation summary only when segments are known.
inline void summarize_stage(VideoDocument& doc, const PipelineConfig& cfg, const ManifestVideo* video) {
    require(doc.importance.has_value() && doc.keyframes.has_value(), "importance scores");
    if (doc.target_frames == 0)
        doc.target_frames = target_length(doc.meta.total_frames, cfg.summary_rate, cfg.max_seconds, output_fps(doc, cfg));
    doc.usable = usable_summary(doc.keyframes->all, *doc.importance, doc.sample_indexes, doc.meta.total_frames, doc.target_frames);
    doc.per_frame = extrapolate(*doc.importance, doc.sample_indexes, doc.meta.total_frames, parse_extrapolation(cfg.extrapolation));
    if (video) {
        if (video->meta.total_frames != doc.meta.total_frames)
            throw ValidationError("video '" + doc.meta.video_id + "': manifest has " + std::to_string(video->meta.total_frames) +
                                  " frames, embeddings " + std::to_string(doc.meta.total_frames));
        doc.evaluation = knapsack_summary(*doc.per_frame, video->segments, evaluation_budget(doc.meta.total_frames, cfg.budget));
    }
}

// ---- stage document (de)serialization -----------------------------------------

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = static_cast<Index>(j.size());
    const Index cols = rows ? static_cast<Index>(j.at(0).size()) : 0;
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        if (static_cast<Index>(j.at(static_cast<std::size_t>(r)).size()) != cols) throw ValidationError("ragged matrix");
        for (Index c = 0; c < cols; ++c) m(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

inline constexpr int kStageSchemaVersion = 1;

inline nlohmann::json to_json(const VideoDocument& d, bool with_importances = true) {
    nlohmann::json j = {{"schema_version", kStageSchemaVersion},
                        {"stage", d.stage()},
                        {"video_id", d.meta.video_id},
                        {"total_frames", d.meta.total_frames},
                        {"fps", d.meta.input_fps},
                        {"sample_fps", d.sample_fps},
                        {"sampling", d.sampling},
                        {"sample_indexes", d.sample_indexes},
                        {"input_dim", d.input_dim}};
    if (d.reduced) {
        j["reducer"] = d.reducer;
        j["intermediate_dim"] = d.intermediate_dim;
        j["reduced"] = matrix_to_json(*d.reduced);
    }
    if (d.fine) {
        j["clusters"] = {{"coarse", *d.coarse},
                         {"fine", *d.fine},
                         {"coarse_count", d.coarse_clusters},
                         {"target_count", d.target_clusters},
                         {"birch_threshold", d.birch_threshold},
                         {"target_frames", d.target_frames}};
    }
    if (d.partitions) {
        nlohmann::json p = nlohmann::json::array();
        for (const auto& s : d.partitions->sections) p.push_back({s.start, s.length});
        j["partitions"] = p;
    }
    if (d.importance) {
        j["keyframes"] = {{"per_partition", d.keyframes->per_partition}, {"all", d.keyframes->all}};
        j["flat_scores"] = *d.flat;
        j["sample_importances"] = *d.importance;
    }
    if (d.usable) {
        j["target_frames"] = d.target_frames;
        j["usable"] = selection_to_json(*d.usable);
        if (d.evaluation) {
            const auto e = selection_to_json(*d.evaluation);
            j["selected_frames"] = e.at("selected_frames");
            j["selection_bits"] = e.at("selection_bits");
            j["budget_frames"] = e.at("budget_frames");
        }
        if (with_importances) j["importances"] = *d.per_frame;
    }
    return j;
}

inline VideoDocument video_document_from_json(const nlohmann::json& j) {
    static const std::set<std::string> keys = {"schema_version", "stage", "video_id", "total_frames", "fps", "sample_fps",
                                               "sampling", "sample_indexes", "input_dim", "reducer", "intermediate_dim",
                                               "reduced", "clusters", "partitions", "keyframes", "flat_scores",
                                               "sample_importances", "target_frames", "usable", "selected_frames",
                                               "selection_bits", "budget_frames", "importances"};
    if (!j.is_object()) throw ValidationError("stage document must be an object");
    detail::reject_unknown_keys(j, keys, "stage document");
    if (j.value("schema_version", 0) != kStageSchemaVersion) throw ValidationError("stage document: unsupported schema_version");
    VideoDocument d;
    try {
        d.meta.video_id = j.at("video_id").get<std::string>();
        d.meta.total_frames = j.at("total_frames").get<Index>();
        d.meta.input_fps = j.at("fps").get<double>();
        d.sample_fps = j.at("sample_fps").get<double>();
        d.sampling = j.at("sampling").get<std::string>();
        d.sample_indexes = j.at("sample_indexes").get<std::vector<Index>>();
        d.input_dim = j.at("input_dim").get<Index>();
        validate(d.meta);
        if (j.contains("reduced")) {
            d.reduced = matrix_from_json(j.at("reduced"));
            d.reducer = j.at("reducer").get<std::string>();
            d.intermediate_dim = j.at("intermediate_dim").get<Index>();
            if (d.reduced->rows() != static_cast<Index>(d.sample_indexes.size()))
                throw ValidationError("stage document: reduced rows do not match samples");
        }
        if (j.contains("clusters")) {
            const auto& c = j.at("clusters");
            d.coarse = c.at("coarse").get<LabelSequence>();
            d.fine = c.at("fine").get<LabelSequence>();
            d.coarse_clusters = c.at("coarse_count").get<int>();
            d.target_clusters = c.at("target_count").get<int>();
            d.birch_threshold = c.at("birch_threshold").get<double>();
            d.target_frames = c.at("target_frames").get<Index>();
            if (d.fine->size() != d.sample_indexes.size()) throw ValidationError("stage document: label count does not match samples");
        }
        if (j.contains("partitions")) {
            PartitionSet p;
            for (const auto& s : j.at("partitions")) p.sections.push_back({s.at(0).get<Index>(), s.at(1).get<Index>()});
            validate(p, static_cast<Index>(d.sample_indexes.size()));
            d.partitions = p;
        }
        if (j.contains("sample_importances")) {
            KeyframeSet k;
            k.per_partition = j.at("keyframes").at("per_partition").get<std::vector<std::vector<Index>>>();
            k.all = j.at("keyframes").at("all").get<std::vector<Index>>();
            d.keyframes = k;
            d.flat = j.at("flat_scores").get<std::vector<double>>();
            d.importance = j.at("sample_importances").get<std::vector<double>>();
        }
        if (j.contains("usable")) {
            d.target_frames = j.at("target_frames").get<Index>();
            d.usable = selection_from_json(j.at("usable"));
            if (j.contains("selection_bits"))
                d.evaluation = selection_from_json({{"selected_frames", j.at("selected_frames")},
                                                    {"selection_bits", j.at("selection_bits")},
                                                    {"total_frames", d.meta.total_frames},
                                                    {"budget_frames", j.at("budget_frames")}});
            if (j.contains("importances")) d.per_frame = j.at("importances").get<std::vector<double>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("stage document: ") + e.what());
    }
    return d;
}

// ---- evaluation report ---------------------------------------------------------

struct VideoEvaluation {
    std::string video_id;
    double f_avg = 0.0, f_max = 0.0;
    std::optional<BaselineScore> baseline;
};

struct SplitRow {
    std::vector<std::string> test;
    double avg_f = 0.0, max_f = 0.0;
};

struct EvaluationReport {
    std::string setting;
    std::vector<VideoEvaluation> videos;
    double avg_f = 0.0, max_f = 0.0, top5_f = 0.0;
    std::vector<SplitRow> splits;
    std::string splits_note;
    std::optional<double> baseline_avg_f, baseline_max_f;
    nlohmann::json config;
};

/// Scores evaluation summaries (by video id) against the manifest.
inline EvaluationReport evaluate(const std::vector<VideoDocument>& docs, const DatasetManifest& manifest, const PipelineConfig& cfg,
                                 int jobs = 1) {
    if (docs.empty()) throw ValidationError("evaluate: no summaries");
    EvaluationReport rep;
    rep.setting = setting_name(cfg.distance, parse_chain(cfg.reducer));
    rep.config = to_json(cfg);
    rep.videos.resize(docs.size());
    std::vector<const ManifestVideo*> entries;
    for (const auto& d : docs) {
        const auto* v = manifest.find(d.meta.video_id);
        if (!v) throw ValidationError("evaluate: video '" + d.meta.video_id + "' is not in the manifest");
        if (!d.evaluation) throw ValidationError("evaluate: video '" + d.meta.video_id + "' has no evaluation summary");
        if (v->user_summaries.empty()) throw ValidationError("evaluate: video '" + d.meta.video_id + "' has no user summaries");
        if (v->meta.total_frames != d.meta.total_frames) throw ValidationError("evaluate: frame count mismatch for '" + d.meta.video_id + "'");
        entries.push_back(v);
    }
    auto work = [&](std::size_t i) {
        const auto& d = docs[i];
        auto& out = rep.videos[i];
        out.video_id = d.meta.video_id;
        const auto& frames = d.evaluation->selected_frames;
        out.f_avg = video_score(frames, entries[i]->user_summaries, d.meta.total_frames, UserAggregate::Avg);
        out.f_max = video_score(frames, entries[i]->user_summaries, d.meta.total_frames, UserAggregate::Max);
        if (cfg.baseline_repeats > 0)
            out.baseline = random_baseline(*entries[i], cfg.baseline_repeats, derive_seed(cfg.baseline_seed, d.meta.video_id), cfg.budget);
    };
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next++) < docs.size();) try {
                work(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    std::vector<double> avg, max;
    for (const auto& v : rep.videos) {
        avg.push_back(v.f_avg);
        max.push_back(v.f_max);
    }
    rep.avg_f = dataset_score(avg, DatasetAggregate::Avg);
    rep.max_f = dataset_score(max, DatasetAggregate::Avg);
    rep.top5_f = dataset_score(avg, DatasetAggregate::Top5);
    if (cfg.baseline_repeats > 0) {
        std::vector<double> ba, bm;
        for (const auto& v : rep.videos) {
            ba.push_back(v.baseline->avg);
            bm.push_back(v.baseline->max);
        }
        rep.baseline_avg_f = dataset_score(ba, DatasetAggregate::Avg);
        rep.baseline_max_f = dataset_score(bm, DatasetAggregate::Avg);
    }
    const auto test_size = std::llround(cfg.split_fraction * static_cast<double>(docs.size()));
    if (cfg.splits == 0) {
        rep.splits_note = "splits disabled";
    } else if (test_size == 0) {
        rep.splits_note = "dataset too small for a test fraction of " + nlohmann::json(cfg.split_fraction).dump();
    } else {
        const auto splits = make_splits(docs.size(), cfg.splits, cfg.split_fraction, cfg.split_seed);
        const auto sa = split_scores(avg, splits);
        const auto sm = split_scores(max, splits);
        for (std::size_t s = 0; s < splits.size(); ++s) {
            SplitRow row;
            for (std::size_t i : splits[s].test) row.test.push_back(rep.videos[i].video_id);
            row.avg_f = sa[s];
            row.max_f = sm[s];
            rep.splits.push_back(std::move(row));
        }
    }
    return rep;
}

inline nlohmann::json to_json(const EvaluationReport& r) {
    nlohmann::json videos = nlohmann::json::array();
    for (const auto& v : r.videos) {
        nlohmann::json j = {{"video_id", v.video_id}, {"f_avg", v.f_avg}, {"f_max", v.f_max}};
        if (v.baseline) j["baseline"] = {{"f_avg", v.baseline->avg}, {"f_max", v.baseline->max}, {"budget_frames", v.baseline->budget}, {"repeats", v.baseline->repeats}};
        videos.push_back(j);
    }
    nlohmann::json splits = nlohmann::json::array();
    double split_avg_mean = 0.0, split_avg_max = 0.0;
    for (const auto& s : r.splits) {
        splits.push_back({{"test", s.test}, {"avg_f", s.avg_f}, {"max_f", s.max_f}});
        split_avg_mean += s.avg_f / static_cast<double>(r.splits.size());
        split_avg_max = std::max(split_avg_max, s.avg_f);
    }
    nlohmann::json j = {{"setting", r.setting},
                        {"videos", videos},
                        {"dataset", {{"avg_f", r.avg_f}, {"max_f", r.max_f}, {"top5_f", r.top5_f}}},
                        {"splits", splits},
                        {"config", r.config}};
    if (!r.splits.empty()) j["split_summary"] = {{"avg_f_mean", split_avg_mean}, {"avg_f_max", split_avg_max}};
    if (!r.splits_note.empty()) j["splits_note"] = r.splits_note;
    if (r.baseline_avg_f) j["baseline"] = {{"avg_f", *r.baseline_avg_f}, {"max_f", *r.baseline_max_f}};
    return j;
}

inline std::string format_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (width.size() <= c) width.push_back(0);
            width[c] = std::max(width[c], r[c].size());
        }
    std::ostringstream out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            if (c) out << "  ";
            if (c == 0)
                out << std::left << std::setw(static_cast<int>(width[c])) << rows[i][c];
            else
                out << std::right << std::setw(static_cast<int>(width[c])) << rows[i][c];
        }
        out << "\n";
        if (i == 0) {
            std::size_t total = 0;
            for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
            out << std::string(total, '-') << "\n";
        }
    }
    return out.str();
}

inline std::string percent(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v * 100.0;
    return s.str();
}

inline std::string format_report(const EvaluationReport& r) {
    std::vector<std::vector<std::string>> rows = {{"video", "f avg (%)", "f max (%)", "random avg (%)"}};
    for (const auto& v : r.videos) rows.push_back({v.video_id, percent(v.f_avg), percent(v.f_max), v.baseline ? percent(v.baseline->avg) : "-"});
    std::ostringstream out;
    out << "setting: " << r.setting << "\n\n" << format_table(rows) << "\n";
    std::vector<std::vector<std::string>> totals = {{"metric", "value (%)"}};
    totals.push_back({"avg-f", percent(r.avg_f)});
    totals.push_back({"max-f", percent(r.max_f)});
    totals.push_back({"top-5", percent(r.top5_f)});
    if (r.baseline_avg_f) totals.push_back({"random avg-f", percent(*r.baseline_avg_f)});
    out << format_table(totals);
    if (!r.splits.empty()) {
        std::vector<std::vector<std::string>> split_rows = {{"split", "avg-f (%)", "max-f (%)", "test videos"}};
        for (std::size_t i = 0; i < r.splits.size(); ++i) {
            std::string ids;
            for (const auto& t : r.splits[i].test) ids += (ids.empty() ? "" : ",") + t;
            split_rows.push_back({std::to_string(i + 1), percent(r.splits[i].avg_f), percent(r.splits[i].max_f), ids});
        }
        out << "\n" << format_table(split_rows);
    } else if (!r.splits_note.empty()) {
        out << "\nsplits: " << r.splits_note << "\n";
    }
    return out.str();
}

/// Runs every stage for every video. Videos are processed on `jobs` threads;
/// results are placed by input position, so output does not depend on `jobs`.
struct PipelineResult {
    std::vector<VideoDocument> videos;
    std::optional<EvaluationReport> report;
};

inline VideoDocument run_video(const EmbeddingSet& input, const PipelineConfig& cfg, const ManifestVideo* video) {
    Matrix rows;
    auto doc = sample_stage(input, cfg, rows);
    reduce_stage(doc, rows, cfg);
    cluster_stage(doc, cfg);
    partition_stage(doc, cfg);
    score_stage(doc, cfg);
    summarize_stage(doc, cfg, video);
    return doc;
}

inline PipelineResult run_pipeline(const std::vector<EmbeddingSet>& inputs, const PipelineConfig& cfg,
                                   const DatasetManifest* manifest, int jobs = 1) {
    validate(cfg);
    PipelineResult result;
    result.videos.resize(inputs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next++) < inputs.size();) try {
                const ManifestVideo* video = manifest ? manifest->find(inputs[i].meta.video_id) : nullptr;
                if (manifest && !video)
                    throw ValidationError("video '" + inputs[i].meta.video_id + "' is not in the manifest");
                result.videos[i] = run_video(inputs[i], cfg, video);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    if (manifest) result.report = evaluate(result.videos, *manifest, cfg, jobs);
    return result;
}

}  // namespace vsumm
