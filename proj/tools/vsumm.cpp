// vsumm: command-line driver for the summarization pipeline, its evaluation,
// and the human-evaluation survey.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vsumm/human_eval.hpp"
#include "vsumm/manifest.hpp"
#include "vsumm/metrics.hpp"
#include "vsumm/pipeline.hpp"
#include "vsumm/sampling.hpp"
#include "vsumm/survey.hpp"
#include "vsumm/survey_http.hpp"
#include "vsumm/vemb.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vsumm;

namespace {

enum Exit { kOk = 0, kValidation = 1, kIo = 2, kInternal = 3 };

struct ConfigFlags {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string reducer, distance;
};

void add_config_flags(CLI::App* app, ConfigFlags& f) {
    app->add_option("--config", f.config_file, "JSON config file (flat keys)");
    app->add_option("--set", f.overrides, "override a config key: key=value")->take_all();
    app->add_option("--reducer", f.reducer, "reducer chain, e.g. pca:34+tsne:2");
    app->add_option("--distance", f.distance, "euclidean | cosine");
}

PipelineConfig resolve_config(const ConfigFlags& f) {
    PipelineConfig cfg;
    if (!f.config_file.empty()) {
        json doc;
        try {
            doc = json::parse(read_text_file(f.config_file));
        } catch (const json::parse_error& e) {
            throw ValidationError("config '" + f.config_file + "': " + e.what());
        }
        cfg = apply_config(cfg, doc);
    }
    for (const auto& o : f.overrides) cfg = apply_override(cfg, o);
    if (!f.reducer.empty()) cfg = apply_config(cfg, json{{"reducer", f.reducer}});
    if (!f.distance.empty()) cfg = apply_config(cfg, json{{"distance", f.distance}});
    validate(cfg);
    return cfg;
}

json read_json_file(const std::string& path) {
    const auto text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError("'" + path + "': " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    out.flush();
    if (!out) throw IoError("cannot write '" + path + "'");
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

DatasetManifest read_manifest(const std::string& path) { return load_manifest(read_text_file(path)); }

VideoDocument read_document(const std::string& path) { return video_document_from_json(read_json_file(path)); }

EmbeddingSet read_embeddings(const std::string& path) { return vemb::read_file(path, fs::path(path).stem().string()); }

/// Per-video stage: read a document, apply `stage`, write the extended document.
int doc_stage(const std::string& in, const std::string& out, const ConfigFlags& flags,
              const std::function<void(VideoDocument&, const PipelineConfig&)>& stage) {
    const auto cfg = resolve_config(flags);
    auto doc = read_document(in);
    stage(doc, cfg);
    write_json(out, to_json(doc));
    return kOk;
}

json run_manifest(const PipelineConfig& cfg, const std::vector<std::string>& inputs, const std::string& manifest, int jobs) {
    return {{"tool", "vsumm"},
            {"config", to_json(cfg)},
            {"seeds",
             {{"tsne", cfg.seed}, {"splits", cfg.split_seed}, {"baseline", cfg.baseline_seed}, {"baseline_derivation", "seed_seq(seed, fnv1a(video_id))"}}},
            {"inputs", inputs},
            {"manifest", manifest.empty() ? json(nullptr) : json(manifest)},
            {"jobs", jobs}};
}

void emit_report(const EvaluationReport& rep, const std::string& json_path, const std::string& text_path) {
    const auto text = format_report(rep);
    std::cout << text;
    if (!json_path.empty()) write_json(json_path, to_json(rep));
    if (!text_path.empty()) write_text(text_path, text);
}

std::string format_human_eval(const HumanEvalReport& rep, double display_scale) {
    auto opt = [](const std::optional<double>& v, double scale = 1.0) {
        if (!v) return std::string("-");
        std::ostringstream s;
        s << std::fixed << std::setprecision(4) << *v * scale;
        return s.str();
    };
    std::vector<std::vector<std::string>> rows = {{"video", "source", "mcq", "checkbox", "linear", "linear (x" + opt(display_scale) + ")", "summary"}};
    for (const auto& [video, sources] : rep.videos)
        for (const auto& [source, s] : sources)
            rows.push_back({video, source, opt(s.mcq), opt(s.checkbox), opt(s.linear), opt(s.linear, display_scale), opt(s.overall)});
    std::vector<std::vector<std::string>> methods = {{"method", "score"}};
    for (const auto& [source, u] : rep.methods) methods.push_back({source, opt(u)});
    std::string out = format_table(rows) + "\n" + format_table(methods);
    for (const auto& s : rep.skipped) out += "skipped: " + s + "\n";
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vsumm: training-free video summarization and evaluation"};
    app.require_subcommand(1);
    ConfigFlags flags;
    int jobs = 1;

    // sample-plan
    auto* plan_cmd = app.add_subcommand("sample-plan", "print the sampling plan for a video");
    Index plan_frames = 0;
    double plan_fps = 0, plan_target = 4.0;
    bool plan_json = false;
    plan_cmd->add_option("--frames", plan_frames, "total frames T")->required();
    plan_cmd->add_option("--fps", plan_fps, "input frame rate")->required();
    plan_cmd->add_option("--target-fps", plan_target, "target sampling rate");
    plan_cmd->add_flag("--json", plan_json, "print JSON instead of text");

    // per-video stages
    std::string in_path, out_path = "-", manifest_path;
    auto* reduce_cmd = app.add_subcommand("reduce", "sample and reduce a VEMB file into a stage document");
    auto* cluster_cmd = app.add_subcommand("cluster", "coarse-to-fine clustering of a reduced document");
    auto* partition_cmd = app.add_subcommand("partition", "smooth labels and refine partitions");
    auto* score_cmd = app.add_subcommand("score", "keyframes and importance scores");
    auto* summarize_cmd = app.add_subcommand("summarize", "usable and evaluation summaries");
    for (auto* cmd : {reduce_cmd, cluster_cmd, partition_cmd, score_cmd, summarize_cmd}) {
        cmd->add_option("input", in_path, cmd == reduce_cmd ? "VEMB file" : "stage document")->required();
        cmd->add_option("-o,--out", out_path, "output document (default stdout)");
        add_config_flags(cmd, flags);
    }
    summarize_cmd->add_option("--manifest", manifest_path, "dataset manifest (enables the evaluation summary)");

    // evaluate
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score evaluation summaries against a manifest");
    std::vector<std::string> inputs;
    std::string report_json, report_text;
    evaluate_cmd->add_option("summaries", inputs, "summary documents")->required();
    evaluate_cmd->add_option("--manifest", manifest_path, "dataset manifest")->required();
    evaluate_cmd->add_option("--report", report_json, "write the JSON report here");
    evaluate_cmd->add_option("--table", report_text, "write the text table here");
    evaluate_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    add_config_flags(evaluate_cmd, flags);

    // baseline
    auto* baseline_cmd = app.add_subcommand("baseline", "random summarizer scores for every manifest video");
    int repeats = 100;
    double budget = 0.15;
    std::uint64_t baseline_seed = 0;
    baseline_cmd->add_option("--manifest", manifest_path, "dataset manifest")->required();
    baseline_cmd->add_option("--repeats", repeats, "repeats per video")->check(CLI::PositiveNumber);
    baseline_cmd->add_option("--budget", budget, "summary budget as a fraction of T");
    baseline_cmd->add_option("--seed", baseline_seed, "base seed");
    baseline_cmd->add_option("--report", report_json, "write JSON here");

    // run
    auto* run_cmd = app.add_subcommand("run", "full pipeline over VEMB files, then evaluation");
    std::string out_dir = "out";
    run_cmd->add_option("embeddings", inputs, "VEMB files (video id = file stem)")->required();
    run_cmd->add_option("--manifest", manifest_path, "dataset manifest (omit to skip evaluation)");
    run_cmd->add_option("--out-dir", out_dir, "output directory");
    run_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    add_config_flags(run_cmd, flags);

    // survey
    auto* serve_cmd = app.add_subcommand("serve", "run the survey HTTP service");
    std::string survey_config;
    serve_cmd->add_option("--config", survey_config, "survey config JSON (env VSUMM_SURVEY_* overrides)");
    auto* survey_score_cmd = app.add_subcommand("survey-score", "score an answer log offline");
    std::string log_path, bank_path;
    double display_scale = 10.0;
    survey_score_cmd->add_option("log", log_path, "answer log (JSON lines)")->required();
    survey_score_cmd->add_option("--bank", bank_path, "question bank (default: question_bank.json beside the log)");
    survey_score_cmd->add_option("--report", report_json, "write JSON here");
    survey_score_cmd->add_option("--display-scale", display_scale, "scale for the linear display column");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (plan_cmd->parsed()) {
            const auto plan = plan_sampling(plan_frames, plan_fps, plan_target);
            if (plan_json) {
                write_json("-", {{"total_frames", plan.total_frames},
                                 {"snippet_length", plan.snippet_length},
                                 {"first_index", plan.first_index},
                                 {"count", plan.count()},
                                 {"achieved_fps", plan.achieved_fps()},
                                 {"indexes", plan.indexes}});
            } else {
                std::cout << "snippet_length=" << plan.snippet_length << "\ncount=" << plan.count() << "\nachieved_fps=" << plan.achieved_fps()
                          << "\nindexes=";
                for (std::size_t i = 0; i < plan.indexes.size(); ++i) std::cout << (i ? "," : "") << plan.indexes[i];
                std::cout << "\n";
            }
            return kOk;
        }
        if (reduce_cmd->parsed()) {
            const auto cfg = resolve_config(flags);
            Matrix rows;
            auto doc = sample_stage(read_embeddings(in_path), cfg, rows);
            reduce_stage(doc, rows, cfg);
            write_json(out_path, to_json(doc));
            return kOk;
        }
        if (cluster_cmd->parsed()) return doc_stage(in_path, out_path, flags, cluster_stage);
        if (partition_cmd->parsed()) return doc_stage(in_path, out_path, flags, partition_stage);
        if (score_cmd->parsed()) return doc_stage(in_path, out_path, flags, score_stage);
        if (summarize_cmd->parsed()) {
            std::optional<DatasetManifest> manifest;
            if (!manifest_path.empty()) manifest = read_manifest(manifest_path);
            return doc_stage(in_path, out_path, flags, [&](VideoDocument& doc, const PipelineConfig& cfg) {
                const ManifestVideo* video = nullptr;
                if (manifest) {
                    video = manifest->find(doc.meta.video_id);
                    if (!video) throw ValidationError("video '" + doc.meta.video_id + "' is not in the manifest");
                }
                summarize_stage(doc, cfg, video);
            });
        }
        if (evaluate_cmd->parsed()) {
            const auto cfg = resolve_config(flags);
            const auto manifest = read_manifest(manifest_path);
            std::vector<VideoDocument> docs;
            for (const auto& p : inputs) docs.push_back(read_document(p));
            emit_report(evaluate(docs, manifest, cfg, jobs), report_json, report_text);
            return kOk;
        }
        if (baseline_cmd->parsed()) {
            const auto manifest = read_manifest(manifest_path);
            std::vector<std::vector<std::string>> rows = {{"video", "budget", "random avg (%)", "random max (%)"}};
            json videos = json::array();
            std::vector<double> avg, max;
            for (const auto& v : manifest.videos) {
                if (v.user_summaries.empty()) throw ValidationError("video '" + v.meta.video_id + "' has no user summaries");
                const auto b = random_baseline(v, repeats, derive_seed(baseline_seed, v.meta.video_id), budget);
                rows.push_back({v.meta.video_id, std::to_string(b.budget), percent(b.avg), percent(b.max)});
                videos.push_back({{"video_id", v.meta.video_id}, {"f_avg", b.avg}, {"f_max", b.max}, {"budget_frames", b.budget}});
                avg.push_back(b.avg);
                max.push_back(b.max);
            }
            if (avg.empty()) throw ValidationError("manifest has no videos");
            rows.push_back({"mean", "", percent(dataset_score(avg, DatasetAggregate::Avg)), percent(dataset_score(max, DatasetAggregate::Avg))});
            std::cout << format_table(rows);
            if (!report_json.empty())
                write_json(report_json, {{"videos", videos},
                                         {"avg_f", dataset_score(avg, DatasetAggregate::Avg)},
                                         {"max_f", dataset_score(max, DatasetAggregate::Avg)},
                                         {"repeats", repeats},
                                         {"budget", budget},
                                         {"seed", baseline_seed}});
            return kOk;
        }
        if (run_cmd->parsed()) {
            const auto cfg = resolve_config(flags);
            std::optional<DatasetManifest> manifest;
            if (!manifest_path.empty()) manifest = read_manifest(manifest_path);
            std::vector<EmbeddingSet> sets;
            for (const auto& p : inputs) sets.push_back(read_embeddings(p));
            fs::create_directories(out_dir);
            write_json((fs::path(out_dir) / "run_manifest.json").string(), run_manifest(cfg, inputs, manifest_path, jobs));
            const auto result = run_pipeline(sets, cfg, manifest ? &*manifest : nullptr, jobs);
            for (const auto& doc : result.videos)
                write_json((fs::path(out_dir) / "summaries" / (doc.meta.video_id + ".json")).string(), to_json(doc));
            if (result.report)
                emit_report(*result.report, (fs::path(out_dir) / "report.json").string(), (fs::path(out_dir) / "report.txt").string());
            else
                std::cout << "wrote " << result.videos.size() << " summaries to " << out_dir << " (no manifest, evaluation skipped)\n";
            return kOk;
        }
        if (serve_cmd->parsed()) {
            const auto cfg = load_survey_config(survey_config.empty() ? std::string() : read_text_file(survey_config));
            if (cfg.corpus.empty()) throw ValidationError("survey config: corpus (question bank path) is required");
            SurveyService service(load_question_bank(read_text_file(cfg.corpus)), cfg.log, cfg.max_sets, cfg.seed);
            httplib::Server server;
            install_survey_routes(server, service, cfg.media);
            const auto colon = cfg.bind.rfind(':');
            const auto host = cfg.bind.substr(0, colon);
            const int port = std::stoi(cfg.bind.substr(colon + 1));
            std::cerr << "survey listening on " << cfg.bind << " (log " << cfg.log << ")\n";
            if (!server.listen(host, port)) throw IoError("cannot bind " + cfg.bind);
            return kOk;
        }
        if (survey_score_cmd->parsed()) {
            if (bank_path.empty()) bank_path = (fs::path(log_path).parent_path() / "question_bank.json").string();
            const auto bank = load_question_bank(read_text_file(bank_path));
            const auto rep = score_answers(bank, parse_answer_log(read_text_file(log_path)));
            std::cout << format_human_eval(rep, display_scale);
            if (!report_json.empty()) write_json(report_json, to_json(rep, display_scale));
            return kOk;
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kInternal;
}
