#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "reviewkit/dataset.hpp"
#include "reviewkit/eval.hpp"
#include "reviewkit/experiment.hpp"
#include "reviewkit/json_io.hpp"
#include "reviewkit/pipeline.hpp"
#include "reviewkit/synthesis.hpp"
#include "reviewkit/text.hpp"

namespace reviewkit::cli {

namespace {

namespace fs = std::filesystem;

// ── Layered configuration ───────────────────────────────────────
//
// Precedence: flags > environment > config file > built-in defaults.
// Every resolved key records its source for --explain-config.

struct TraceRow {
    std::string key;
    std::string value;
    std::string source;
};

struct AppConfig {
    gateway::ProviderConfig provider;
    bool has_provider = false;
    std::string prompts_dir;
    std::string scholar_fixtures;
    std::string scholar_base_url;
    std::string scholar_path = "/graph/v1/paper/search";
    std::string scholar_api_key_env;
    std::string out_dir = "out";
    pipeline::RunConfig run;
    bool degrade_to_standard = false;
    eval::F1Mode f1_mode = eval::F1Mode::BinaryAccept;
    std::vector<TraceRow> trace;
};

struct RawFlags {
    std::string config_path;
    std::string mode;
    int reviewers = 0;
    bool reviewers_set = false;
    long seed = 0;
    bool seed_set = false;
    int concurrency = 0;
    bool concurrency_set = false;
    std::string mock_script;
    std::string prompts_dir;
    std::string scholar_fixtures;
    std::string out_dir;
    bool degrade = false;
    bool degrade_set = false;
    std::string f1_mode;
};

std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? std::string(value) : std::string();
}

// Resolves one string key across flag / env / config file / default.
std::string resolve_string(AppConfig& config, const std::string& key,
                           const std::string& flag_value, const char* env_name,
                           const nlohmann::json* file, const std::string& file_pointer,
                           const std::string& fallback) {
    std::string value = fallback;
    std::string source = "default";
    if (file && !file_pointer.empty()) {
        const auto ptr = nlohmann::json::json_pointer(file_pointer);
        if (file->contains(ptr)) {
            const auto& node = file->at(ptr);
            value = node.is_string() ? node.get<std::string>() : node.dump();
            source = "config file";
        }
    }
    if (env_name) {
        const std::string env = env_or_empty(env_name);
        if (!env.empty()) {
            value = env;
            source = std::string("env ") + env_name;
        }
    }
    if (!flag_value.empty()) {
        value = flag_value;
        source = "flag";
    }
    config.trace.push_back({key, value, source});
    return value;
}

long resolve_long(AppConfig& config, const std::string& key, bool flag_set, long flag_value,
                  const char* env_name, const nlohmann::json* file,
                  const std::string& file_pointer, long fallback) {
    long value = fallback;
    std::string source = "default";
    if (file && !file_pointer.empty()) {
        const auto ptr = nlohmann::json::json_pointer(file_pointer);
        if (file->contains(ptr)) {
            value = file->at(ptr).get<long>();
            source = "config file";
        }
    }
    if (env_name) {
        const std::string env = env_or_empty(env_name);
        if (!env.empty()) {
            try {
                value = std::stol(env);
            } catch (const std::exception&) {
                throw Error(ErrorCode::ConfigError,
                            std::string(env_name) + " is not an integer: " + env);
            }
            source = std::string("env ") + env_name;
        }
    }
    if (flag_set) {
        value = flag_value;
        source = "flag";
    }
    config.trace.push_back({key, std::to_string(value), source});
    return value;
}

AppConfig resolve_config(const RawFlags& flags) {
    AppConfig config;

    std::string config_path = flags.config_path;
    if (config_path.empty()) config_path = env_or_empty("REVIEWKIT_CONFIG");
    nlohmann::json file;
    const nlohmann::json* file_ptr = nullptr;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            throw Error(ErrorCode::ConfigError, "config file not found: " + config_path);
        }
        try {
            in >> file;
        } catch (const std::exception& e) {
            throw Error(ErrorCode::ConfigError, config_path + ": " + e.what());
        }
        file_ptr = &file;
        config.trace.push_back({"config", config_path,
                                flags.config_path.empty() ? "env REVIEWKIT_CONFIG" : "flag"});
    }

    const std::string mode = resolve_string(config, "mode", flags.mode, "REVIEWKIT_MODE",
                                            file_ptr, "/defaults/mode", "standard");
    config.run.mode = mode_from_string(mode);
    config.run.reviewer_count = static_cast<int>(
        resolve_long(config, "reviewers", flags.reviewers_set, flags.reviewers,
                     "REVIEWKIT_REVIEWERS", file_ptr, "/defaults/reviewers", 4));
    if (config.run.reviewer_count < 1 || config.run.reviewer_count > 6) {
        throw Error(ErrorCode::Usage, "reviewers must be in [1,6], got " +
                                          std::to_string(config.run.reviewer_count));
    }
    config.run.seed = resolve_long(config, "seed", flags.seed_set, flags.seed,
                                   "REVIEWKIT_SEED", file_ptr, "/defaults/seed", 0);
    config.run.max_concurrency = static_cast<int>(
        resolve_long(config, "max_concurrency", flags.concurrency_set, flags.concurrency,
                     "REVIEWKIT_CONCURRENCY", file_ptr, "/defaults/max_concurrency", 1));
    if (config.run.max_concurrency < 1) {
        throw Error(ErrorCode::Usage, "max-concurrency must be >= 1");
    }

    if (file_ptr && file.contains("defaults")) {
        const auto& defaults = file["defaults"];
        if (defaults.contains("temperature")) {
            config.run.params.temperature = defaults["temperature"].get<double>();
        }
        if (defaults.contains("max_input_tokens")) {
            config.run.params.max_input_tokens = defaults["max_input_tokens"].get<long>();
        }
        if (defaults.contains("max_output_tokens")) {
            config.run.params.max_output_tokens = defaults["max_output_tokens"].get<long>();
        }
    }
    config.run.params.seed = config.run.seed;

    config.prompts_dir = resolve_string(config, "prompts_dir", flags.prompts_dir,
                                        "REVIEWKIT_PROMPTS", file_ptr, "/prompts_dir", "");
    config.scholar_fixtures =
        resolve_string(config, "scholar_fixtures", flags.scholar_fixtures,
                       "REVIEWKIT_SCHOLAR_FIXTURES", file_ptr, "/scholar/fixtures_dir", "");
    if (file_ptr && file.contains("scholar")) {
        const auto& scholar = file["scholar"];
        config.scholar_base_url = scholar.value("base_url", "");
        config.scholar_path = scholar.value("path", config.scholar_path);
        config.scholar_api_key_env = scholar.value("api_key_env", "");
    }
    config.out_dir = resolve_string(config, "out_dir", flags.out_dir, "REVIEWKIT_OUT",
                                    file_ptr, "/out_dir", "out");

    // Provider: --mock-script wins over the config file's provider block.
    const std::string mock_script =
        resolve_string(config, "mock_script", flags.mock_script, "REVIEWKIT_MOCK_SCRIPT",
                       file_ptr, "/provider/mock_script", "");
    if (!mock_script.empty()) {
        config.provider.kind = "mock";
        config.provider.mock_script_path = mock_script;
        config.has_provider = true;
    } else if (file_ptr && file.contains("provider")) {
        config.provider = gateway::ProviderConfig::from_json_text(file["provider"].dump());
        config.has_provider = true;
    }
    if (config.has_provider) {
        config.provider.params.temperature = config.run.params.temperature;
        config.provider.params.max_input_tokens = config.run.params.max_input_tokens;
        config.provider.params.max_output_tokens = config.run.params.max_output_tokens;
    }

    const std::string degrade =
        resolve_string(config, "degrade_to_standard",
                       flags.degrade_set ? (flags.degrade ? "true" : "false") : "",
                       "REVIEWKIT_DEGRADE", file_ptr, "/defaults/degrade_to_standard",
                       "false");
    config.degrade_to_standard = (degrade == "true" || degrade == "1");
    config.run.degrade_to_standard = config.degrade_to_standard;

    const std::string f1 = resolve_string(config, "f1_mode", flags.f1_mode, "REVIEWKIT_F1",
                                          file_ptr, "/defaults/f1_mode", "binary");
    if (f1 == "binary") {
        config.f1_mode = eval::F1Mode::BinaryAccept;
    } else if (f1 == "macro") {
        config.f1_mode = eval::F1Mode::Macro;
    } else {
        throw Error(ErrorCode::Usage, "f1 mode must be binary or macro");
    }
    return config;
}

void print_explain(const AppConfig& config) {
    std::cout << "configuration resolution (flags > env > config file > defaults):\n";
    for (const auto& row : config.trace) {
        std::cout << "  " << row.key << " = " << (row.value.empty() ? "(unset)" : row.value)
                  << "   [" << row.source << "]\n";
    }
}

// ── Runtime context assembly ────────────────────────────────────

struct Runtime {
    std::unique_ptr<gateway::Backend> backend;
    std::unique_ptr<gateway::RateLimiter> limiter;
    gateway::Gateway gw;
    PromptLibrary prompts = PromptLibrary::builtin();
    std::unique_ptr<scholar::SearchClient> retrieval;
};

Runtime make_runtime(const AppConfig& config, bool needs_gateway) {
    Runtime rt;
    if (needs_gateway) {
        if (!config.has_provider) {
            throw Error(ErrorCode::ConfigError,
                        "no provider configured: pass --mock-script or a --config with a "
                        "provider block");
        }
        rt.backend = gateway::make_backend(config.provider);
        if (config.provider.requests_per_minute > 0) {
            rt.limiter =
                std::make_unique<gateway::RateLimiter>(config.provider.requests_per_minute);
        }
        rt.gw.backend = rt.backend.get();
        rt.gw.retry = config.provider.retry;
        rt.gw.limiter = rt.limiter.get();
    }
    if (!config.prompts_dir.empty()) {
        rt.prompts = PromptLibrary::load(config.prompts_dir);
    }
    if (!config.scholar_fixtures.empty()) {
        rt.retrieval = std::make_unique<scholar::FixtureStore>(config.scholar_fixtures);
    } else if (!config.scholar_base_url.empty()) {
        scholar::HttpSearchClient::Config sc;
        sc.base_url = config.scholar_base_url;
        sc.path = config.scholar_path;
        sc.api_key_env = config.scholar_api_key_env;
        rt.retrieval = std::make_unique<scholar::HttpSearchClient>(sc);
    }
    return rt;
}

// ── Output helpers ──────────────────────────────────────────────

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << content;
    if (!out.good()) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::string csv_number(double value) {
    return format_number(value);
}

PaperDocument paper_from_json_object(const Json& j) {
    if (j.contains("reviews")) {
        return record_from_json(j).paper;
    }
    return PaperDocument::make(j.at("id").get<std::string>(),
                               j.at("title").get<std::string>(),
                               j.at("body_markdown").get<std::string>(),
                               j.value("venue", ""));
}

// A paper file is either one JSON object (paper fields or a full record) or
// an NDJSON dataset, in which case the first record's paper is used.
PaperDocument load_paper(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    try {
        return paper_from_json_object(Json::parse(text));
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        // fall through to NDJSON
    }
    const auto records = load_dataset(path);
    return records.front().paper;
}

std::vector<eval::Prediction> load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::vector<eval::Prediction> preds;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        try {
            const Json j = Json::parse(line);
            eval::Prediction p;
            p.paper_id = j.at("paper_id").get<std::string>();
            p.scores = validate_score_block(
                j.at("rating").get<double>(), j.at("soundness").get<double>(),
                j.at("presentation").get<double>(), j.at("contribution").get<double>());
            p.decision = decision_from_string(j.at("decision").get<std::string>());
            preds.push_back(std::move(p));
        } catch (const std::exception& e) {
            throw Error(ErrorCode::FormatError,
                        path + ":" + std::to_string(line_number) + ": " + e.what());
        }
    }
    if (preds.empty()) throw Error(ErrorCode::EmptyDataset, path);
    return preds;
}

// System review files for the judge: one review per paper per line.
std::map<std::string, Review> load_system_reviews(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::map<std::string, Review> reviews;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        try {
            const Json j = Json::parse(line);
            const std::string id = j.at("paper_id").get<std::string>();
            if (!reviews.emplace(id, review_from_json(j)).second) {
                throw Error(ErrorCode::FormatError, "duplicate paper_id " + id);
            }
        } catch (const Error& e) {
            throw Error(ErrorCode::FormatError,
                        path + ":" + std::to_string(line_number) + ": " + e.what());
        } catch (const std::exception& e) {
            throw Error(ErrorCode::FormatError,
                        path + ":" + std::to_string(line_number) + ": " + e.what());
        }
    }
    if (reviews.empty()) throw Error(ErrorCode::EmptyDataset, path);
    return reviews;
}

// ── Commands ────────────────────────────────────────────────────

int cmd_review(const AppConfig& config, const std::string& paper_path) {
    Runtime rt = make_runtime(config, true);
    const PaperDocument paper = load_paper(paper_path);
    const ReviewResult result =
        pipeline::run_review(paper, config.run, rt.gw, rt.prompts, rt.retrieval.get());

    write_file(fs::path(config.out_dir) / "result.json", result_to_json(result).dump(2) + "\n");
    write_file(fs::path(config.out_dir) / "report.md", result_to_markdown(result, paper));
    std::cout << "review complete: " << paper.id << " decision "
              << to_string(result.meta.decision) << " rating "
              << format_number(result.aggregate.rating) << " tokens_out "
              << result.tokens_out << "\n";
    return 0;
}

int cmd_stats(const AppConfig& config, const std::string& dataset_path) {
    const auto records = load_dataset(dataset_path);
    const StatsTable stats = dataset_stats(records);

    std::ostringstream csv;
    csv << "count,mean_tokens,mean_rating_per_paper,mean_rating_per_review,accept_rate_pct\n"
        << stats.count << ',' << csv_number(stats.mean_tokens) << ','
        << csv_number(stats.mean_rating_per_paper) << ','
        << csv_number(stats.mean_rating_per_review) << ','
        << csv_number(stats.accept_rate * 100.0) << '\n';
    write_file(fs::path(config.out_dir) / "stats.csv", csv.str());

    std::cout << "count: " << stats.count << "\nmean tokens: "
              << csv_number(stats.mean_tokens)
              << "\nmean rating (per paper): " << csv_number(stats.mean_rating_per_paper)
              << "\nmean rating (per review): " << csv_number(stats.mean_rating_per_review)
              << "\naccept rate: " << csv_number(stats.accept_rate * 100.0) << "%\n";
    return 0;
}

int cmd_synthesize(const AppConfig& config, const std::string& in_path,
                   const std::string& out_path, const std::string& report_path,
                   bool llm_check) {
    Runtime rt = make_runtime(config, true);
    if (!rt.retrieval) {
        throw Error(ErrorCode::ConfigError,
                    "synthesis needs retrieval: pass --scholar-fixtures or configure "
                    "scholar.base_url");
    }
    const auto records = load_dataset(in_path);

    synthesis::SynthesisOptions options;
    options.cfg = config.run;
    options.llm_consistency_check = llm_check;

    std::vector<DatasetRecord> emitted;
    const synthesis::SynthesisReport report =
        synthesis::synthesize_dataset(records, rt.gw, rt.prompts, *rt.retrieval, options,
                                      emitted);
    if (!emitted.empty()) save_dataset(out_path, emitted);

    Json rj;
    rj["input_count"] = report.input_count;
    rj["emitted_count"] = report.emitted_count;
    Json rejected = Json::array();
    for (const auto& r : report.rejected) {
        Json item;
        item["id"] = r.id;
        item["reason"] = synthesis::to_string(r.reason);
        item["detail"] = r.detail;
        rejected.push_back(item);
    }
    rj["rejected"] = rejected;
    rj["consistency_note"] = report.consistency_note;
    write_file(report_path, rj.dump(2) + "\n");

    std::cout << "synthesized " << report.emitted_count << "/" << report.input_count
              << " records (" << report.rejected.size() << " rejected)\n";
    return 0;
}

int cmd_evaluate(const AppConfig& config, const std::string& pred_path,
                 const std::string& bench_path, const std::string& dims_arg) {
    const auto preds = load_predictions(pred_path);
    const auto records = load_dataset(bench_path);
    std::vector<eval::GroundTruth> truths;
    truths.reserve(records.size());
    for (const auto& record : records) {
        truths.push_back(eval::GroundTruth::from_record(record));
    }

    std::vector<eval::ScoreDimension> dims;
    std::stringstream ss(dims_arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!trim(item).empty()) dims.push_back(eval::dimension_from_string(trim(item)));
    }
    if (dims.empty()) throw Error(ErrorCode::Usage, "no dimensions given");

    Json out;
    std::ostringstream csv;
    csv << "dimension,mse,mae,decision_accuracy,decision_f1,spearman,pairwise_accuracy\n";
    for (const auto dim : dims) {
        const auto metrics = eval::score_task(preds, truths, dim, config.f1_mode);
        Json dj;
        dj["mse"] = metrics.mse;
        dj["mae"] = metrics.mae;
        csv << to_string(dim) << ',' << csv_number(metrics.mse) << ','
            << csv_number(metrics.mae) << ',';
        if (metrics.decision_accuracy) {
            dj["decision_accuracy"] = *metrics.decision_accuracy;
            csv << csv_number(*metrics.decision_accuracy);
        }
        csv << ',';
        if (metrics.decision_f1) {
            dj["decision_f1"] = *metrics.decision_f1;
            csv << csv_number(*metrics.decision_f1);
        }
        csv << ',';
        try {
            const double rho = eval::spearman_ratings(preds, truths, dim);
            dj["spearman"] = rho;
            csv << csv_number(rho);
        } catch (const Error&) {
            dj["spearman"] = nullptr;
        }
        csv << ',';
        try {
            const double acc = eval::pairwise_selection(preds, truths, dim);
            dj["pairwise_accuracy"] = acc;
            csv << csv_number(acc);
        } catch (const Error&) {
            dj["pairwise_accuracy"] = nullptr;
        }
        csv << '\n';
        out[to_string(dim)] = dj;
    }
    write_file(fs::path(config.out_dir) / "metrics.json", out.dump(2) + "\n");
    write_file(fs::path(config.out_dir) / "metrics.csv", csv.str());
    std::cout << "evaluated " << preds.size() << " predictions over " << dims.size()
              << " dimension(s)\n";
    return 0;
}

int cmd_judge(const AppConfig& config, const std::string& a_path, const std::string& b_path,
              const std::string& bench_path) {
    Runtime rt = make_runtime(config, true);
    const auto records = load_dataset(bench_path);
    std::map<std::string, const PaperDocument*> papers;
    for (const auto& record : records) papers[record.paper.id] = &record.paper;

    const auto reviews_a = load_system_reviews(a_path);
    const auto reviews_b = load_system_reviews(b_path);
    if (reviews_a.size() != reviews_b.size()) {
        throw Error(ErrorCode::IdMismatch, "system files cover different paper sets");
    }

    const std::string pair_label =
        fs::path(a_path).stem().string() + "_vs_" + fs::path(b_path).stem().string();

    std::vector<eval::LabeledVerdict> labeled;
    std::ostringstream verdicts_out;
    long index = 0;
    for (const auto& [id, review_a] : reviews_a) {
        auto itb = reviews_b.find(id);
        if (itb == reviews_b.end()) {
            throw Error(ErrorCode::IdMismatch, "no b-side review for " + id);
        }
        auto itp = papers.find(id);
        if (itp == papers.end()) {
            throw Error(ErrorCode::IdMismatch, "paper not in bench: " + id);
        }
        const auto verdicts = eval::judge_compare(
            *itp->second, review_a, itb->second, rt.gw, rt.prompts,
            static_cast<std::uint64_t>(config.run.seed) + static_cast<std::uint64_t>(index));
        for (const auto& verdict : verdicts) {
            labeled.push_back({pair_label, verdict});
            Json vj;
            vj["paper_id"] = id;
            vj["dimension"] = to_string(verdict.dimension);
            vj["outcome"] = to_string(verdict.outcome);
            vj["order_flipped"] = verdict.order_flipped;
            verdicts_out << vj.dump() << '\n';
        }
        ++index;
    }
    write_file(fs::path(config.out_dir) / "verdicts.jsonl", verdicts_out.str());

    const auto table = eval::aggregate_win_rates(labeled);
    std::ostringstream csv;
    csv << "pair,dimension,n,win_pct,lose_pct,tie_pct\n";
    for (const auto& [pair, cells] : table) {
        for (const auto& [dim, cell] : cells) {
            csv << pair << ',' << to_string(dim) << ',' << cell.total() << ','
                << csv_number(cell.win_pct()) << ',' << csv_number(cell.lose_pct()) << ','
                << csv_number(cell.tie_pct()) << '\n';
        }
    }
    write_file(fs::path(config.out_dir) / "win_rates.csv", csv.str());
    std::cout << "judged " << index << " paper(s), " << labeled.size() << " verdicts\n";
    return 0;
}

int cmd_attack(const AppConfig& config, const std::string& bench_path,
               const std::string& spec_path) {
    Runtime rt = make_runtime(config, true);
    const auto records = load_dataset(bench_path);
    std::vector<PaperDocument> papers;
    papers.reserve(records.size());
    for (const auto& record : records) papers.push_back(record.paper);

    const auto spec = experiment::AttackSpec::load(spec_path);
    const auto report = experiment::robustness_report(papers, config.run, spec, rt.gw,
                                                      rt.prompts, rt.retrieval.get());

    Json rj;
    rj["paper_count"] = report.paper_count;
    Json dims;
    std::ostringstream csv;
    csv << "dimension,normal_mean,attack_mean,delta\n";
    for (const auto& [name, delta] : report.dimensions) {
        Json dj;
        dj["normal_mean"] = delta.normal_mean;
        dj["attack_mean"] = delta.attack_mean;
        dj["delta"] = delta.delta;
        dims[name] = dj;
        csv << name << ',' << csv_number(delta.normal_mean) << ','
            << csv_number(delta.attack_mean) << ',' << csv_number(delta.delta) << '\n';
    }
    rj["dimensions"] = dims;
    Json excluded = Json::array();
    for (const auto& [id, reason] : report.excluded) {
        Json ej;
        ej["id"] = id;
        ej["reason"] = reason;
        excluded.push_back(ej);
    }
    rj["excluded"] = excluded;
    write_file(fs::path(config.out_dir) / "robustness.json", rj.dump(2) + "\n");
    write_file(fs::path(config.out_dir) / "robustness.csv", csv.str());
    std::cout << "attack study over " << report.paper_count << " paper(s), rating delta "
              << csv_number(report.dimensions.at("rating").delta) << "\n";
    return 0;
}

int cmd_scale(const AppConfig& config, const std::string& bench_path) {
    Runtime rt = make_runtime(config, true);
    const auto bench = load_dataset(bench_path);
    const auto points =
        experiment::run_scaling(bench, config.run, rt.gw, rt.prompts, rt.retrieval.get());

    std::ostringstream csv;
    csv << "row,series,label,x_tokens,metric,value,slope,intercept,r\n";
    Json out = Json::array();
    for (const auto& point : points) {
        Json pj;
        pj["series"] = point.series;
        pj["label"] = point.label;
        pj["mean_tokens_out"] = point.mean_tokens_out;
        Json metrics;
        for (const auto& [name, value] : point.metrics) {
            metrics[name] = value;
            csv << "point," << point.series << ',' << point.label << ','
                << csv_number(point.mean_tokens_out) << ',' << name << ','
                << csv_number(value) << ",,,\n";
        }
        pj["metrics"] = metrics;
        out.push_back(pj);
    }

    // Fit rows per series and metric, over (mean tokens, metric value).
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, double>>>
        series_points;
    for (const auto& point : points) {
        for (const auto& [name, value] : point.metrics) {
            series_points[{point.series, name}].emplace_back(point.mean_tokens_out, value);
        }
    }
    for (const auto& [key, pts] : series_points) {
        if (pts.size() < 2) continue;
        try {
            const auto fit = experiment::linear_fit(pts);
            csv << "fit," << key.first << ",," << ',' << key.second << ",,"
                << csv_number(fit.slope) << ',' << csv_number(fit.intercept) << ','
                << csv_number(fit.r) << '\n';
        } catch (const Error&) {
            // constant x (degenerate) — no fit row
        }
    }
    write_file(fs::path(config.out_dir) / "scaling.csv", csv.str());
    write_file(fs::path(config.out_dir) / "scaling.json", out.dump(2) + "\n");
    std::cout << "scaling study: " << points.size() << " points\n";
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Structured multi-stage paper review pipeline"};
    app.require_subcommand(0, 1);

    RawFlags flags;
    bool explain = false;

    app.add_option("--config", flags.config_path, "Config file (JSON)");
    auto* mode_opt =
        app.add_option("--mode", flags.mode, "Inference mode: fast|standard|best");
    auto* reviewers_opt =
        app.add_option("--reviewers", flags.reviewers, "Simulated reviewer count (1-6)");
    auto* seed_opt = app.add_option("--seed", flags.seed, "Run seed");
    auto* conc_opt =
        app.add_option("--max-concurrency", flags.concurrency, "Parallel call cap");
    app.add_option("--mock-script", flags.mock_script, "Scripted mock backend (JSON)");
    app.add_option("--prompts", flags.prompts_dir, "Prompt asset directory");
    app.add_option("--scholar-fixtures", flags.scholar_fixtures,
                   "Offline retrieval fixture directory");
    app.add_option("--out", flags.out_dir, "Output directory");
    auto* degrade_opt = app.add_flag("--degrade-to-standard", flags.degrade,
                                     "Run standard mode when best-mode retrieval fails");
    app.add_option("--f1", flags.f1_mode, "Decision F1 mode: binary|macro");
    app.add_flag("--explain-config", explain, "Print config resolution and exit");

    std::string paper_path, dataset_path, in_path, out_path, report_path;
    std::string pred_path, bench_path, dims_arg = "rating";
    std::string a_path, b_path, spec_path;
    bool llm_check = false;

    auto* review = app.add_subcommand("review", "Review one paper");
    review->add_option("paper", paper_path, "Paper JSON or dataset file")->required();

    auto* stats = app.add_subcommand("stats", "Dataset statistics");
    stats->add_option("dataset", dataset_path, "Dataset (NDJSON)")->required();

    auto* synthesize = app.add_subcommand("synthesize", "Build training records");
    synthesize->add_option("--in", in_path, "Raw dataset (NDJSON)")->required();
    synthesize->add_option("--out", out_path, "Output dataset (NDJSON)")->required();
    synthesize->add_option("--report", report_path, "Synthesis report (JSON)")->required();
    synthesize->add_flag("--llm-consistency-check", llm_check,
                         "Also run the gateway consistency check");

    auto* evaluate = app.add_subcommand("evaluate", "Benchmark predictions");
    evaluate->add_option("--pred", pred_path, "Predictions (NDJSON)")->required();
    evaluate->add_option("--bench", bench_path, "Benchmark dataset (NDJSON)")->required();
    evaluate->add_option("--dims", dims_arg, "Comma-separated dimensions");

    auto* judge = app.add_subcommand("judge", "Pairwise review comparison");
    judge->add_option("--a", a_path, "System A reviews (NDJSON)")->required();
    judge->add_option("--b", b_path, "System B reviews (NDJSON)")->required();
    judge->add_option("--bench", bench_path, "Benchmark dataset (NDJSON)")->required();

    auto* attack = app.add_subcommand("attack", "Injection robustness study");
    attack->add_option("--bench", bench_path, "Benchmark dataset (NDJSON)")->required();
    attack->add_option("--spec", spec_path, "Attack spec (JSON)")->required();

    auto* scale = app.add_subcommand("scale", "Test-time scaling study");
    scale->add_option("--bench", bench_path, "Benchmark dataset (NDJSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    flags.reviewers_set = reviewers_opt->count() > 0;
    flags.seed_set = seed_opt->count() > 0;
    flags.concurrency_set = conc_opt->count() > 0;
    flags.degrade_set = degrade_opt->count() > 0;
    (void)mode_opt;

    try {
        const AppConfig config = resolve_config(flags);
        if (explain) {
            print_explain(config);
            return 0;
        }
        if (review->parsed()) return cmd_review(config, paper_path);
        if (stats->parsed()) return cmd_stats(config, dataset_path);
        if (synthesize->parsed()) {
            return cmd_synthesize(config, in_path, out_path, report_path, llm_check);
        }
        if (evaluate->parsed()) return cmd_evaluate(config, pred_path, bench_path, dims_arg);
        if (judge->parsed()) return cmd_judge(config, a_path, b_path, bench_path);
        if (attack->parsed()) return cmd_attack(config, bench_path, spec_path);
        if (scale->parsed()) return cmd_scale(config, bench_path);
        std::cerr << app.help() << std::endl;
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return static_cast<int>(e.cls());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 3;
    }
}

int cli_main(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("reviewkit");
    for (const auto& arg : args) argv.push_back(arg.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

} // namespace reviewkit::cli
