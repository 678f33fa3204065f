#include "reviewkit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "reviewkit/concurrency.hpp"
#include "reviewkit/text.hpp"

namespace reviewkit::experiment {

const char* to_string(AttackSpec::Position position) {
    switch (position) {
        case AttackSpec::Position::End: return "end";
        case AttackSpec::Position::AfterAbstract: return "after_abstract";
        case AttackSpec::Position::RandomSection: return "random_section";
    }
    return "end";
}

AttackSpec::Position position_from_string(const std::string& s) {
    if (s == "end") return AttackSpec::Position::End;
    if (s == "after_abstract") return AttackSpec::Position::AfterAbstract;
    if (s == "random_section") return AttackSpec::Position::RandomSection;
    throw Error(ErrorCode::ConfigError, "unknown attack position: " + s);
}

AttackSpec AttackSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open attack spec " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ConfigError, "attack spec " + path + ": " + e.what());
    }
    AttackSpec spec;
    spec.template_text = j.at("template").get<std::string>();
    spec.position = position_from_string(j.value("position", "end"));
    spec.marker_id = j.at("marker_id").get<std::string>();
    if (spec.template_text.empty()) {
        throw Error(ErrorCode::ConfigError, "attack template is empty");
    }
    if (spec.marker_id.empty()) {
        throw Error(ErrorCode::ConfigError, "attack marker_id is empty");
    }
    return spec;
}

PaperDocument inject_attack(const PaperDocument& paper, const AttackSpec& spec,
                            std::uint64_t seed) {
    const std::string span = "\n\n" + spec.template_text + "\n";

    size_t offset = paper.body.size();
    switch (spec.position) {
        case AttackSpec::Position::End:
            break;
        case AttackSpec::Position::AfterAbstract: {
            // After the paragraph that follows an "Abstract" heading line;
            // falls back to the end when no such heading exists.
            const std::string lower = to_lower(paper.body);
            size_t line_start = 0;
            while (line_start < lower.size()) {
                size_t line_end = lower.find('\n', line_start);
                if (line_end == std::string::npos) line_end = lower.size();
                if (lower[line_start] == '#' &&
                    lower.substr(line_start, line_end - line_start).find("abstract") !=
                        std::string::npos) {
                    const size_t para_end = paper.body.find("\n\n", line_end + 1);
                    offset = (para_end == std::string::npos) ? paper.body.size() : para_end;
                    break;
                }
                line_start = line_end + 1;
            }
            break;
        }
        case AttackSpec::Position::RandomSection: {
            // Candidate insertion points: the end of each heading line.
            std::vector<size_t> points;
            size_t line_start = 0;
            while (line_start < paper.body.size()) {
                size_t line_end = paper.body.find('\n', line_start);
                if (line_end == std::string::npos) line_end = paper.body.size();
                if (paper.body[line_start] == '#') points.push_back(line_end);
                line_start = line_end + 1;
            }
            if (!points.empty()) {
                std::mt19937_64 rng(seed);
                offset = points[static_cast<size_t>(rng() % points.size())];
            }
            break;
        }
    }

    std::string attacked = paper.body;
    attacked.insert(offset, span);
    return PaperDocument::make(paper.id, paper.title, attacked, paper.venue);
}

RobustnessReport robustness_report(const std::vector<PaperDocument>& papers,
                                   const pipeline::RunConfig& cfg, const AttackSpec& spec,
                                   const gateway::Gateway& gw, const PromptLibrary& prompts,
                                   scholar::SearchClient* retrieval) {
    if (papers.empty()) throw Error(ErrorCode::EmptyDataset, "no papers");
    for (const auto& paper : papers) {
        if (paper.body.find(spec.marker_id) != std::string::npos) {
            throw Error(ErrorCode::ConfigError,
                        "marker_id already present in clean paper " + paper.id);
        }
    }

    struct PairScores {
        bool ok = false;
        std::string reason;
        ScoreBlock normal;
        ScoreBlock attacked;
    };

    auto run_pair = [&](size_t index) -> PairScores {
        const PaperDocument& paper = papers[index];
        PairScores out;
        try {
            const ReviewResult clean = pipeline::run_review(paper, cfg, gw, prompts, retrieval);
            const PaperDocument hostile =
                inject_attack(paper, spec, static_cast<std::uint64_t>(cfg.seed));
            const ReviewResult attacked =
                pipeline::run_review(hostile, cfg, gw, prompts, retrieval);
            out.normal = clean.aggregate;
            out.attacked = attacked.aggregate;
            out.ok = true;
        } catch (const Error& e) {
            out.reason = e.what();
        }
        return out;
    };

    const auto pairs =
        parallel_map<PairScores>(papers.size(), cfg.max_concurrency, run_pair);

    RobustnessReport report;
    double normal_sum[4] = {0, 0, 0, 0};
    double attack_sum[4] = {0, 0, 0, 0};
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (!pairs[i].ok) {
            report.excluded.emplace_back(papers[i].id, pairs[i].reason);
            continue;
        }
        ++report.paper_count;
        const ScoreBlock& n = pairs[i].normal;
        const ScoreBlock& a = pairs[i].attacked;
        normal_sum[0] += n.rating;
        normal_sum[1] += n.soundness;
        normal_sum[2] += n.presentation;
        normal_sum[3] += n.contribution;
        attack_sum[0] += a.rating;
        attack_sum[1] += a.soundness;
        attack_sum[2] += a.presentation;
        attack_sum[3] += a.contribution;
    }
    if (report.paper_count == 0) {
        throw Error(ErrorCode::EmptyDataset, "every paper failed: " +
                                                 (report.excluded.empty()
                                                      ? std::string("unknown")
                                                      : report.excluded.front().second));
    }
    const char* names[4] = {"rating", "soundness", "presentation", "contribution"};
    for (int d = 0; d < 4; ++d) {
        DimensionDelta delta;
        delta.normal_mean = normal_sum[d] / static_cast<double>(report.paper_count);
        delta.attack_mean = attack_sum[d] / static_cast<double>(report.paper_count);
        delta.delta = delta.attack_mean - delta.normal_mean;
        report.dimensions[names[d]] = delta;
    }
    return report;
}

namespace {

ScalingPoint run_point(const std::vector<DatasetRecord>& bench,
                       const pipeline::RunConfig& cfg, const std::string& series,
                       const std::string& label, const gateway::Gateway& gw,
                       const PromptLibrary& prompts, scholar::SearchClient* retrieval) {
    std::vector<eval::Prediction> preds(bench.size());
    std::vector<long> tokens(bench.size());

    auto run_one = [&](size_t index) -> int {
        const ReviewResult result =
            pipeline::run_review(bench[index].paper, cfg, gw, prompts, retrieval);
        eval::Prediction pred;
        pred.paper_id = bench[index].paper.id;
        pred.scores = result.aggregate;
        pred.decision = result.meta.decision;
        preds[index] = std::move(pred);
        tokens[index] = result.tokens_out;
        return 0;
    };
    parallel_map<int>(bench.size(), cfg.max_concurrency, run_one);

    std::vector<eval::GroundTruth> truths;
    truths.reserve(bench.size());
    for (const auto& record : bench) truths.push_back(eval::GroundTruth::from_record(record));

    ScalingPoint point;
    point.series = series;
    point.label = label;
    double token_sum = 0.0;
    for (long t : tokens) token_sum += static_cast<double>(t);
    point.mean_tokens_out = token_sum / static_cast<double>(bench.size());

    const auto score = eval::score_task(preds, truths, eval::ScoreDimension::Rating);
    point.metrics["rating_mse"] = score.mse;
    point.metrics["rating_mae"] = score.mae;
    if (score.decision_accuracy) point.metrics["decision_accuracy"] = *score.decision_accuracy;
    if (score.decision_f1) point.metrics["decision_f1"] = *score.decision_f1;
    try {
        point.metrics["rating_spearman"] = eval::spearman_ratings(preds, truths);
    } catch (const Error&) {
        // undefined for constant predictions; leave absent
    }
    try {
        point.metrics["pairwise_accuracy"] = eval::pairwise_selection(preds, truths);
    } catch (const Error&) {
    }
    return point;
}

} // namespace

std::vector<ScalingPoint> run_scaling(const std::vector<DatasetRecord>& bench,
                                      const pipeline::RunConfig& base_cfg,
                                      const gateway::Gateway& gw,
                                      const PromptLibrary& prompts,
                                      scholar::SearchClient* retrieval) {
    if (bench.empty()) throw Error(ErrorCode::EmptyDataset, "no benchmark records");

    std::vector<ScalingPoint> points;
    // Reasoning-path series: one seed across all points so token differences
    // reflect configuration, not sampling noise.
    for (InferenceMode mode :
         {InferenceMode::Fast, InferenceMode::Standard, InferenceMode::Best}) {
        pipeline::RunConfig cfg = base_cfg;
        cfg.mode = mode;
        points.push_back(run_point(bench, cfg, "reasoning_path", to_string(mode), gw,
                                   prompts, retrieval));
    }
    // Reviewer series: Standard mode, R = 1..6.
    for (int r = 1; r <= 6; ++r) {
        pipeline::RunConfig cfg = base_cfg;
        cfg.mode = InferenceMode::Standard;
        cfg.reviewer_count = r;
        points.push_back(run_point(bench, cfg, "reviewer", "R=" + std::to_string(r), gw,
                                   prompts, retrieval));
    }
    return points;
}

LinearFit linear_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) {
        throw Error(ErrorCode::DegenerateX, "need at least 2 points");
    }
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [x, y] : points) {
        mean_x += x;
        mean_y += y;
    }
    const double n = static_cast<double>(points.size());
    mean_x /= n;
    mean_y /= n;

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mean_x) * (x - mean_x);
        syy += (y - mean_y) * (y - mean_y);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if (sxx == 0.0) throw Error(ErrorCode::DegenerateX, "all x values equal");

    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    fit.r = (syy == 0.0) ? 0.0 : sxy / std::sqrt(sxx * syy);
    return fit;
}

} // namespace reviewkit::experiment
