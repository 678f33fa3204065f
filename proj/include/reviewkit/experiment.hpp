#pragma once

#include <map>
#include <string>
#include <vector>

#include "reviewkit/eval.hpp"
#include "reviewkit/pipeline.hpp"
#include "reviewkit/schema.hpp"

namespace reviewkit::experiment {

struct AttackSpec {
    std::string template_text;  // the malicious instruction
    enum class Position { End, AfterAbstract, RandomSection } position = Position::End;
    std::string marker_id;  // must appear nowhere in clean papers

    static AttackSpec load(const std::string& path);
};

const char* to_string(AttackSpec::Position position);
AttackSpec::Position position_from_string(const std::string& s);

// Inserts the template as one contiguous span at the requested position
// (random_section chosen by the seeded RNG). Removing the span recovers the
// original body byte-exactly.
PaperDocument inject_attack(const PaperDocument& paper, const AttackSpec& spec,
                            std::uint64_t seed);

struct DimensionDelta {
    double normal_mean = 0.0;
    double attack_mean = 0.0;
    double delta = 0.0;  // attack_mean - normal_mean
};

struct RobustnessReport {
    long paper_count = 0;
    // keys: rating, soundness, presentation, contribution
    std::map<std::string, DimensionDelta> dimensions;
    std::vector<std::pair<std::string, std::string>> excluded;  // id, reason
};

// Runs each paper clean and attacked under identical config and seed and
// reports per-dimension aggregate-score means and deltas.
RobustnessReport robustness_report(const std::vector<PaperDocument>& papers,
                                   const pipeline::RunConfig& cfg, const AttackSpec& spec,
                                   const gateway::Gateway& gw, const PromptLibrary& prompts,
                                   scholar::SearchClient* retrieval);

struct ScalingPoint {
    std::string series;  // "reasoning_path" | "reviewer"
    std::string label;   // "fast" | "standard" | "best" | "R=1".."R=6"
    double mean_tokens_out = 0.0;
    // metric name -> value; metrics that are undefined for a point (e.g.
    // constant predictions) are simply absent.
    std::map<std::string, double> metrics;
};

// Reasoning-path series: Fast/Standard/Best at the default reviewer count.
// Reviewer series: Standard with R = 1..6. One seed across all points.
std::vector<ScalingPoint> run_scaling(const std::vector<DatasetRecord>& bench,
                                      const pipeline::RunConfig& base_cfg,
                                      const gateway::Gateway& gw,
                                      const PromptLibrary& prompts,
                                      scholar::SearchClient* retrieval);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r = 0.0;  // Pearson correlation of x and y
};

// Ordinary least squares; throws DegenerateX when all x are equal.
LinearFit linear_fit(const std::vector<std::pair<double, double>>& points);

} // namespace reviewkit::experiment
