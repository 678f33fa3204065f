#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reviewkit/gateway.hpp"
#include "reviewkit/prompts.hpp"
#include "reviewkit/schema.hpp"

namespace reviewkit::eval {

struct Prediction {
    std::string paper_id;
    ScoreBlock scores;
    Decision decision = Decision::Reject;
};

// Per-dimension means of the human reviews, cached at load time.
struct GroundTruth {
    std::string paper_id;
    double mean_rating = 0.0;
    double mean_soundness = 0.0;
    double mean_presentation = 0.0;
    double mean_contribution = 0.0;
    Decision decision = Decision::Reject;

    static GroundTruth from_record(const DatasetRecord& record);
};

enum class ScoreDimension { Rating, Soundness, Presentation, Contribution };

const char* to_string(ScoreDimension dim);
ScoreDimension dimension_from_string(const std::string& s);

double dimension_of(const Prediction& p, ScoreDimension dim);
double dimension_of(const GroundTruth& t, ScoreDimension dim);

enum class F1Mode { BinaryAccept, Macro };

struct ScoreMetrics {
    double mse = 0.0;
    double mae = 0.0;
    // Present only for the rating dimension.
    std::optional<double> decision_accuracy;
    std::optional<double> decision_f1;
};

// MSE/MAE on the chosen dimension against ground-truth means; decision
// accuracy and F1 (Accept positive) only for dimension = rating.
ScoreMetrics score_task(const std::vector<Prediction>& preds,
                        const std::vector<GroundTruth>& truths, ScoreDimension dim,
                        F1Mode f1_mode = F1Mode::BinaryAccept);

// Spearman rank correlation with fractional ranks for ties. Throws
// DegenerateRanking when either side is constant; never silently 0.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Id-aligned convenience over predicted vs ground-truth ratings.
double spearman_ratings(const std::vector<Prediction>& preds,
                        const std::vector<GroundTruth>& truths,
                        ScoreDimension dim = ScoreDimension::Rating);

// Pairwise selection accuracy over all unordered pairs with unequal
// ground-truth means: prediction ties earn 0.5, truth ties are excluded.
// Throws NoValidPairs when every pair is truth-tied.
double pairwise_selection(const std::vector<Prediction>& preds,
                          const std::vector<GroundTruth>& truths,
                          ScoreDimension dim = ScoreDimension::Rating);

// ── LLM-as-judge protocol ───────────────────────────────────────

enum class JudgeDimension {
    ConstructiveValue,
    AnalyticalDepth,
    Plausibility,
    TechnicalAccuracy,
    OverallJudgment,
};

enum class JudgeOutcome { Win, Lose, Tie };

const char* to_string(JudgeDimension dim);
const char* to_string(JudgeOutcome outcome);
JudgeOutcome outcome_from_string(const std::string& s);

struct JudgeVerdict {
    JudgeDimension dimension = JudgeDimension::OverallJudgment;
    JudgeOutcome outcome = JudgeOutcome::Tie;
    bool order_flipped = false;

    bool operator==(const JudgeVerdict&) const = default;
};

// Presents the two reviews in an order randomized by the seeded RNG,
// records the flip, and de-flips outcomes before returning so Win always
// means review_a preferred. Exactly five verdicts, one per dimension.
std::vector<JudgeVerdict> judge_compare(const PaperDocument& paper, const Review& review_a,
                                        const Review& review_b, const gateway::Gateway& gw,
                                        const PromptLibrary& prompts, std::uint64_t rng_seed);

struct WinRateCell {
    long wins = 0;
    long losses = 0;
    long ties = 0;

    long total() const { return wins + losses + ties; }
    double win_pct() const { return 100.0 * static_cast<double>(wins) / total(); }
    double lose_pct() const { return 100.0 * static_cast<double>(losses) / total(); }
    double tie_pct() const { return 100.0 - win_pct() - lose_pct(); }
};

struct LabeledVerdict {
    std::string system_pair;  // e.g. "ours_vs_baseline"
    JudgeVerdict verdict;
};

using WinRateTable = std::map<std::string, std::map<JudgeDimension, WinRateCell>>;

WinRateTable aggregate_win_rates(const std::vector<LabeledVerdict>& verdicts);

} // namespace reviewkit::eval
