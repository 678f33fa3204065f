#include "reviewkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "reviewkit/text.hpp"

namespace reviewkit::eval {

GroundTruth GroundTruth::from_record(const DatasetRecord& record) {
    GroundTruth truth;
    truth.paper_id = record.paper.id;
    truth.decision = record.decision;
    const auto& reviews = record.human_reviews.reviews;
    if (reviews.empty()) {
        throw Error(ErrorCode::FormatError, "record has no reviews: " + record.paper.id);
    }
    for (const auto& review : reviews) {
        truth.mean_rating += review.scores.rating;
        truth.mean_soundness += review.scores.soundness;
        truth.mean_presentation += review.scores.presentation;
        truth.mean_contribution += review.scores.contribution;
    }
    const double n = static_cast<double>(reviews.size());
    truth.mean_rating /= n;
    truth.mean_soundness /= n;
    truth.mean_presentation /= n;
    truth.mean_contribution /= n;
    return truth;
}

const char* to_string(ScoreDimension dim) {
    switch (dim) {
        case ScoreDimension::Rating: return "rating";
        case ScoreDimension::Soundness: return "soundness";
        case ScoreDimension::Presentation: return "presentation";
        case ScoreDimension::Contribution: return "contribution";
    }
    return "rating";
}

ScoreDimension dimension_from_string(const std::string& s) {
    if (s == "rating") return ScoreDimension::Rating;
    if (s == "soundness") return ScoreDimension::Soundness;
    if (s == "presentation") return ScoreDimension::Presentation;
    if (s == "contribution") return ScoreDimension::Contribution;
    throw Error(ErrorCode::Usage, "unknown dimension: " + s);
}

double dimension_of(const Prediction& p, ScoreDimension dim) {
    switch (dim) {
        case ScoreDimension::Rating: return p.scores.rating;
        case ScoreDimension::Soundness: return p.scores.soundness;
        case ScoreDimension::Presentation: return p.scores.presentation;
        case ScoreDimension::Contribution: return p.scores.contribution;
    }
    return p.scores.rating;
}

double dimension_of(const GroundTruth& t, ScoreDimension dim) {
    switch (dim) {
        case ScoreDimension::Rating: return t.mean_rating;
        case ScoreDimension::Soundness: return t.mean_soundness;
        case ScoreDimension::Presentation: return t.mean_presentation;
        case ScoreDimension::Contribution: return t.mean_contribution;
    }
    return t.mean_rating;
}

namespace {

// Aligns predictions to ground truths by paper id; both sides must cover
// exactly the same id set.
std::vector<std::pair<const Prediction*, const GroundTruth*>> align(
    const std::vector<Prediction>& preds, const std::vector<GroundTruth>& truths) {
    std::map<std::string, const Prediction*> by_id;
    for (const auto& p : preds) {
        if (!by_id.emplace(p.paper_id, &p).second) {
            throw Error(ErrorCode::IdMismatch, "duplicate prediction for " + p.paper_id);
        }
    }
    if (preds.size() != truths.size()) {
        throw Error(ErrorCode::IdMismatch,
                    std::to_string(preds.size()) + " predictions vs " +
                        std::to_string(truths.size()) + " truths");
    }
    std::vector<std::pair<const Prediction*, const GroundTruth*>> aligned;
    aligned.reserve(truths.size());
    for (const auto& t : truths) {
        auto it = by_id.find(t.paper_id);
        if (it == by_id.end()) {
            throw Error(ErrorCode::IdMismatch, "no prediction for " + t.paper_id);
        }
        aligned.emplace_back(it->second, &t);
    }
    return aligned;
}

double f1_for(long tp, long fp, long fn) {
    const double denom = static_cast<double>(2 * tp + fp + fn);
    if (denom == 0.0) return 0.0;
    return 2.0 * static_cast<double>(tp) / denom;
}

std::vector<double> fractional_ranks(const std::vector<double>& values) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // Average rank for the tie group; ranks are 1-based.
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

} // namespace

ScoreMetrics score_task(const std::vector<Prediction>& preds,
                        const std::vector<GroundTruth>& truths, ScoreDimension dim,
                        F1Mode f1_mode) {
    if (truths.empty()) throw Error(ErrorCode::IdMismatch, "no ground truths");
    const auto aligned = align(preds, truths);

    ScoreMetrics metrics;
    for (const auto& [p, t] : aligned) {
        const double diff = dimension_of(*p, dim) - dimension_of(*t, dim);
        metrics.mse += diff * diff;
        metrics.mae += std::abs(diff);
    }
    const double n = static_cast<double>(aligned.size());
    metrics.mse /= n;
    metrics.mae /= n;

    if (dim == ScoreDimension::Rating) {
        long correct = 0, tp = 0, fp = 0, fn = 0, tn = 0;
        for (const auto& [p, t] : aligned) {
            const bool pred_accept = p->decision == Decision::Accept;
            const bool true_accept = t->decision == Decision::Accept;
            if (pred_accept == true_accept) ++correct;
            if (pred_accept && true_accept) ++tp;
            if (pred_accept && !true_accept) ++fp;
            if (!pred_accept && true_accept) ++fn;
            if (!pred_accept && !true_accept) ++tn;
        }
        metrics.decision_accuracy = static_cast<double>(correct) / n;
        if (f1_mode == F1Mode::BinaryAccept) {
            metrics.decision_f1 = f1_for(tp, fp, fn);
        } else {
            // Macro: average the Accept-positive and Reject-positive F1s.
            metrics.decision_f1 = (f1_for(tp, fp, fn) + f1_for(tn, fn, fp)) / 2.0;
        }
    }
    return metrics;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::IdMismatch, "length mismatch");
    }
    const size_t n = a.size();
    if (n < 2) throw Error(ErrorCode::DegenerateRanking, "need at least 2 items");

    const bool a_constant = std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; });
    const bool b_constant = std::all_of(b.begin(), b.end(), [&](double v) { return v == b[0]; });
    if (a_constant || b_constant) {
        throw Error(ErrorCode::DegenerateRanking,
                    std::string(a_constant ? "first" : "second") + " input is constant");
    }

    const auto ra = fractional_ranks(a);
    const auto rb = fractional_ranks(b);
    double mean_a = 0.0, mean_b = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mean_a += ra[i];
        mean_b += rb[i];
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);

    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double da = ra[i] - mean_a;
        const double db = rb[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    return cov / std::sqrt(var_a * var_b);
}

double spearman_ratings(const std::vector<Prediction>& preds,
                        const std::vector<GroundTruth>& truths, ScoreDimension dim) {
    const auto aligned = align(preds, truths);
    std::vector<double> a, b;
    a.reserve(aligned.size());
    b.reserve(aligned.size());
    for (const auto& [p, t] : aligned) {
        a.push_back(dimension_of(*p, dim));
        b.push_back(dimension_of(*t, dim));
    }
    return spearman(a, b);
}

double pairwise_selection(const std::vector<Prediction>& preds,
                          const std::vector<GroundTruth>& truths, ScoreDimension dim) {
    const auto aligned = align(preds, truths);
    if (aligned.size() < 2) throw Error(ErrorCode::NoValidPairs, "need at least 2 papers");

    double credit = 0.0;
    long valid_pairs = 0;
    for (size_t i = 0; i < aligned.size(); ++i) {
        for (size_t j = i + 1; j < aligned.size(); ++j) {
            const double truth_i = dimension_of(*aligned[i].second, dim);
            const double truth_j = dimension_of(*aligned[j].second, dim);
            if (truth_i == truth_j) continue;  // truth ties are excluded
            ++valid_pairs;
            const double pred_i = dimension_of(*aligned[i].first, dim);
            const double pred_j = dimension_of(*aligned[j].first, dim);
            if (pred_i == pred_j) {
                credit += 0.5;  // prediction tie
            } else if ((pred_i > pred_j) == (truth_i > truth_j)) {
                credit += 1.0;
            }
        }
    }
    if (valid_pairs == 0) {
        throw Error(ErrorCode::NoValidPairs, "all ground-truth pairs are tied");
    }
    return credit / static_cast<double>(valid_pairs);
}

// ── Judge protocol ──────────────────────────────────────────────

const char* to_string(JudgeDimension dim) {
    switch (dim) {
        case JudgeDimension::ConstructiveValue: return "constructive_value";
        case JudgeDimension::AnalyticalDepth: return "analytical_depth";
        case JudgeDimension::Plausibility: return "plausibility";
        case JudgeDimension::TechnicalAccuracy: return "technical_accuracy";
        case JudgeDimension::OverallJudgment: return "overall_judgment";
    }
    return "overall_judgment";
}

const char* to_string(JudgeOutcome outcome) {
    switch (outcome) {
        case JudgeOutcome::Win: return "win";
        case JudgeOutcome::Lose: return "lose";
        case JudgeOutcome::Tie: return "tie";
    }
    return "tie";
}

JudgeOutcome outcome_from_string(const std::string& s) {
    if (s == "win") return JudgeOutcome::Win;
    if (s == "lose") return JudgeOutcome::Lose;
    if (s == "tie") return JudgeOutcome::Tie;
    throw Error(ErrorCode::MalformedVerdict, "unknown outcome: " + s);
}

namespace {

constexpr JudgeDimension kJudgeDimensions[5] = {
    JudgeDimension::ConstructiveValue, JudgeDimension::AnalyticalDepth,
    JudgeDimension::Plausibility, JudgeDimension::TechnicalAccuracy,
    JudgeDimension::OverallJudgment,
};

constexpr const char* kJudgeLabels[5] = {
    "ConstructiveValue", "AnalyticalDepth", "Plausibility", "TechnicalAccuracy",
    "OverallJudgment",
};

std::vector<JudgeVerdict> parse_judge_response(const std::string& text, bool flipped) {
    std::map<std::string, std::string> fields;
    for (const auto& raw : split_lines(text)) {
        const std::string line = trim(raw);
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        fields[trim(line.substr(0, colon))] = to_lower(trim(line.substr(colon + 1)));
    }
    std::vector<JudgeVerdict> verdicts;
    for (int d = 0; d < 5; ++d) {
        auto it = fields.find(kJudgeLabels[d]);
        if (it == fields.end()) {
            throw Error(ErrorCode::MalformedVerdict,
                        std::string("missing dimension ") + kJudgeLabels[d]);
        }
        JudgeVerdict verdict;
        verdict.dimension = kJudgeDimensions[d];
        verdict.outcome = outcome_from_string(it->second);
        verdict.order_flipped = flipped;
        // De-flip so Win always means review_a preferred.
        if (flipped) {
            if (verdict.outcome == JudgeOutcome::Win) {
                verdict.outcome = JudgeOutcome::Lose;
            } else if (verdict.outcome == JudgeOutcome::Lose) {
                verdict.outcome = JudgeOutcome::Win;
            }
        }
        verdicts.push_back(verdict);
    }
    return verdicts;
}

} // namespace

std::vector<JudgeVerdict> judge_compare(const PaperDocument& paper, const Review& review_a,
                                        const Review& review_b, const gateway::Gateway& gw,
                                        const PromptLibrary& prompts,
                                        std::uint64_t rng_seed) {
    std::mt19937_64 rng(rng_seed);
    const bool flipped = (rng() & 1) != 0;
    const Review& first = flipped ? review_b : review_a;
    const Review& second = flipped ? review_a : review_b;

    gateway::ChatRequest req;
    req.stage = gateway::StageTag::Judge;
    req.system_prompt = prompts.system_prompt(gateway::StageTag::Judge);

    std::ostringstream user;
    user << "Compare Review A and Review B of the manuscript below. For each "
            "dimension answer win if Review A is better, lose if Review B is "
            "better, or tie.\n\nRespond with exactly five lines:\n";
    for (const char* label : kJudgeLabels) user << label << ": <win, lose, or tie>\n";
    user << "\n# Review A\n" << render_review(first) << "\n# Review B\n"
         << render_review(second) << "\n# Manuscript\nTitle: " << paper.title << "\n\n"
         << paper.body;
    req.user_prompt = user.str();

    std::string failure;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto resp = gw.complete(req);
        try {
            return parse_judge_response(resp.text, flipped);
        } catch (const Error& e) {
            if (error_class(e.code()) == ErrorClass::Provider) throw;
            failure = e.what();
            req.user_prompt += "\n\nYour previous response was rejected (" + failure +
                               "). Respond again following the required format exactly.";
        }
    }
    throw Error(ErrorCode::MalformedVerdict, failure);
}

WinRateTable aggregate_win_rates(const std::vector<LabeledVerdict>& verdicts) {
    WinRateTable table;
    for (const auto& lv : verdicts) {
        WinRateCell& cell = table[lv.system_pair][lv.verdict.dimension];
        switch (lv.verdict.outcome) {
            case JudgeOutcome::Win: ++cell.wins; break;
            case JudgeOutcome::Lose: ++cell.losses; break;
            case JudgeOutcome::Tie: ++cell.ties; break;
        }
    }
    return table;
}

} // namespace reviewkit::eval
