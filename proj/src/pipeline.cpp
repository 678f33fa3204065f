#include "reviewkit/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "reviewkit/concurrency.hpp"
#include "reviewkit/text.hpp"

namespace reviewkit::pipeline {

namespace {

using gateway::ChatRequest;
using gateway::StageTag;

// Headroom reserved for instructions around the paper body when truncating
// to the input budget.
constexpr long kPromptOverheadTokens = 2000;

constexpr const char* kReviewFormat =
    "Respond exactly in this format:\n"
    "## Summary\n<summary>\n\n## Strengths\n<strengths, one \"- \" bullet per point>\n\n"
    "## Weaknesses\n<weaknesses, one \"- \" bullet per point>\n\n"
    "## Questions\n<questions>\n\n"
    "```scores\nRating: <integer 1-10>\nSoundness: <integer 1-4>\n"
    "Presentation: <integer 1-4>\nContribution: <integer 1-4>\n"
    "Confidence: <integer 1-5>\n```\n";

constexpr const char* kMetaFormat =
    "Respond exactly in this format:\n"
    "## Summary\n<summary>\n\n## Strengths\n<strengths>\n\n"
    "## Weaknesses\n<weaknesses>\n\n## Suggestions\n<suggestions>\n\n"
    "```scores\nRating: <1-10, fractions allowed>\nSoundness: <integer 1-4>\n"
    "Presentation: <integer 1-4>\nContribution: <integer 1-4>\n"
    "Decision: <Accept or Reject>\n```\n";

std::string paper_block(const PaperDocument& paper) {
    return "# Manuscript\nTitle: " + paper.title + "\n\n" + paper.body;
}

std::string novelty_block(const NoveltyReport& novelty) {
    std::ostringstream out;
    out << "# Novelty Analysis\n" << novelty.verdict_summary << "\n";
    for (size_t i = 0; i < novelty.questions.size(); ++i) {
        out << "\nQ" << (i + 1) << ": " << novelty.questions[i].text << "\nA" << (i + 1)
            << ": " << novelty.answers[i] << "\n";
    }
    return out.str();
}

std::string reviews_block(const std::vector<Review>& reviews) {
    std::ostringstream out;
    out << "# Reviews\n";
    for (size_t i = 0; i < reviews.size(); ++i) {
        out << "\n## Reviewer " << (i + 1) << "\n" << render_review(reviews[i]);
    }
    return out.str();
}

std::string findings_block(const ReliabilityReport& report) {
    std::ostringstream out;
    out << "# Verification Findings\n";
    auto emit = [&](const char* label, const std::vector<ReliabilityFinding>& findings) {
        for (const auto& f : findings) {
            out << "- [" << label << ", " << to_string(f.verdict) << ", confidence "
                << to_string(f.confidence) << "] " << f.claim << "\n";
        }
    };
    emit("methodology", report.methodology_findings);
    emit("experimental", report.experimental_findings);
    out << "\nAnalysis: " << report.comprehensive_analysis << "\n";
    return out.str();
}

} // namespace

void validate_run_config(const RunConfig& cfg) {
    if (cfg.reviewer_count < 1 || cfg.reviewer_count > 6) {
        throw Error(ErrorCode::OutOfRange,
                    "reviewer count " + std::to_string(cfg.reviewer_count) + " not in [1,6]");
    }
    if (cfg.max_concurrency < 1) {
        throw Error(ErrorCode::OutOfRange, "max_concurrency must be >= 1");
    }
    if (cfg.params.max_output_tokens < 1) {
        throw Error(ErrorCode::OutOfRange, "max_output_tokens must be >= 1");
    }
}

std::vector<std::string> weakness_bullets(const Review& review) {
    std::vector<std::string> bullets;
    for (const auto& raw : split_lines(review.weaknesses)) {
        const std::string line = trim(raw);
        if (starts_with(line, "- ") || starts_with(line, "* ")) {
            const std::string text = trim(line.substr(2));
            if (!text.empty()) bullets.push_back(text);
            continue;
        }
        size_t pos = 0;
        while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos > 0 && pos + 1 < line.size() && line[pos] == '.' && line[pos + 1] == ' ') {
            const std::string text = trim(line.substr(pos + 2));
            if (!text.empty()) bullets.push_back(text);
        }
    }
    if (bullets.empty()) bullets.push_back(trim(review.weaknesses));
    return bullets;
}

std::vector<Review> stage_multidim(const PaperDocument& paper,
                                   const std::optional<NoveltyReport>& novelty,
                                   int reviewer_count, const RunConfig& cfg,
                                   const gateway::Gateway& gw, const PromptLibrary& prompts) {
    if (reviewer_count < 1 || reviewer_count > 6) {
        throw Error(ErrorCode::OutOfRange, "reviewer count not in [1,6]");
    }

    auto review_one = [&](size_t index) -> Review {
        ChatRequest req;
        req.stage = StageTag::Reviewer;
        req.system_prompt = prompts.system_prompt(StageTag::Reviewer);
        req.params = cfg.params;
        req.params.seed = cfg.seed + static_cast<long>(index);

        std::ostringstream user;
        user << "You are reviewer " << (index + 1) << " of " << reviewer_count
             << ". Review the manuscript below independently.\n\n"
             << kReviewFormat << "\n";
        if (novelty) user << novelty_block(*novelty) << "\n";
        user << paper_block(paper);
        req.user_prompt = user.str();

        std::string failure;
        for (int attempt = 0; attempt < 2; ++attempt) {
            const auto resp = gw.complete(req);
            try {
                return parse_review_markup(resp.text);
            } catch (const Error& e) {
                failure = e.what();
                req.user_prompt += "\n\nYour previous response was rejected (" + failure +
                                   "). Respond again following the required format exactly.";
            }
        }
        throw Error(ErrorCode::ReviewerParseFailure,
                    "reviewer " + std::to_string(index + 1) + ": " + failure);
    };

    return parallel_map<Review>(static_cast<size_t>(reviewer_count), cfg.max_concurrency,
                                review_one);
}

ReliabilityReport stage_reliability(const PaperDocument& paper,
                                    const std::vector<Review>& reviews, const RunConfig& cfg,
                                    const gateway::Gateway& gw, const PromptLibrary& prompts) {
    if (reviews.empty()) {
        throw Error(ErrorCode::MalformedReliability, "no reviews to verify");
    }

    std::vector<std::string> claims;
    for (const auto& review : reviews) {
        for (auto& bullet : weakness_bullets(review)) claims.push_back(std::move(bullet));
    }

    struct Categorized {
        ReliabilityFinding finding;
        bool methodology = true;
    };

    auto verify_one = [&](size_t index) -> Categorized {
        ChatRequest req;
        req.stage = StageTag::Reliability;
        req.system_prompt = prompts.system_prompt(StageTag::Reliability);
        req.params = cfg.params;
        req.params.seed = cfg.seed;
        req.user_prompt =
            "Verify the review claim below against the manuscript.\n\n"
            "Respond with exactly four lines:\n"
            "CATEGORY: <methodology or experimental>\n"
            "EVIDENCE: \"<verbatim quote from the manuscript>\"\n"
            "VERDICT: <supported, partially_supported, or unsupported>\n"
            "CONFIDENCE: <low, medium, or high>\n\n"
            "# Claim\n" +
            claims[index] + "\n\n" + paper_block(paper);

        auto parse = [&](const std::string& text) -> Categorized {
            std::string category, evidence, verdict, confidence;
            bool has_evidence = false;
            for (const auto& raw : split_lines(text)) {
                const std::string line = trim(raw);
                if (starts_with(line, "CATEGORY:")) {
                    category = trim(line.substr(9));
                } else if (starts_with(line, "EVIDENCE:")) {
                    evidence = trim(line.substr(9));
                    has_evidence = true;
                } else if (starts_with(line, "VERDICT:")) {
                    verdict = trim(line.substr(8));
                } else if (starts_with(line, "CONFIDENCE:")) {
                    confidence = trim(line.substr(11));
                }
            }
            if (category.empty() || verdict.empty() || confidence.empty() || !has_evidence) {
                throw Error(ErrorCode::MalformedReliability, "missing verification fields");
            }
            if (evidence.size() >= 2 && evidence.front() == '"' && evidence.back() == '"') {
                evidence = evidence.substr(1, evidence.size() - 2);
            }
            Categorized out;
            if (category == "methodology") {
                out.methodology = true;
            } else if (category == "experimental") {
                out.methodology = false;
            } else {
                throw Error(ErrorCode::MalformedReliability, "bad category: " + category);
            }
            out.finding.claim = claims[index];
            out.finding.evidence = evidence;
            out.finding.verdict = verdict_from_string(verdict);
            out.finding.confidence = confidence_from_string(confidence);
            // Evidence is checked locally, never trusted from the model.
            if (evidence.empty() || !contains_normalized(paper.body, evidence)) {
                out.finding.verdict = FindingVerdict::Unsupported;
                out.finding.confidence = FindingConfidence::Low;
            }
            return out;
        };

        std::string failure;
        for (int attempt = 0; attempt < 2; ++attempt) {
            const auto resp = gw.complete(req);
            try {
                return parse(resp.text);
            } catch (const Error& e) {
                if (error_class(e.code()) == ErrorClass::Provider) throw;
                failure = e.what();
                req.user_prompt += "\n\nYour previous response was rejected (" + failure +
                                   "). Respond again following the required format exactly.";
            }
        }
        throw Error(ErrorCode::MalformedReliability,
                    "claim " + std::to_string(index + 1) + ": " + failure);
    };

    const auto categorized = parallel_map<Categorized>(claims.size(), cfg.max_concurrency,
                                                       verify_one);

    ReliabilityReport report;
    for (const auto& c : categorized) {
        (c.methodology ? report.methodology_findings : report.experimental_findings)
            .push_back(c.finding);
    }

    // Comprehensive analysis over the collected findings.
    ChatRequest req;
    req.stage = StageTag::Reliability;
    req.system_prompt = prompts.system_prompt(StageTag::Reliability);
    req.params = cfg.params;
    req.params.seed = cfg.seed;
    req.user_prompt =
        "Write a comprehensive reliability analysis summarizing the verification "
        "findings below: overall evidence quality, recurring unsupported themes, and "
        "what the scores should weigh. Respond with plain text.\n\n" +
        findings_block(ReliabilityReport{report.methodology_findings,
                                         report.experimental_findings, "(pending)"}) +
        "\n" + paper_block(paper);

    std::string failure;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto resp = gw.complete(req);
        const std::string analysis = trim(resp.text);
        if (!analysis.empty()) {
            report.comprehensive_analysis = analysis;
            return report;
        }
        failure = "empty analysis";
        req.user_prompt += "\n\nYour previous response was empty. Respond with the analysis.";
    }
    throw Error(ErrorCode::MalformedReliability, failure);
}

namespace {

MetaReview meta_call(const std::string& user_prompt, const RunConfig& cfg,
                     const gateway::Gateway& gw, const PromptLibrary& prompts) {
    ChatRequest req;
    req.stage = StageTag::Meta;
    req.system_prompt = prompts.system_prompt(StageTag::Meta);
    req.params = cfg.params;
    req.params.seed = cfg.seed;
    req.user_prompt = user_prompt;

    std::string failure;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto resp = gw.complete(req);
        try {
            return parse_meta_markup(resp.text);
        } catch (const Error& e) {
            if (error_class(e.code()) == ErrorClass::Provider) throw;
            failure = e.what();
            req.user_prompt += "\n\nYour previous response was rejected (" + failure +
                               "). Respond again following the required format exactly.";
        }
    }
    throw Error(ErrorCode::MalformedMeta, failure);
}

} // namespace

MetaReview synthesize_meta(const PaperDocument& paper, const ReasoningTrace& trace,
                           const RunConfig& cfg, const gateway::Gateway& gw,
                           const PromptLibrary& prompts) {
    std::ostringstream user;
    user << "Write the final meta-review for the manuscript below";
    if (trace.z2) user << ", integrating the reviews";
    if (trace.z3) user << " and the verification findings";
    user << ".\n\n" << kMetaFormat << "\n";
    if (trace.z1) user << novelty_block(*trace.z1) << "\n";
    if (trace.z2) user << reviews_block(*trace.z2) << "\n";
    if (trace.z3) user << findings_block(*trace.z3) << "\n";
    user << paper_block(paper);
    return meta_call(user.str(), cfg, gw, prompts);
}

MetaReview synthesize_meta_from_record(const DatasetRecord& record,
                                       const ReasoningTrace& trace, const RunConfig& cfg,
                                       const gateway::Gateway& gw,
                                       const PromptLibrary& prompts) {
    std::ostringstream user;
    user << "Regenerate the meta-review for the manuscript below by integrating the "
            "original meta-review, the reviewer comments, and the verification "
            "outcomes. Keep the original decision (" +
                std::string(record.decision == Decision::Accept ? "Accept" : "Reject") +
                ") unless the evidence plainly contradicts it.\n\n"
         << kMetaFormat << "\n# Original Meta-Review\n"
         << render_meta_review(record.meta_review) << "\n";
    if (trace.z2) user << reviews_block(*trace.z2) << "\n";
    if (trace.z3) user << findings_block(*trace.z3) << "\n";
    user << paper_block(record.paper);
    return meta_call(user.str(), cfg, gw, prompts);
}

ScoreBlock aggregate_scores(const std::optional<std::vector<Review>>& reviews,
                            const MetaReview& meta) {
    if (!reviews || reviews->empty()) return meta.scores;

    double rating = 0.0, soundness = 0.0, presentation = 0.0, contribution = 0.0;
    for (const auto& review : *reviews) {
        rating += review.scores.rating;
        soundness += review.scores.soundness;
        presentation += review.scores.presentation;
        contribution += review.scores.contribution;
    }
    const double n = static_cast<double>(reviews->size());
    auto round_half_up = [](double v) {
        int rounded = static_cast<int>(std::floor(v + 0.5));
        return std::clamp(rounded, 1, 4);
    };
    ScoreBlock out;
    out.rating = rating / n;
    out.soundness = round_half_up(soundness / n);
    out.presentation = round_half_up(presentation / n);
    out.contribution = round_half_up(contribution / n);
    return out;
}

gateway::Gateway with_counter(const gateway::Gateway& gw, TokenCounter& tokens) {
    gateway::Gateway hooked = gw;
    auto inner = gw.on_response;
    hooked.on_response = [&tokens, inner](const gateway::ChatResponse& resp) {
        tokens.add(resp);
        if (inner) inner(resp);
    };
    return hooked;
}

ReviewResult run_review(const PaperDocument& paper, const RunConfig& cfg,
                        const gateway::Gateway& gw, const PromptLibrary& prompts,
                        scholar::SearchClient* retrieval) {
    validate_run_config(cfg);
    const auto start = std::chrono::steady_clock::now();

    // Keep the body within the input budget, leaving prompt headroom.
    const long budget = std::max<long>(1, cfg.params.max_input_tokens - kPromptOverheadTokens);
    PaperDocument working = paper;
    const std::string truncated = gateway::truncate_to_budget(paper.body, budget);
    if (truncated != paper.body) {
        working = PaperDocument::make(paper.id, paper.title, truncated, paper.venue);
    }

    ReviewResult result;
    TokenCounter tokens;
    const gateway::Gateway hooked = with_counter(gw, tokens);
    InferenceMode mode = cfg.mode;

    if (mode == InferenceMode::Best) {
        if (!retrieval) {
            if (!cfg.degrade_to_standard) {
                throw Error(ErrorCode::RetrievalUnavailable, "no retrieval client configured");
            }
            mode = InferenceMode::Standard;
            result.degraded_to_standard = true;
        } else {
            try {
                result.trace.z1 = scholar::run_novelty_stage(working, hooked, prompts,
                                                             *retrieval, cfg.params);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::RetrievalUnavailable && cfg.degrade_to_standard) {
                    mode = InferenceMode::Standard;
                    result.degraded_to_standard = true;
                } else {
                    throw;
                }
            }
        }
    }
    result.trace.mode = mode;

    if (mode != InferenceMode::Fast) {
        result.trace.z2 =
            stage_multidim(working, result.trace.z1, cfg.reviewer_count, cfg, hooked, prompts);
        result.trace.z3 = stage_reliability(working, *result.trace.z2, cfg, hooked, prompts);
    }

    result.meta = synthesize_meta(working, result.trace, cfg, hooked, prompts);
    result.aggregate = aggregate_scores(result.trace.z2, result.meta);

    result.tokens_in = tokens.in.load();
    result.tokens_out = tokens.out.load();
    result.wall_clock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    validate_trace(result.trace,
                   result.trace.z2 ? std::optional<int>(cfg.reviewer_count) : std::nullopt);
    return result;
}

} // namespace reviewkit::pipeline
