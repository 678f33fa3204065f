#include "reviewkit/synthesis.hpp"

#include <mutex>
#include <sstream>

#include "reviewkit/concurrency.hpp"
#include "reviewkit/text.hpp"

namespace reviewkit::synthesis {

namespace {

using gateway::ChatRequest;
using gateway::StageTag;

constexpr const char* kReviewFormat =
    "Respond exactly in this format:\n"
    "## Summary\n<summary>\n\n## Strengths\n<strengths>\n\n"
    "## Weaknesses\n<concrete, actionable suggestions, one \"- \" bullet per point>\n\n"
    "## Questions\n<questions>\n\n"
    "```scores\nRating: <integer 1-10>\nSoundness: <integer 1-4>\n"
    "Presentation: <integer 1-4>\nContribution: <integer 1-4>\n```\n";

} // namespace

const char* to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::LogicalInconsistency: return "logical_inconsistency";
        case RejectReason::IncompleteFields: return "incomplete_fields";
        case RejectReason::ParseFailure: return "parse_failure";
    }
    return "parse_failure";
}

std::vector<Review> reconstruct_reviews(const DatasetRecord& record,
                                        const gateway::Gateway& gw,
                                        const PromptLibrary& prompts,
                                        const pipeline::RunConfig& cfg) {
    const auto& reviews = record.human_reviews.reviews;

    auto rebuild_one = [&](size_t index) -> Review {
        const Review& source = reviews[index];

        std::ostringstream rebuttal;
        for (const auto& thread : record.human_reviews.rebuttal_threads) {
            if (thread.review_index != static_cast<int>(index)) continue;
            rebuttal << "Author response:\n" << thread.author_text << "\n";
            if (thread.reviewer_reply) {
                rebuttal << "Reviewer reply:\n" << *thread.reviewer_reply << "\n";
            }
            rebuttal << "\n";
        }
        const std::string rebuttal_text = rebuttal.str();

        ChatRequest req;
        req.stage = StageTag::Synthesis;
        req.system_prompt = prompts.system_prompt(StageTag::Synthesis);
        req.params = cfg.params;
        req.params.seed = cfg.seed + static_cast<long>(index);

        std::ostringstream user;
        user << "Rewrite the review below into a more instructive version. Use the "
                "rebuttal to turn addressed criticisms into concrete suggestions; keep "
                "technical depth, professional tone, and every citation from the "
                "original verbatim.\n\n"
             << kReviewFormat << "\n# Original Review\n"
             << render_review(source) << "\n# Rebuttal Thread\n"
             << (rebuttal_text.empty() ? "(none)\n" : rebuttal_text)
             << "\n# Manuscript Title\n"
             << record.paper.title << "\n";
        req.user_prompt = user.str();

        std::string failure;
        for (int attempt = 0; attempt < 2; ++attempt) {
            const auto resp = gw.complete(req);
            try {
                Review rebuilt = parse_review_markup(resp.text);
                // Scores stay anchored to the human judgment.
                rebuilt.scores = source.scores;
                rebuilt.confidence = source.confidence;
                return rebuilt;
            } catch (const Error& e) {
                if (error_class(e.code()) == ErrorClass::Provider) throw;
                failure = e.what();
                req.user_prompt += "\n\nYour previous response was rejected (" + failure +
                                   "). Respond again following the required format exactly.";
            }
        }
        throw Error(ErrorCode::ReviewerParseFailure,
                    "reconstruction " + std::to_string(index + 1) + ": " + failure);
    };

    return parallel_map<Review>(reviews.size(), cfg.max_concurrency, rebuild_one);
}

DatasetRecord build_training_record(const DatasetRecord& record, const gateway::Gateway& gw,
                                    const PromptLibrary& prompts,
                                    scholar::SearchClient& retrieval,
                                    const SynthesisOptions& options) {
    validate_record(record);

    ReasoningTrace trace;
    trace.mode = InferenceMode::Best;
    trace.z1 = scholar::run_novelty_stage(record.paper, gw, prompts, retrieval,
                                          options.cfg.params);
    trace.z2 = reconstruct_reviews(record, gw, prompts, options.cfg);
    trace.z3 = pipeline::stage_reliability(record.paper, *trace.z2, options.cfg, gw, prompts);

    DatasetRecord out = record;
    out.meta_review = pipeline::synthesize_meta_from_record(record, trace, options.cfg, gw,
                                                            prompts);
    out.trace = std::move(trace);
    return out;
}

namespace {

std::optional<std::string> first_incomplete_field(const DatasetRecord& record) {
    if (trim(record.paper.title).empty()) return "paper.title";
    if (trim(record.paper.venue).empty()) return "paper.venue";
    const auto check_review = [](const Review& r, const std::string& where)
        -> std::optional<std::string> {
        if (trim(r.summary).empty()) return where + ".summary";
        if (trim(r.strengths).empty()) return where + ".strengths";
        if (trim(r.weaknesses).empty()) return where + ".weaknesses";
        if (trim(r.questions).empty()) return where + ".questions";
        return std::nullopt;
    };
    const auto& meta = record.meta_review.sections;
    if (trim(meta.summary).empty()) return "meta.summary";
    if (trim(meta.strengths).empty()) return "meta.strengths";
    if (trim(meta.weaknesses).empty()) return "meta.weaknesses";
    if (trim(meta.suggestions).empty()) return "meta.suggestions";
    if (record.trace) {
        const auto& trace = *record.trace;
        if (trace.z1) {
            if (trim(trace.z1->paper_analysis).empty()) return "trace.z1.paper_analysis";
            if (trim(trace.z1->verdict_summary).empty()) return "trace.z1.verdict_summary";
            for (size_t i = 0; i < trace.z1->answers.size(); ++i) {
                if (trim(trace.z1->answers[i]).empty()) {
                    return "trace.z1.answers[" + std::to_string(i) + "]";
                }
            }
        }
        if (trace.z2) {
            for (size_t i = 0; i < trace.z2->size(); ++i) {
                if (auto field = check_review((*trace.z2)[i],
                                              "trace.z2[" + std::to_string(i) + "]")) {
                    return field;
                }
            }
        }
        if (trace.z3 && trim(trace.z3->comprehensive_analysis).empty()) {
            return "trace.z3.comprehensive_analysis";
        }
    }
    return std::nullopt;
}

} // namespace

QcVerdict quality_control(const DatasetRecord& record, const gateway::Gateway* gw,
                          const PromptLibrary* prompts) {
    QcVerdict verdict;
    if (!record.trace) {
        verdict.accepted = false;
        verdict.reason = RejectReason::IncompleteFields;
        verdict.detail = "trace missing";
        return verdict;
    }
    if (auto field = first_incomplete_field(record)) {
        verdict.accepted = false;
        verdict.reason = RejectReason::IncompleteFields;
        verdict.detail = "empty field: " + *field;
        return verdict;
    }

    const double rating = record.meta_review.scores.rating;
    if (record.decision != record.meta_review.decision) {
        verdict.accepted = false;
        verdict.reason = RejectReason::LogicalInconsistency;
        verdict.detail = "decision differs from meta-review decision";
        return verdict;
    }
    if (record.decision == Decision::Accept && rating < 5.0) {
        verdict.accepted = false;
        verdict.reason = RejectReason::LogicalInconsistency;
        verdict.detail = "accept with meta rating " + format_number(rating);
        return verdict;
    }
    if (record.decision == Decision::Reject && rating > 7.0) {
        verdict.accepted = false;
        verdict.reason = RejectReason::LogicalInconsistency;
        verdict.detail = "reject with meta rating " + format_number(rating);
        return verdict;
    }
    if (record.trace->z3 && record.trace->z3->finding_count() == 0) {
        verdict.accepted = false;
        verdict.reason = RejectReason::LogicalInconsistency;
        verdict.detail = "reliability report has no findings";
        return verdict;
    }

    // Optional additive LLM check.
    if (gw && prompts) {
        ChatRequest req;
        req.stage = StageTag::Judge;
        req.system_prompt = prompts->system_prompt(StageTag::Judge);
        req.user_prompt =
            "Check whether the reasoning chain and final evaluation below are "
            "logically coherent and non-contradictory. Respond with exactly one "
            "word: CONSISTENT or INCONSISTENT.\n\n# Meta-Review\n" +
            render_meta_review(record.meta_review) +
            "\n# Reliability Analysis\n" + record.trace->z3->comprehensive_analysis;
        try {
            const std::string answer = trim(gw->complete(req).text);
            if (answer.find("INCONSISTENT") != std::string::npos) {
                verdict.accepted = false;
                verdict.reason = RejectReason::LogicalInconsistency;
                verdict.detail = "gateway consistency check";
                return verdict;
            }
            if (answer.find("CONSISTENT") == std::string::npos) {
                verdict.accepted = false;
                verdict.reason = RejectReason::ParseFailure;
                verdict.detail = "unparseable consistency answer";
                return verdict;
            }
        } catch (const Error& e) {
            verdict.accepted = false;
            verdict.reason = RejectReason::ParseFailure;
            verdict.detail = e.what();
            return verdict;
        }
    }
    return verdict;
}

SynthesisReport synthesize_dataset(const std::vector<DatasetRecord>& records,
                                   const gateway::Gateway& gw, const PromptLibrary& prompts,
                                   scholar::SearchClient& retrieval,
                                   const SynthesisOptions& options,
                                   std::vector<DatasetRecord>& emitted) {
    SynthesisReport report;
    report.input_count = static_cast<long>(records.size());

    struct Outcome {
        std::optional<DatasetRecord> record;
        std::optional<RejectedRecord> rejection;
    };

    auto process = [&](size_t index) -> Outcome {
        const DatasetRecord& input = records[index];
        Outcome outcome;
        try {
            DatasetRecord built =
                build_training_record(input, gw, prompts, retrieval, options);
            const QcVerdict verdict = quality_control(
                built, options.llm_consistency_check ? &gw : nullptr,
                options.llm_consistency_check ? &prompts : nullptr);
            if (verdict.accepted) {
                validate_record(built);
                outcome.record = std::move(built);
            } else {
                outcome.rejection =
                    RejectedRecord{input.paper.id, verdict.reason, verdict.detail};
            }
        } catch (const Error& e) {
            outcome.rejection =
                RejectedRecord{input.paper.id, RejectReason::ParseFailure, e.what()};
        }
        return outcome;
    };

    const auto outcomes =
        parallel_map<Outcome>(records.size(), options.cfg.max_concurrency, process);

    for (const auto& outcome : outcomes) {
        if (outcome.record) {
            emitted.push_back(*outcome.record);
            ++report.emitted_count;
        } else if (outcome.rejection) {
            report.rejected.push_back(*outcome.rejection);
        }
    }
    return report;
}

} // namespace reviewkit::synthesis
