#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include "reviewkit/gateway.hpp"
#include "reviewkit/prompts.hpp"
#include "reviewkit/scholar.hpp"
#include "reviewkit/schema.hpp"

namespace reviewkit::pipeline {

struct RunConfig {
    InferenceMode mode = InferenceMode::Standard;
    int reviewer_count = 4;  // R in [1,6]
    gateway::GenerationParams params;
    int max_concurrency = 1;
    long seed = 0;
    // Best mode fails hard on retrieval loss unless this is set, in which
    // case the run downgrades to Standard and records it on the result.
    bool degrade_to_standard = false;
};

void validate_run_config(const RunConfig& cfg);

// Token accounting summed over all stage calls of one run; attach to a
// Gateway via with_counter.
struct TokenCounter {
    std::atomic<long> in{0};
    std::atomic<long> out{0};

    void add(const gateway::ChatResponse& resp) {
        in += resp.tokens_in;
        out += resp.tokens_out;
    }
};

// Copy of gw whose on_response hook also feeds the counter.
gateway::Gateway with_counter(const gateway::Gateway& gw, TokenCounter& tokens);

// Splits a weaknesses section into its bullets ("- ", "* ", "1. " lines);
// text without bullet markers counts as a single claim.
std::vector<std::string> weakness_bullets(const Review& review);

// Stage 2: R independent reviewer calls, each with an index-distinct prompt
// and seed, parsed with one repair re-prompt each.
std::vector<Review> stage_multidim(const PaperDocument& paper,
                                   const std::optional<NoveltyReport>& novelty,
                                   int reviewer_count, const RunConfig& cfg,
                                   const gateway::Gateway& gw, const PromptLibrary& prompts);

// Stage 3: one finding per weakness bullet across z2, with evidence quotes
// verified locally against the paper body (never trusted from the model);
// unverifiable evidence downgrades to unsupported/low.
ReliabilityReport stage_reliability(const PaperDocument& paper,
                                    const std::vector<Review>& reviews, const RunConfig& cfg,
                                    const gateway::Gateway& gw, const PromptLibrary& prompts);

MetaReview synthesize_meta(const PaperDocument& paper, const ReasoningTrace& trace,
                           const RunConfig& cfg, const gateway::Gateway& gw,
                           const PromptLibrary& prompts);

// Regenerates a meta-review for dataset synthesis, integrating the original
// meta-review, the reconstructed reviews, and verification outcomes.
MetaReview synthesize_meta_from_record(const DatasetRecord& record,
                                       const ReasoningTrace& trace, const RunConfig& cfg,
                                       const gateway::Gateway& gw,
                                       const PromptLibrary& prompts);

// Mean reviewer rating; fine-grained means rounded half-up and clamped to
// [1,4]. Without z2 (Fast mode) the meta scores pass through unchanged.
ScoreBlock aggregate_scores(const std::optional<std::vector<Review>>& reviews,
                            const MetaReview& meta);

// Full chain with mode gating: Fast none, Standard z2+z3, Best z1+z2+z3.
ReviewResult run_review(const PaperDocument& paper, const RunConfig& cfg,
                        const gateway::Gateway& gw, const PromptLibrary& prompts,
                        scholar::SearchClient* retrieval);

} // namespace reviewkit::pipeline
