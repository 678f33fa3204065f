#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reviewkit/error.hpp"

namespace reviewkit {

// ── Enums ───────────────────────────────────────────────────────

enum class Decision { Accept, Reject };

enum class InferenceMode { Fast, Standard, Best };

enum class QuestionFocus {
    ResearchGap,
    InnovativeDirection,
    MethodologicalBreakthrough,
};

enum class FindingVerdict { Supported, PartiallySupported, Unsupported };

enum class FindingConfidence { Low, Medium, High };

const char* to_string(Decision d);
const char* to_string(InferenceMode m);
const char* to_string(QuestionFocus f);
const char* to_string(FindingVerdict v);
const char* to_string(FindingConfidence c);

Decision decision_from_string(const std::string& s);
InferenceMode mode_from_string(const std::string& s);
QuestionFocus focus_from_string(const std::string& s);
FindingVerdict verdict_from_string(const std::string& s);
FindingConfidence confidence_from_string(const std::string& s);

// ── Core domain types ───────────────────────────────────────────

// A manuscript as Markdown text plus identity and venue metadata.
struct PaperDocument {
    std::string id;
    std::string title;
    std::string body;  // Markdown
    std::string venue;
    long token_estimate = 0;

    // Recomputes token_estimate from body; throws on empty body.
    static PaperDocument make(std::string id, std::string title, std::string body,
                              std::string venue);
    bool operator==(const PaperDocument&) const = default;
};

// Overall rating in [1,10] plus the three fine-grained dimensions in [1,4].
// Per-reviewer ratings are integers; aggregates may be fractional.
struct ScoreBlock {
    double rating = 1.0;
    int soundness = 1;
    int presentation = 1;
    int contribution = 1;

    bool operator==(const ScoreBlock&) const = default;
};

// Throws OutOfRange / NonInteger; never clamps silently.
ScoreBlock validate_score_block(double rating, double soundness, double presentation,
                                double contribution, bool require_integer_rating = false);

// One reviewer's structured assessment.
struct Review {
    std::string summary;
    std::string strengths;
    std::string weaknesses;
    std::string questions;
    ScoreBlock scores;
    std::optional<int> confidence;  // [1,5]

    bool operator==(const Review&) const = default;
};

// Validates sections and scores; section text is stored trimmed so that
// render/parse round-trips are exact.
Review make_review(std::string summary, std::string strengths, std::string weaknesses,
                   std::string questions, ScoreBlock scores,
                   std::optional<int> confidence = std::nullopt);

struct RebuttalThread {
    int review_index = 0;
    std::string author_text;
    std::optional<std::string> reviewer_reply;

    bool operator==(const RebuttalThread&) const = default;
};

struct ReviewSet {
    std::vector<Review> reviews;
    std::vector<RebuttalThread> rebuttal_threads;

    bool operator==(const ReviewSet&) const = default;
};

// Throws unless there is at least one review and every rebuttal index
// points at an existing review.
void validate_review_set(const ReviewSet& set);

struct MetaSections {
    std::string summary;
    std::string strengths;
    std::string weaknesses;
    std::string suggestions;

    bool operator==(const MetaSections&) const = default;
};

struct MetaReview {
    MetaSections sections;
    ScoreBlock scores;
    Decision decision = Decision::Reject;

    bool operator==(const MetaReview&) const = default;
};

MetaReview make_meta_review(MetaSections sections, ScoreBlock scores, Decision decision);

// A review claim paired with verbatim paper evidence and a verdict.
struct ReliabilityFinding {
    std::string claim;
    std::string evidence;
    FindingVerdict verdict = FindingVerdict::Unsupported;
    FindingConfidence confidence = FindingConfidence::Low;

    bool operator==(const ReliabilityFinding&) const = default;
};

struct ReliabilityReport {
    std::vector<ReliabilityFinding> methodology_findings;
    std::vector<ReliabilityFinding> experimental_findings;
    std::string comprehensive_analysis;

    size_t finding_count() const {
        return methodology_findings.size() + experimental_findings.size();
    }
    bool operator==(const ReliabilityReport&) const = default;
};

struct ResearchQuestion {
    std::string text;
    QuestionFocus focus = QuestionFocus::ResearchGap;

    bool operator==(const ResearchQuestion&) const = default;
};

struct CandidatePaper {
    std::string external_id;
    std::string title;
    std::string abstract;
    int year = 0;
    int citation_count = 0;

    bool operator==(const CandidatePaper&) const = default;
};

struct RankedPaper {
    CandidatePaper candidate;
    double relevance = 0.0;
    int rank = 0;  // contiguous from 1

    bool operator==(const RankedPaper&) const = default;
};

struct NoveltyReport {
    std::vector<ResearchQuestion> questions;  // exactly 3, one per focus
    std::string paper_analysis;               // four "## ..." sections
    std::vector<std::string> answers;         // one per question
    std::vector<std::string> cited;           // subset of ranked external ids
    std::string verdict_summary;

    bool operator==(const NoveltyReport&) const = default;
};

// The ordered intermediate stages of one sampled reasoning chain.
struct ReasoningTrace {
    std::optional<NoveltyReport> z1;
    std::optional<std::vector<Review>> z2;
    std::optional<ReliabilityReport> z3;
    InferenceMode mode = InferenceMode::Fast;

    bool operator==(const ReasoningTrace&) const = default;
};

// Stage presence must match mode exactly: Fast none, Standard z2+z3,
// Best z1+z2+z3. When reviewer_count is given, |z2| must equal it.
void validate_trace(const ReasoningTrace& trace,
                    std::optional<int> reviewer_count = std::nullopt);

struct ReviewResult {
    MetaReview meta;
    ScoreBlock aggregate;  // reviewer-score aggregation; meta.scores kept alongside
    ReasoningTrace trace;
    long tokens_in = 0;
    long tokens_out = 0;
    long wall_clock_ms = 0;  // in-memory only, never serialized
    bool degraded_to_standard = false;
};

struct DatasetRecord {
    PaperDocument paper;
    ReviewSet human_reviews;
    MetaReview meta_review;
    Decision decision = Decision::Reject;
    std::optional<ReasoningTrace> trace;
    enum class Split { Train, Test } split = Split::Train;
};

// Full cross-field validation; throws FormatError with a reason.
void validate_record(const DatasetRecord& record);

// ── Review markup contract ──────────────────────────────────────
//
// Sections "## Summary", "## Strengths", "## Weaknesses", "## Questions"
// in that order, then a terminal fenced block:
//
//   ```scores
//   Rating: 6
//   Soundness: 3
//   Presentation: 3
//   Contribution: 2
//   Confidence: 4     (optional)
//   ```

std::string render_review(const Review& review);

// Inverse of render_review on its own output. Per-reviewer ratings must be
// integers; "Rating: 7.5" raises MalformedScore(rating).
Review parse_review_markup(const std::string& text);

// Meta-review markup uses "## Suggestions" as the fourth section and adds a
// "Decision: Accept|Reject" line to the fenced block. The rating may be
// fractional (a meta rating is an aggregate).
std::string render_meta_review(const MetaReview& meta);
MetaReview parse_meta_markup(const std::string& text);

// Recomputes the deterministic token estimate for a body.
long body_token_estimate(const std::string& body);

} // namespace reviewkit
