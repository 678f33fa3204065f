#include "reviewkit/schema.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "reviewkit/text.hpp"

namespace reviewkit {

// ── Enum names ──────────────────────────────────────────────────

const char* to_string(Decision d) {
    return d == Decision::Accept ? "accept" : "reject";
}

const char* to_string(InferenceMode m) {
    switch (m) {
        case InferenceMode::Fast: return "fast";
        case InferenceMode::Standard: return "standard";
        case InferenceMode::Best: return "best";
    }
    return "fast";
}

const char* to_string(QuestionFocus f) {
    switch (f) {
        case QuestionFocus::ResearchGap: return "research_gap";
        case QuestionFocus::InnovativeDirection: return "innovative_direction";
        case QuestionFocus::MethodologicalBreakthrough: return "methodological_breakthrough";
    }
    return "research_gap";
}

const char* to_string(FindingVerdict v) {
    switch (v) {
        case FindingVerdict::Supported: return "supported";
        case FindingVerdict::PartiallySupported: return "partially_supported";
        case FindingVerdict::Unsupported: return "unsupported";
    }
    return "unsupported";
}

const char* to_string(FindingConfidence c) {
    switch (c) {
        case FindingConfidence::Low: return "low";
        case FindingConfidence::Medium: return "medium";
        case FindingConfidence::High: return "high";
    }
    return "low";
}

Decision decision_from_string(const std::string& s) {
    if (s == "accept" || s == "Accept") return Decision::Accept;
    if (s == "reject" || s == "Reject") return Decision::Reject;
    throw Error(ErrorCode::FormatError, "unknown decision: " + s);
}

InferenceMode mode_from_string(const std::string& s) {
    if (s == "fast") return InferenceMode::Fast;
    if (s == "standard") return InferenceMode::Standard;
    if (s == "best") return InferenceMode::Best;
    throw Error(ErrorCode::FormatError, "unknown inference mode: " + s);
}

QuestionFocus focus_from_string(const std::string& s) {
    if (s == "research_gap") return QuestionFocus::ResearchGap;
    if (s == "innovative_direction") return QuestionFocus::InnovativeDirection;
    if (s == "methodological_breakthrough") return QuestionFocus::MethodologicalBreakthrough;
    throw Error(ErrorCode::FormatError, "unknown question focus: " + s);
}

FindingVerdict verdict_from_string(const std::string& s) {
    if (s == "supported") return FindingVerdict::Supported;
    if (s == "partially_supported") return FindingVerdict::PartiallySupported;
    if (s == "unsupported") return FindingVerdict::Unsupported;
    throw Error(ErrorCode::FormatError, "unknown verdict: " + s);
}

FindingConfidence confidence_from_string(const std::string& s) {
    if (s == "low") return FindingConfidence::Low;
    if (s == "medium") return FindingConfidence::Medium;
    if (s == "high") return FindingConfidence::High;
    throw Error(ErrorCode::FormatError, "unknown confidence level: " + s);
}

// ── Error metadata ──────────────────────────────────────────────

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::NonInteger: return "NonInteger";
        case ErrorCode::MissingSection: return "MissingSection";
        case ErrorCode::DuplicateSection: return "DuplicateSection";
        case ErrorCode::MalformedScore: return "MalformedScore";
        case ErrorCode::FormatError: return "FormatError";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::InputTooLong: return "InputTooLong";
        case ErrorCode::ProviderError: return "ProviderError";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::MockMiss: return "MockMiss";
        case ErrorCode::MalformedQuestions: return "MalformedQuestions";
        case ErrorCode::MalformedKeywords: return "MalformedKeywords";
        case ErrorCode::RetrievalUnavailable: return "RetrievalUnavailable";
        case ErrorCode::UncitedSource: return "UncitedSource";
        case ErrorCode::MalformedReport: return "MalformedReport";
        case ErrorCode::ReviewerParseFailure: return "ReviewerParseFailure";
        case ErrorCode::MalformedReliability: return "MalformedReliability";
        case ErrorCode::MalformedMeta: return "MalformedMeta";
        case ErrorCode::MalformedVerdict: return "MalformedVerdict";
        case ErrorCode::IdMismatch: return "IdMismatch";
        case ErrorCode::DegenerateRanking: return "DegenerateRanking";
        case ErrorCode::NoValidPairs: return "NoValidPairs";
        case ErrorCode::DegenerateX: return "DegenerateX";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::Usage: return "Usage";
    }
    return "Error";
}

ErrorClass error_class(ErrorCode code) {
    switch (code) {
        case ErrorCode::Usage:
        case ErrorCode::ConfigError:
            return ErrorClass::Usage;
        case ErrorCode::ProviderError:
        case ErrorCode::Timeout:
        case ErrorCode::MockMiss:
            return ErrorClass::Provider;
        default:
            return ErrorClass::Data;
    }
}

// ── Validation ──────────────────────────────────────────────────

PaperDocument PaperDocument::make(std::string id, std::string title, std::string body,
                                  std::string venue) {
    if (body.empty()) throw Error(ErrorCode::FormatError, "paper body is empty");
    if (id.empty()) throw Error(ErrorCode::FormatError, "paper id is empty");
    PaperDocument doc;
    doc.id = std::move(id);
    doc.title = std::move(title);
    doc.body = std::move(body);
    doc.venue = std::move(venue);
    doc.token_estimate = reviewkit::token_estimate(doc.body);
    return doc;
}

long body_token_estimate(const std::string& body) {
    return token_estimate(body);
}

namespace {

bool is_integral(double v) {
    return v == std::floor(v);
}

void check_fine_grained(const char* field, double value) {
    if (!is_integral(value)) {
        throw Error(ErrorCode::NonInteger, std::string(field) + " = " + format_number(value));
    }
    if (value < 1 || value > 4) {
        throw Error(ErrorCode::OutOfRange, std::string(field) + " = " + format_number(value));
    }
}

} // namespace

ScoreBlock validate_score_block(double rating, double soundness, double presentation,
                                double contribution, bool require_integer_rating) {
    if (rating < 1 || rating > 10) {
        throw Error(ErrorCode::OutOfRange, std::string("rating = ") + format_number(rating));
    }
    if (require_integer_rating && !is_integral(rating)) {
        throw Error(ErrorCode::NonInteger, std::string("rating = ") + format_number(rating));
    }
    check_fine_grained("soundness", soundness);
    check_fine_grained("presentation", presentation);
    check_fine_grained("contribution", contribution);
    ScoreBlock block;
    block.rating = rating;
    block.soundness = static_cast<int>(soundness);
    block.presentation = static_cast<int>(presentation);
    block.contribution = static_cast<int>(contribution);
    return block;
}

Review make_review(std::string summary, std::string strengths, std::string weaknesses,
                   std::string questions, ScoreBlock scores, std::optional<int> confidence) {
    Review r;
    r.summary = trim(summary);
    r.strengths = trim(strengths);
    r.weaknesses = trim(weaknesses);
    r.questions = trim(questions);
    if (r.strengths.empty()) throw Error(ErrorCode::FormatError, "review strengths empty");
    if (r.weaknesses.empty()) throw Error(ErrorCode::FormatError, "review weaknesses empty");
    r.scores = validate_score_block(scores.rating, scores.soundness, scores.presentation,
                                    scores.contribution);
    if (confidence) {
        if (*confidence < 1 || *confidence > 5) {
            throw Error(ErrorCode::OutOfRange,
                        "confidence = " + std::to_string(*confidence));
        }
        r.confidence = confidence;
    }
    return r;
}

void validate_review_set(const ReviewSet& set) {
    if (set.reviews.empty()) {
        throw Error(ErrorCode::FormatError, "review set has no reviews");
    }
    for (const auto& thread : set.rebuttal_threads) {
        if (thread.review_index < 0 ||
            thread.review_index >= static_cast<int>(set.reviews.size())) {
            throw Error(ErrorCode::FormatError,
                        "rebuttal review_index " + std::to_string(thread.review_index) +
                            " out of range");
        }
    }
}

MetaReview make_meta_review(MetaSections sections, ScoreBlock scores, Decision decision) {
    MetaReview meta;
    meta.sections.summary = trim(sections.summary);
    meta.sections.strengths = trim(sections.strengths);
    meta.sections.weaknesses = trim(sections.weaknesses);
    meta.sections.suggestions = trim(sections.suggestions);
    if (meta.sections.summary.empty() || meta.sections.strengths.empty() ||
        meta.sections.weaknesses.empty() || meta.sections.suggestions.empty()) {
        throw Error(ErrorCode::FormatError, "meta-review has an empty section");
    }
    meta.scores = validate_score_block(scores.rating, scores.soundness, scores.presentation,
                                       scores.contribution);
    meta.decision = decision;
    return meta;
}

void validate_trace(const ReasoningTrace& trace, std::optional<int> reviewer_count) {
    const bool has_z1 = trace.z1.has_value();
    const bool has_z2 = trace.z2.has_value();
    const bool has_z3 = trace.z3.has_value();
    bool ok = false;
    switch (trace.mode) {
        case InferenceMode::Fast: ok = !has_z1 && !has_z2 && !has_z3; break;
        case InferenceMode::Standard: ok = !has_z1 && has_z2 && has_z3; break;
        case InferenceMode::Best: ok = has_z1 && has_z2 && has_z3; break;
    }
    if (!ok) {
        throw Error(ErrorCode::FormatError,
                    std::string("trace stages inconsistent with mode ") +
                        to_string(trace.mode));
    }
    if (has_z2) {
        if (trace.z2->empty()) {
            throw Error(ErrorCode::FormatError, "trace z2 present but empty");
        }
        if (reviewer_count && static_cast<int>(trace.z2->size()) != *reviewer_count) {
            throw Error(ErrorCode::FormatError,
                        "trace z2 size " + std::to_string(trace.z2->size()) +
                            " != reviewer count " + std::to_string(*reviewer_count));
        }
    }
    if (has_z3) {
        if (trace.z3->finding_count() == 0) {
            throw Error(ErrorCode::FormatError, "reliability report has no findings");
        }
        if (trim(trace.z3->comprehensive_analysis).empty()) {
            throw Error(ErrorCode::FormatError, "reliability analysis empty");
        }
    }
}

void validate_record(const DatasetRecord& record) {
    if (record.paper.body.empty()) {
        throw Error(ErrorCode::FormatError, "record " + record.paper.id + ": empty body");
    }
    validate_review_set(record.human_reviews);
    for (const auto& review : record.human_reviews.reviews) {
        if (!is_integral(review.scores.rating)) {
            throw Error(ErrorCode::FormatError,
                        "record " + record.paper.id + ": per-reviewer rating not integral");
        }
    }
    if (record.decision != record.meta_review.decision) {
        throw Error(ErrorCode::FormatError,
                    "record " + record.paper.id + ": decision differs from meta-review decision");
    }
    if (record.trace) validate_trace(*record.trace);
}

// ── Markup rendering & parsing ──────────────────────────────────

namespace {

constexpr const char* kReviewSections[4] = {"## Summary", "## Strengths", "## Weaknesses",
                                            "## Questions"};
constexpr const char* kMetaSections[4] = {"## Summary", "## Strengths", "## Weaknesses",
                                          "## Suggestions"};
constexpr const char* kFenceOpen = "```scores";
constexpr const char* kFenceClose = "```";

struct ParsedMarkup {
    std::string sections[4];
    std::map<std::string, std::string> score_lines;  // key -> raw value
};

ParsedMarkup scan_markup(const std::string& text, const char* const section_names[4]) {
    ParsedMarkup out;
    const auto lines = split_lines(text);

    // Locate section headers in order, then the fenced score block.
    int header_line[4] = {-1, -1, -1, -1};
    int fence_open = -1, fence_close = -1;
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        for (int s = 0; s < 4; ++s) {
            if (line == section_names[s]) {
                if (header_line[s] >= 0) {
                    throw Error(ErrorCode::DuplicateSection, section_names[s] + 3);
                }
                header_line[s] = static_cast<int>(i);
            }
        }
        if (line == kFenceOpen && fence_open < 0) {
            fence_open = static_cast<int>(i);
        } else if (line == kFenceClose && fence_open >= 0 && fence_close < 0) {
            fence_close = static_cast<int>(i);
        }
    }
    int prev = -1;
    for (int s = 0; s < 4; ++s) {
        if (header_line[s] < 0 || header_line[s] < prev) {
            throw Error(ErrorCode::MissingSection, section_names[s] + 3);
        }
        prev = header_line[s];
    }
    if (fence_open < 0 || fence_close < 0 || fence_open < header_line[3]) {
        throw Error(ErrorCode::MalformedScore, "missing fenced score block");
    }

    for (int s = 0; s < 4; ++s) {
        const int begin = header_line[s] + 1;
        const int end = (s < 3) ? header_line[s + 1] : fence_open;
        std::string body;
        for (int i = begin; i < end; ++i) {
            body += lines[i];
            body += '\n';
        }
        out.sections[s] = trim(body);
    }

    for (int i = fence_open + 1; i < fence_close; ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw Error(ErrorCode::MalformedScore, "bad score line: " + line);
        }
        const std::string key = trim(line.substr(0, colon));
        const std::string value = trim(line.substr(colon + 1));
        if (out.score_lines.count(key)) {
            throw Error(ErrorCode::MalformedScore, "duplicate score line: " + key);
        }
        out.score_lines[key] = value;
    }
    return out;
}

double parse_score_value(const ParsedMarkup& parsed, const std::string& key) {
    auto it = parsed.score_lines.find(key);
    if (it == parsed.score_lines.end()) {
        throw Error(ErrorCode::MalformedScore, "missing " + key);
    }
    try {
        size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) {
            throw Error(ErrorCode::MalformedScore, key + ": " + it->second);
        }
        return v;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedScore, key + ": " + it->second);
    }
}

void render_sections(std::ostringstream& out, const char* const names[4],
                     const std::string* bodies[4]) {
    for (int s = 0; s < 4; ++s) {
        out << names[s] << '\n' << *bodies[s] << "\n\n";
    }
}

} // namespace

std::string render_review(const Review& review) {
    std::ostringstream out;
    const std::string* bodies[4] = {&review.summary, &review.strengths, &review.weaknesses,
                                    &review.questions};
    render_sections(out, kReviewSections, bodies);
    out << kFenceOpen << '\n';
    out << "Rating: " << format_number(review.scores.rating) << '\n';
    out << "Soundness: " << review.scores.soundness << '\n';
    out << "Presentation: " << review.scores.presentation << '\n';
    out << "Contribution: " << review.scores.contribution << '\n';
    if (review.confidence) out << "Confidence: " << *review.confidence << '\n';
    out << kFenceClose << '\n';
    return out.str();
}

Review parse_review_markup(const std::string& text) {
    const ParsedMarkup parsed = scan_markup(text, kReviewSections);
    const double rating = parse_score_value(parsed, "Rating");
    if (!is_integral(rating)) {
        throw Error(ErrorCode::MalformedScore, "rating must be an integer for a reviewer: " +
                                                   format_number(rating));
    }
    const double soundness = parse_score_value(parsed, "Soundness");
    const double presentation = parse_score_value(parsed, "Presentation");
    const double contribution = parse_score_value(parsed, "Contribution");
    std::optional<int> confidence;
    if (parsed.score_lines.count("Confidence")) {
        const double c = parse_score_value(parsed, "Confidence");
        if (!is_integral(c)) {
            throw Error(ErrorCode::MalformedScore, "confidence must be an integer");
        }
        confidence = static_cast<int>(c);
    }
    ScoreBlock scores;
    try {
        scores = validate_score_block(rating, soundness, presentation, contribution, true);
    } catch (const Error& e) {
        throw Error(ErrorCode::MalformedScore, e.what());
    }
    if (parsed.sections[1].empty()) throw Error(ErrorCode::MissingSection, "Strengths");
    if (parsed.sections[2].empty()) throw Error(ErrorCode::MissingSection, "Weaknesses");
    try {
        return make_review(parsed.sections[0], parsed.sections[1], parsed.sections[2],
                           parsed.sections[3], scores, confidence);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::OutOfRange) {
            throw Error(ErrorCode::MalformedScore, e.what());
        }
        throw;
    }
}

std::string render_meta_review(const MetaReview& meta) {
    std::ostringstream out;
    const std::string* bodies[4] = {&meta.sections.summary, &meta.sections.strengths,
                                    &meta.sections.weaknesses, &meta.sections.suggestions};
    render_sections(out, kMetaSections, bodies);
    out << kFenceOpen << '\n';
    out << "Rating: " << format_number(meta.scores.rating) << '\n';
    out << "Soundness: " << meta.scores.soundness << '\n';
    out << "Presentation: " << meta.scores.presentation << '\n';
    out << "Contribution: " << meta.scores.contribution << '\n';
    out << "Decision: " << (meta.decision == Decision::Accept ? "Accept" : "Reject") << '\n';
    out << kFenceClose << '\n';
    return out.str();
}

MetaReview parse_meta_markup(const std::string& text) {
    const ParsedMarkup parsed = scan_markup(text, kMetaSections);
    const double rating = parse_score_value(parsed, "Rating");
    const double soundness = parse_score_value(parsed, "Soundness");
    const double presentation = parse_score_value(parsed, "Presentation");
    const double contribution = parse_score_value(parsed, "Contribution");
    auto it = parsed.score_lines.find("Decision");
    if (it == parsed.score_lines.end()) {
        throw Error(ErrorCode::MalformedScore, "missing Decision");
    }
    const Decision decision = decision_from_string(it->second);
    ScoreBlock scores = validate_score_block(rating, soundness, presentation, contribution);
    MetaSections sections;
    sections.summary = parsed.sections[0];
    sections.strengths = parsed.sections[1];
    sections.weaknesses = parsed.sections[2];
    sections.suggestions = parsed.sections[3];
    return make_meta_review(sections, scores, decision);
}

} // namespace reviewkit
