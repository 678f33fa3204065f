#include "reviewkit/json_io.hpp"

#include <sstream>

#include "reviewkit/text.hpp"

namespace reviewkit {

namespace {

Json scores_to_json(const ScoreBlock& s) {
    Json j;
    j["rating"] = s.rating;
    j["soundness"] = s.soundness;
    j["presentation"] = s.presentation;
    j["contribution"] = s.contribution;
    return j;
}

ScoreBlock scores_from_json(const Json& j, bool require_integer_rating = false) {
    return validate_score_block(j.at("rating").get<double>(),
                                j.at("soundness").get<double>(),
                                j.at("presentation").get<double>(),
                                j.at("contribution").get<double>(), require_integer_rating);
}

Json finding_to_json(const ReliabilityFinding& f) {
    Json j;
    j["claim"] = f.claim;
    j["evidence"] = f.evidence;
    j["verdict"] = to_string(f.verdict);
    j["confidence"] = to_string(f.confidence);
    return j;
}

ReliabilityFinding finding_from_json(const Json& j) {
    ReliabilityFinding f;
    f.claim = j.at("claim").get<std::string>();
    f.evidence = j.at("evidence").get<std::string>();
    f.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    f.confidence = confidence_from_string(j.at("confidence").get<std::string>());
    return f;
}

} // namespace

Json review_to_json(const Review& review) {
    Json j;
    j["summary"] = review.summary;
    j["strengths"] = review.strengths;
    j["weaknesses"] = review.weaknesses;
    j["questions"] = review.questions;
    j["rating"] = review.scores.rating;
    j["soundness"] = review.scores.soundness;
    j["presentation"] = review.scores.presentation;
    j["contribution"] = review.scores.contribution;
    if (review.confidence) j["confidence"] = *review.confidence;
    return j;
}

Review review_from_json(const Json& j) {
    ScoreBlock scores = validate_score_block(
        j.at("rating").get<double>(), j.at("soundness").get<double>(),
        j.at("presentation").get<double>(), j.at("contribution").get<double>(), true);
    std::optional<int> confidence;
    if (j.contains("confidence") && !j["confidence"].is_null()) {
        confidence = j["confidence"].get<int>();
    }
    return make_review(j.at("summary").get<std::string>(),
                       j.at("strengths").get<std::string>(),
                       j.at("weaknesses").get<std::string>(),
                       j.at("questions").get<std::string>(), scores, confidence);
}

Json meta_to_json(const MetaReview& meta) {
    Json j;
    j["summary"] = meta.sections.summary;
    j["strengths"] = meta.sections.strengths;
    j["weaknesses"] = meta.sections.weaknesses;
    j["suggestions"] = meta.sections.suggestions;
    j["rating"] = meta.scores.rating;
    j["soundness"] = meta.scores.soundness;
    j["presentation"] = meta.scores.presentation;
    j["contribution"] = meta.scores.contribution;
    j["decision"] = to_string(meta.decision);
    return j;
}

MetaReview meta_from_json(const Json& j) {
    MetaSections sections;
    sections.summary = j.at("summary").get<std::string>();
    sections.strengths = j.at("strengths").get<std::string>();
    sections.weaknesses = j.at("weaknesses").get<std::string>();
    sections.suggestions = j.at("suggestions").get<std::string>();
    ScoreBlock scores = scores_from_json(j);
    Decision decision = decision_from_string(j.at("decision").get<std::string>());
    return make_meta_review(sections, scores, decision);
}

Json novelty_to_json(const NoveltyReport& report) {
    Json j;
    Json questions = Json::array();
    for (const auto& q : report.questions) {
        Json qj;
        qj["text"] = q.text;
        qj["focus"] = to_string(q.focus);
        questions.push_back(qj);
    }
    j["questions"] = questions;
    j["paper_analysis"] = report.paper_analysis;
    j["answers"] = report.answers;
    j["cited"] = report.cited;
    j["verdict_summary"] = report.verdict_summary;
    return j;
}

NoveltyReport novelty_from_json(const Json& j) {
    NoveltyReport report;
    for (const auto& qj : j.at("questions")) {
        ResearchQuestion q;
        q.text = qj.at("text").get<std::string>();
        q.focus = focus_from_string(qj.at("focus").get<std::string>());
        report.questions.push_back(q);
    }
    report.paper_analysis = j.at("paper_analysis").get<std::string>();
    report.answers = j.at("answers").get<std::vector<std::string>>();
    report.cited = j.at("cited").get<std::vector<std::string>>();
    report.verdict_summary = j.at("verdict_summary").get<std::string>();
    return report;
}

Json reliability_to_json(const ReliabilityReport& report) {
    Json j;
    Json methodology = Json::array();
    for (const auto& f : report.methodology_findings) methodology.push_back(finding_to_json(f));
    Json experimental = Json::array();
    for (const auto& f : report.experimental_findings) experimental.push_back(finding_to_json(f));
    j["methodology_findings"] = methodology;
    j["experimental_findings"] = experimental;
    j["comprehensive_analysis"] = report.comprehensive_analysis;
    return j;
}

ReliabilityReport reliability_from_json(const Json& j) {
    ReliabilityReport report;
    for (const auto& fj : j.at("methodology_findings")) {
        report.methodology_findings.push_back(finding_from_json(fj));
    }
    for (const auto& fj : j.at("experimental_findings")) {
        report.experimental_findings.push_back(finding_from_json(fj));
    }
    report.comprehensive_analysis = j.at("comprehensive_analysis").get<std::string>();
    return report;
}

Json trace_to_json(const ReasoningTrace& trace) {
    Json j;
    j["mode"] = to_string(trace.mode);
    if (trace.z1) j["z1"] = novelty_to_json(*trace.z1);
    if (trace.z2) {
        Json reviews = Json::array();
        for (const auto& r : *trace.z2) reviews.push_back(review_to_json(r));
        j["z2"] = reviews;
    }
    if (trace.z3) j["z3"] = reliability_to_json(*trace.z3);
    return j;
}

ReasoningTrace trace_from_json(const Json& j) {
    ReasoningTrace trace;
    trace.mode = mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("z1") && !j["z1"].is_null()) trace.z1 = novelty_from_json(j["z1"]);
    if (j.contains("z2") && !j["z2"].is_null()) {
        std::vector<Review> reviews;
        for (const auto& rj : j["z2"]) reviews.push_back(review_from_json(rj));
        trace.z2 = std::move(reviews);
    }
    if (j.contains("z3") && !j["z3"].is_null()) trace.z3 = reliability_from_json(j["z3"]);
    validate_trace(trace);
    return trace;
}

Json record_to_json(const DatasetRecord& record) {
    Json j;
    j["id"] = record.paper.id;
    j["title"] = record.paper.title;
    j["venue"] = record.paper.venue;
    j["body_markdown"] = record.paper.body;
    Json reviews = Json::array();
    for (const auto& r : record.human_reviews.reviews) reviews.push_back(review_to_json(r));
    j["reviews"] = reviews;
    Json rebuttals = Json::array();
    for (const auto& t : record.human_reviews.rebuttal_threads) {
        Json tj;
        tj["review_index"] = t.review_index;
        tj["author_text"] = t.author_text;
        if (t.reviewer_reply) tj["reviewer_reply"] = *t.reviewer_reply;
        rebuttals.push_back(tj);
    }
    j["rebuttals"] = rebuttals;
    j["meta_review"] = meta_to_json(record.meta_review);
    j["decision"] = to_string(record.decision);
    if (record.trace) j["trace"] = trace_to_json(*record.trace);
    j["split"] = record.split == DatasetRecord::Split::Train ? "train" : "test";
    return j;
}

DatasetRecord record_from_json(const Json& j) {
    DatasetRecord record;
    record.paper = PaperDocument::make(
        j.at("id").get<std::string>(), j.at("title").get<std::string>(),
        j.at("body_markdown").get<std::string>(), j.at("venue").get<std::string>());
    for (const auto& rj : j.at("reviews")) {
        record.human_reviews.reviews.push_back(review_from_json(rj));
    }
    if (j.contains("rebuttals")) {
        for (const auto& tj : j["rebuttals"]) {
            RebuttalThread t;
            t.review_index = tj.at("review_index").get<int>();
            t.author_text = tj.at("author_text").get<std::string>();
            if (tj.contains("reviewer_reply") && !tj["reviewer_reply"].is_null()) {
                t.reviewer_reply = tj["reviewer_reply"].get<std::string>();
            }
            record.human_reviews.rebuttal_threads.push_back(std::move(t));
        }
    }
    record.meta_review = meta_from_json(j.at("meta_review"));
    record.decision = decision_from_string(j.at("decision").get<std::string>());
    if (j.contains("trace") && !j["trace"].is_null()) {
        record.trace = trace_from_json(j["trace"]);
    }
    const std::string split = j.at("split").get<std::string>();
    if (split == "train") {
        record.split = DatasetRecord::Split::Train;
    } else if (split == "test") {
        record.split = DatasetRecord::Split::Test;
    } else {
        throw Error(ErrorCode::FormatError, "unknown split: " + split);
    }
    validate_record(record);
    return record;
}

Json result_to_json(const ReviewResult& result) {
    Json j;
    j["mode"] = to_string(result.trace.mode);
    j["meta"] = meta_to_json(result.meta);
    j["aggregate_scores"] = scores_to_json(result.aggregate);
    j["trace"] = trace_to_json(result.trace);
    j["tokens_in"] = result.tokens_in;
    j["tokens_out"] = result.tokens_out;
    if (result.degraded_to_standard) j["degraded_to_standard"] = true;
    return j;
}

std::string result_to_markdown(const ReviewResult& result, const PaperDocument& paper) {
    std::ostringstream out;
    out << "# Review Report: " << paper.title << "\n\n";
    out << "- Paper: " << paper.id << " (" << paper.venue << ")\n";
    out << "- Mode: " << to_string(result.trace.mode) << "\n";
    out << "- Decision: " << (result.meta.decision == Decision::Accept ? "Accept" : "Reject")
        << "\n";
    out << "- Aggregate rating: " << format_number(result.aggregate.rating) << "\n";
    out << "- Tokens: " << result.tokens_in << " in / " << result.tokens_out << " out\n";
    if (result.degraded_to_standard) out << "- Note: degraded from best to standard mode\n";
    out << "\n## Meta-Review\n\n" << render_meta_review(result.meta) << "\n";
    if (result.trace.z1) {
        out << "## Novelty Analysis\n\n" << result.trace.z1->verdict_summary << "\n\n";
    }
    if (result.trace.z2) {
        int index = 1;
        for (const auto& review : *result.trace.z2) {
            out << "## Reviewer " << index++ << "\n\n" << render_review(review) << "\n";
        }
    }
    if (result.trace.z3) {
        out << "## Reliability Analysis\n\n" << result.trace.z3->comprehensive_analysis
            << "\n";
    }
    return out.str();
}

} // namespace reviewkit
