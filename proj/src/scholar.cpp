#include "reviewkit/scholar.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "reviewkit/text.hpp"

namespace reviewkit::scholar {

namespace {

using gateway::ChatRequest;
using gateway::StageTag;

std::string paper_block(const PaperDocument& paper) {
    return "# Manuscript\nTitle: " + paper.title + "\n\n" + paper.body;
}

// One repair re-prompt, then the hard error.
template <typename ParseFn>
auto call_with_repair(const gateway::Gateway& gw, ChatRequest req, ParseFn parse,
                      ErrorCode final_code) {
    std::string first_error;
    try {
        return parse(gw.complete(req).text);
    } catch (const Error& e) {
        if (error_class(e.code()) == ErrorClass::Provider) throw;
        first_error = e.what();
    }
    req.user_prompt += "\n\nYour previous response was rejected (" + first_error +
                       "). Respond again following the required format exactly.";
    try {
        return parse(gw.complete(req).text);
    } catch (const Error& e) {
        if (error_class(e.code()) == ErrorClass::Provider) throw;
        throw Error(final_code, e.what());
    }
}

std::vector<ResearchQuestion> parse_questions(const std::string& text) {
    std::vector<ResearchQuestion> questions;
    bool seen[3] = {false, false, false};
    for (const auto& raw : split_lines(text)) {
        const std::string line = trim(raw);
        if (line.empty()) continue;
        // "N. [focus] question text"
        size_t pos = 0;
        while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos == 0 || pos + 1 >= line.size() || line[pos] != '.') continue;
        const size_t open = line.find('[', pos);
        const size_t close = line.find(']', open == std::string::npos ? pos : open);
        if (open == std::string::npos || close == std::string::npos) {
            throw Error(ErrorCode::MalformedQuestions, "question line missing focus: " + line);
        }
        ResearchQuestion q;
        q.focus = focus_from_string(trim(line.substr(open + 1, close - open - 1)));
        q.text = trim(line.substr(close + 1));
        if (q.text.empty()) {
            throw Error(ErrorCode::MalformedQuestions, "empty question text");
        }
        const int idx = static_cast<int>(q.focus);
        if (seen[idx]) {
            throw Error(ErrorCode::MalformedQuestions,
                        std::string("duplicate focus ") + to_string(q.focus));
        }
        seen[idx] = true;
        questions.push_back(std::move(q));
    }
    if (questions.size() != 3) {
        throw Error(ErrorCode::MalformedQuestions,
                    "expected 3 questions, got " + std::to_string(questions.size()));
    }
    return questions;
}

std::vector<std::string> parse_keywords(const std::string& text) {
    std::vector<std::string> keywords;
    for (const auto& raw : split_lines(text)) {
        const std::string line = trim(raw);
        if (!starts_with(line, "- ") && line != "-") continue;
        const std::string keyword = trim(line.substr(line.size() > 1 ? 2 : 1));
        if (keyword.empty()) {
            throw Error(ErrorCode::MalformedKeywords, "empty keyword line");
        }
        if (word_count(keyword) > 12) {
            throw Error(ErrorCode::MalformedKeywords, "keyword over 12 words: " + keyword);
        }
        keywords.push_back(keyword);
    }
    if (keywords.empty() || keywords.size() > 3) {
        throw Error(ErrorCode::MalformedKeywords,
                    "expected 1-3 keywords, got " + std::to_string(keywords.size()));
    }
    return keywords;
}

constexpr const char* kAnalysisSections[4] = {"## Research Motivation", "## Core Ideas",
                                              "## Technical Approach",
                                              "## Experimental Design"};

std::string parse_analysis(const std::string& text) {
    const auto lines = split_lines(text);
    int prev = -1;
    for (const char* name : kAnalysisSections) {
        int found = -1;
        for (size_t i = 0; i < lines.size(); ++i) {
            if (trim(lines[i]) == name) {
                found = static_cast<int>(i);
                break;
            }
        }
        if (found < 0 || found < prev) {
            throw Error(ErrorCode::MalformedReport, std::string("analysis missing ") + name);
        }
        prev = found;
    }
    const std::string body = trim(text);
    if (body.empty()) throw Error(ErrorCode::MalformedReport, "empty analysis");
    return body;
}

struct QaParsed {
    std::vector<std::string> answers;
    std::vector<std::string> cited;
    std::string verdict;
};

QaParsed parse_qa_report(const std::string& text, size_t question_count) {
    const auto lines = split_lines(text);
    std::vector<std::pair<size_t, int>> headers;  // line index, question number (0 = verdict)
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (starts_with(line, "## Question ")) {
            int n = 0;
            try {
                n = std::stoi(line.substr(12));
            } catch (const std::exception&) {
                throw Error(ErrorCode::MalformedReport, "bad question header: " + line);
            }
            headers.emplace_back(i, n);
        } else if (line == "## Verdict") {
            headers.emplace_back(i, 0);
        }
    }
    if (headers.empty() || headers.back().second != 0) {
        throw Error(ErrorCode::MalformedReport, "missing verdict section");
    }

    QaParsed parsed;
    parsed.answers.resize(question_count);
    std::set<std::string> seen_cites;
    for (size_t h = 0; h + 1 <= headers.size(); ++h) {
        const size_t begin = headers[h].first + 1;
        const size_t end = (h + 1 < headers.size()) ? headers[h + 1].first : lines.size();
        std::string body;
        for (size_t i = begin; i < end; ++i) {
            const std::string line = trim(lines[i]);
            if (starts_with(line, "CITES:")) {
                std::stringstream ss(line.substr(6));
                std::string id;
                while (std::getline(ss, id, ',')) {
                    id = trim(id);
                    if (!id.empty() && seen_cites.insert(id).second) {
                        parsed.cited.push_back(id);
                    }
                }
                continue;
            }
            body += lines[i];
            body += '\n';
        }
        body = trim(body);
        const int number = headers[h].second;
        if (number == 0) {
            parsed.verdict = body;
        } else {
            if (number < 1 || number > static_cast<int>(question_count)) {
                throw Error(ErrorCode::MalformedReport,
                            "question number out of range: " + std::to_string(number));
            }
            parsed.answers[static_cast<size_t>(number - 1)] = body;
        }
    }
    for (size_t i = 0; i < question_count; ++i) {
        if (parsed.answers[i].empty()) {
            throw Error(ErrorCode::MalformedReport,
                        "missing answer for question " + std::to_string(i + 1));
        }
    }
    if (parsed.verdict.empty()) {
        throw Error(ErrorCode::MalformedReport, "empty verdict");
    }
    return parsed;
}

} // namespace

// ── Fixture store ───────────────────────────────────────────────

FixtureStore::FixtureStore(std::string dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_)) {
        throw Error(ErrorCode::ConfigError, "fixture directory not found: " + dir_);
    }
}

std::string FixtureStore::keyword_stem(const std::string& keyword) {
    std::string stem;
    bool pending = false;
    for (char c : to_lower(normalize_whitespace(keyword))) {
        if (c == ' ') {
            pending = !stem.empty();
        } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') {
            if (pending) stem += '_';
            pending = false;
            stem += c;
        }
    }
    return stem;
}

std::vector<CandidatePaper> FixtureStore::find(const std::string& keyword, int limit) {
    const std::filesystem::path path =
        std::filesystem::path(dir_) / (keyword_stem(keyword) + ".json");
    std::ifstream in(path);
    if (!in) return {};
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
    std::vector<CandidatePaper> out;
    for (const auto& cj : j) {
        if (static_cast<int>(out.size()) >= limit) break;
        CandidatePaper c;
        c.external_id = cj.at("id").get<std::string>();
        c.title = cj.value("title", "");
        c.abstract = cj.value("abstract", "");
        c.year = cj.value("year", 0);
        c.citation_count = cj.value("citationCount", 0);
        out.push_back(std::move(c));
    }
    return out;
}

// ── HTTP client ─────────────────────────────────────────────────

HttpSearchClient::HttpSearchClient(Config config) : config_(std::move(config)) {}

std::vector<CandidatePaper> HttpSearchClient::find(const std::string& keyword, int limit) {
    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, config_.attempts); ++attempt) {
        httplib::Client client(config_.base_url);
        client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!config_.api_key_env.empty()) {
            if (const char* key = std::getenv(config_.api_key_env.c_str())) {
                headers.emplace("x-api-key", key);
            }
        }
        httplib::Params params{{"query", keyword}, {"limit", std::to_string(limit)}};
        auto result = client.Get(config_.path, params, headers);
        if (!result) {
            last_error = httplib::to_string(result.error());
            continue;
        }
        if (result->status < 200 || result->status >= 300) {
            last_error = "status " + std::to_string(result->status);
            if (result->status >= 400 && result->status < 500) break;
            continue;
        }
        try {
            nlohmann::json j = nlohmann::json::parse(result->body);
            const nlohmann::json& items = j.is_array() ? j : j.at("data");
            std::vector<CandidatePaper> out;
            for (const auto& cj : items) {
                CandidatePaper c;
                c.external_id = cj.at("id").get<std::string>();
                c.title = cj.value("title", "");
                c.abstract = cj.value("abstract", "");
                c.year = cj.value("year", 0);
                c.citation_count = cj.value("citationCount", 0);
                out.push_back(std::move(c));
            }
            return out;
        } catch (const std::exception& e) {
            last_error = std::string("bad response: ") + e.what();
        }
    }
    throw Error(ErrorCode::RetrievalUnavailable, keyword + ": " + last_error);
}

// ── Operations ──────────────────────────────────────────────────

std::vector<ResearchQuestion> generate_questions(const PaperDocument& paper,
                                                 const gateway::Gateway& gw,
                                                 const PromptLibrary& prompts,
                                                 const gateway::GenerationParams& params) {
    ChatRequest req;
    req.stage = StageTag::Questions;
    req.system_prompt = prompts.system_prompt(StageTag::Questions);
    req.params = params;
    req.user_prompt =
        "Generate exactly three key research questions about the manuscript below, "
        "one per focus: a research gap, an innovative direction, and a "
        "methodological breakthrough.\n\n"
        "Respond with exactly three lines and no other text:\n"
        "1. [research_gap] <question>\n"
        "2. [innovative_direction] <question>\n"
        "3. [methodological_breakthrough] <question>\n\n" +
        paper_block(paper);
    return call_with_repair(gw, std::move(req), parse_questions,
                            ErrorCode::MalformedQuestions);
}

std::vector<std::string> questions_to_keywords(const ResearchQuestion& question,
                                               const gateway::Gateway& gw,
                                               const PromptLibrary& prompts,
                                               const gateway::GenerationParams& params) {
    ChatRequest req;
    req.stage = StageTag::Questions;
    req.system_prompt = prompts.system_prompt(StageTag::Questions);
    req.params = params;
    req.user_prompt =
        "Transform the research question below into 1 to 3 search keyword phrases "
        "for a scholarly search engine. Each phrase must be at most 12 words.\n\n"
        "Respond with one phrase per line, each line starting with \"- \".\n\n"
        "Question (" +
        std::string(to_string(question.focus)) + "): " + question.text;
    return call_with_repair(gw, std::move(req), parse_keywords, ErrorCode::MalformedKeywords);
}

std::vector<CandidatePaper> search(const std::vector<std::string>& keywords,
                                   SearchClient& client) {
    std::vector<std::vector<CandidatePaper>> per_keyword;
    per_keyword.reserve(keywords.size());
    for (const auto& keyword : keywords) {
        per_keyword.push_back(client.find(keyword, kPerKeywordLimit));
    }

    // Round-robin across keyword result lists, dedup by id, cap at 60.
    std::vector<CandidatePaper> merged;
    std::set<std::string> seen;
    for (size_t round = 0;; ++round) {
        bool any = false;
        for (const auto& list : per_keyword) {
            if (round >= list.size()) continue;
            any = true;
            const CandidatePaper& c = list[round];
            if (static_cast<int>(merged.size()) >= kCandidateCap) return merged;
            if (seen.insert(c.external_id).second) merged.push_back(c);
        }
        if (!any) break;
    }
    return merged;
}

double lexical_overlap_score(const PaperDocument& paper, const CandidatePaper& candidate) {
    constexpr long kBodyWindowWords = 250;

    auto token_set = [](const std::string& text, long max_words) {
        std::set<std::string> tokens;
        long used = 0;
        for (const auto& word : split_words(text)) {
            if (max_words > 0 && used >= max_words) break;
            ++used;
            std::string clean;
            for (char c : to_lower(word)) {
                if (std::isalnum(static_cast<unsigned char>(c))) clean += c;
            }
            if (!clean.empty()) tokens.insert(std::move(clean));
        }
        return tokens;
    };

    const auto paper_tokens =
        token_set(paper.title + " " + paper.body, kBodyWindowWords);
    const auto cand_tokens = token_set(candidate.title + " " + candidate.abstract, 0);
    if (paper_tokens.empty() || cand_tokens.empty()) return 0.0;

    long shared = 0;
    for (const auto& t : cand_tokens) {
        if (paper_tokens.count(t)) ++shared;
    }
    return static_cast<double>(shared) /
           std::sqrt(static_cast<double>(paper_tokens.size()) *
                     static_cast<double>(cand_tokens.size()));
}

std::vector<RankedPaper> rerank(const PaperDocument& paper,
                                const std::vector<CandidatePaper>& candidates,
                                const Scorer& scorer) {
    if (candidates.empty()) {
        throw Error(ErrorCode::RetrievalUnavailable, "no candidates to rerank");
    }
    std::vector<RankedPaper> ranked;
    ranked.reserve(candidates.size());
    for (const auto& candidate : candidates) {
        RankedPaper r;
        r.candidate = candidate;
        r.relevance = scorer(paper, candidate);
        ranked.push_back(std::move(r));
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedPaper& a, const RankedPaper& b) {
        if (a.relevance != b.relevance) return a.relevance > b.relevance;
        return a.candidate.external_id < b.candidate.external_id;
    });
    if (static_cast<int>(ranked.size()) > kTopRanked) {
        ranked.resize(static_cast<size_t>(kTopRanked));
    }
    for (size_t i = 0; i < ranked.size(); ++i) {
        ranked[i].rank = static_cast<int>(i) + 1;
    }
    return ranked;
}

void validate_novelty_report(const NoveltyReport& report,
                             const std::vector<RankedPaper>& ranked) {
    if (report.questions.size() != 3) {
        throw Error(ErrorCode::MalformedReport, "report must carry 3 questions");
    }
    bool seen[3] = {false, false, false};
    for (const auto& q : report.questions) seen[static_cast<int>(q.focus)] = true;
    if (!(seen[0] && seen[1] && seen[2])) {
        throw Error(ErrorCode::MalformedReport, "question foci incomplete");
    }
    parse_analysis(report.paper_analysis);
    if (report.answers.size() != report.questions.size()) {
        throw Error(ErrorCode::MalformedReport, "answer count mismatch");
    }
    std::set<std::string> ranked_ids;
    for (const auto& r : ranked) ranked_ids.insert(r.candidate.external_id);
    for (const auto& id : report.cited) {
        if (!ranked_ids.count(id)) {
            throw Error(ErrorCode::UncitedSource, id);
        }
    }
    if (trim(report.verdict_summary).empty()) {
        throw Error(ErrorCode::MalformedReport, "empty verdict summary");
    }
}

NoveltyReport synthesize_novelty_report(const PaperDocument& paper,
                                        const std::vector<ResearchQuestion>& questions,
                                        const std::vector<RankedPaper>& ranked,
                                        const gateway::Gateway& gw,
                                        const PromptLibrary& prompts,
                                        const gateway::GenerationParams& params) {
    if (questions.size() != 3) {
        throw Error(ErrorCode::MalformedReport, "need 3 questions");
    }
    if (ranked.empty()) {
        throw Error(ErrorCode::RetrievalUnavailable, "no ranked papers");
    }

    // Four-section paper analysis.
    ChatRequest analysis_req;
    analysis_req.stage = StageTag::Analysis;
    analysis_req.system_prompt = prompts.system_prompt(StageTag::Analysis);
    analysis_req.params = params;
    analysis_req.user_prompt =
        "Analyze the manuscript below.\n\n"
        "Respond with exactly these four sections:\n"
        "## Research Motivation\n## Core Ideas\n## Technical Approach\n"
        "## Experimental Design\n\n" +
        paper_block(paper);
    const std::string analysis = call_with_repair(gw, std::move(analysis_req), parse_analysis,
                                                  ErrorCode::MalformedReport);

    // Per-question answers plus novelty verdict, grounded in the shortlist.
    std::ostringstream user;
    user << "Answer each research question below by comparing the manuscript against "
            "the retrieved papers, then give an overall novelty verdict.\n\n"
            "Respond in exactly this format:\n";
    for (size_t i = 1; i <= questions.size(); ++i) {
        user << "## Question " << i << "\n<answer>\nCITES: <comma-separated retrieved "
                "paper ids, or omit the line>\n";
    }
    user << "## Verdict\n<novelty verdict summary>\n\n"
            "Cite only ids from the retrieved list.\n\n# Research Questions\n";
    for (size_t i = 0; i < questions.size(); ++i) {
        user << (i + 1) << ". [" << to_string(questions[i].focus) << "] "
             << questions[i].text << "\n";
    }
    user << "\n# Retrieved Papers\n";
    for (const auto& r : ranked) {
        user << "- id: " << r.candidate.external_id << " (" << r.candidate.year
             << ", cited " << r.candidate.citation_count << ")\n  title: "
             << r.candidate.title << "\n  abstract: " << r.candidate.abstract << "\n";
    }
    user << "\n" << paper_block(paper);

    ChatRequest qa_req;
    qa_req.stage = StageTag::QaReport;
    qa_req.system_prompt = prompts.system_prompt(StageTag::QaReport);
    qa_req.params = params;
    qa_req.user_prompt = user.str();

    std::set<std::string> ranked_ids;
    for (const auto& r : ranked) ranked_ids.insert(r.candidate.external_id);
    auto parse = [&](const std::string& text) {
        QaParsed parsed = parse_qa_report(text, questions.size());
        for (const auto& id : parsed.cited) {
            if (!ranked_ids.count(id)) throw Error(ErrorCode::UncitedSource, id);
        }
        return parsed;
    };
    // UncitedSource surfaces as itself after the repair attempt.
    QaParsed parsed;
    std::string first_error;
    try {
        parsed = parse(gw.complete(qa_req).text);
    } catch (const Error& e) {
        if (error_class(e.code()) == ErrorClass::Provider) throw;
        first_error = e.what();
        qa_req.user_prompt += "\n\nYour previous response was rejected (" + first_error +
                              "). Respond again following the required format exactly.";
        parsed = parse(gw.complete(qa_req).text);
    }

    NoveltyReport report;
    report.questions = questions;
    report.paper_analysis = analysis;
    report.answers = std::move(parsed.answers);
    report.cited = std::move(parsed.cited);
    report.verdict_summary = std::move(parsed.verdict);
    validate_novelty_report(report, ranked);
    return report;
}

NoveltyReport run_novelty_stage(const PaperDocument& paper, const gateway::Gateway& gw,
                                const PromptLibrary& prompts, SearchClient& client,
                                const gateway::GenerationParams& params) {
    const auto questions = generate_questions(paper, gw, prompts, params);
    std::vector<std::string> keywords;
    std::set<std::string> seen;
    for (const auto& question : questions) {
        for (auto& keyword : questions_to_keywords(question, gw, prompts, params)) {
            if (seen.insert(to_lower(normalize_whitespace(keyword))).second) {
                keywords.push_back(std::move(keyword));
            }
        }
    }
    const auto candidates = search(keywords, client);
    if (candidates.empty()) {
        throw Error(ErrorCode::RetrievalUnavailable, "no candidates for any keyword");
    }
    const auto ranked = rerank(paper, candidates);
    return synthesize_novelty_report(paper, questions, ranked, gw, prompts, params);
}

} // namespace reviewkit::scholar
