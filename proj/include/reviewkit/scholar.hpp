#pragma once

#include <functional>
#include <string>
#include <vector>

#include "reviewkit/gateway.hpp"
#include "reviewkit/prompts.hpp"
#include "reviewkit/schema.hpp"

namespace reviewkit::scholar {

// Retrieval caps: total candidates across keywords, per-keyword request
// limit, and the reranked shortlist size.
inline constexpr int kCandidateCap = 60;
inline constexpr int kPerKeywordLimit = 20;
inline constexpr int kTopRanked = 10;

// One keyword search against a paper-search source.
class SearchClient {
public:
    virtual ~SearchClient() = default;
    virtual std::vector<CandidatePaper> find(const std::string& keyword, int limit) = 0;
};

// Offline store: a directory of JSON candidate files keyed by keyword,
// exact-match lookup after case/whitespace normalization. A missing keyword
// file yields no candidates rather than an error.
class FixtureStore : public SearchClient {
public:
    explicit FixtureStore(std::string dir);
    std::vector<CandidatePaper> find(const std::string& keyword, int limit) override;

    // lowercase, whitespace collapsed to '_', other punctuation dropped
    static std::string keyword_stem(const std::string& keyword);

private:
    std::string dir_;
};

// Live client: GET {base_url}{path}?query=<keyword>&limit=<n>, JSON response
// with id/title/abstract/year/citationCount candidate fields.
class HttpSearchClient : public SearchClient {
public:
    struct Config {
        std::string base_url;
        std::string path = "/graph/v1/paper/search";
        std::string api_key_env;
        int timeout_ms = 30000;
        int attempts = 3;
    };
    explicit HttpSearchClient(Config config);
    std::vector<CandidatePaper> find(const std::string& keyword, int limit) override;

private:
    Config config_;
};

// ── Stage-1 operations ──────────────────────────────────────────

std::vector<ResearchQuestion> generate_questions(const PaperDocument& paper,
                                                 const gateway::Gateway& gw,
                                                 const PromptLibrary& prompts,
                                                 const gateway::GenerationParams& params = {});

std::vector<std::string> questions_to_keywords(const ResearchQuestion& question,
                                               const gateway::Gateway& gw,
                                               const PromptLibrary& prompts,
                                               const gateway::GenerationParams& params = {});

// Deduplicated union across keywords, round-robin interleaved before the
// 60-candidate cap so one broad keyword cannot starve the others.
std::vector<CandidatePaper> search(const std::vector<std::string>& keywords,
                                   SearchClient& client);

using Scorer = std::function<double(const PaperDocument&, const CandidatePaper&)>;

// Deterministic default: normalized token-set cosine between the paper's
// title + leading body window and the candidate's title + abstract.
double lexical_overlap_score(const PaperDocument& paper, const CandidatePaper& candidate);

// Top min(10, n) by relevance; ties broken by (relevance desc, id asc).
std::vector<RankedPaper> rerank(const PaperDocument& paper,
                                const std::vector<CandidatePaper>& candidates,
                                const Scorer& scorer = lexical_overlap_score);

NoveltyReport synthesize_novelty_report(const PaperDocument& paper,
                                        const std::vector<ResearchQuestion>& questions,
                                        const std::vector<RankedPaper>& ranked,
                                        const gateway::Gateway& gw,
                                        const PromptLibrary& prompts,
                                        const gateway::GenerationParams& params = {});

// Full novelty-verification stage: questions -> keywords -> search ->
// rerank -> report. Throws RetrievalUnavailable when no candidates exist.
NoveltyReport run_novelty_stage(const PaperDocument& paper, const gateway::Gateway& gw,
                                const PromptLibrary& prompts, SearchClient& client,
                                const gateway::GenerationParams& params = {});

void validate_novelty_report(const NoveltyReport& report,
                             const std::vector<RankedPaper>& ranked);

} // namespace reviewkit::scholar
