#pragma once

#include <json.hpp>

#include "reviewkit/schema.hpp"

namespace reviewkit {

// Insertion-ordered JSON keeps field order stable, which the determinism
// guarantees rely on.
using Json = nlohmann::ordered_json;

Json review_to_json(const Review& review);
Review review_from_json(const Json& j);

Json meta_to_json(const MetaReview& meta);
MetaReview meta_from_json(const Json& j);

Json trace_to_json(const ReasoningTrace& trace);
ReasoningTrace trace_from_json(const Json& j);

Json novelty_to_json(const NoveltyReport& report);
NoveltyReport novelty_from_json(const Json& j);

Json reliability_to_json(const ReliabilityReport& report);
ReliabilityReport reliability_from_json(const Json& j);

Json record_to_json(const DatasetRecord& record);
DatasetRecord record_from_json(const Json& j);

// ReviewResult serialization: trace, meta, aggregate scores, token counts.
// Wall-clock time is intentionally excluded so identical runs serialize to
// identical bytes.
Json result_to_json(const ReviewResult& result);

// Human-readable Markdown rendering of a ReviewResult.
std::string result_to_markdown(const ReviewResult& result, const PaperDocument& paper);

} // namespace reviewkit
