#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reviewkit/pipeline.hpp"
#include "reviewkit/schema.hpp"

namespace reviewkit::synthesis {

enum class RejectReason { LogicalInconsistency, IncompleteFields, ParseFailure };

const char* to_string(RejectReason reason);

struct RejectedRecord {
    std::string id;
    RejectReason reason;
    std::string detail;
};

struct SynthesisReport {
    long input_count = 0;
    long emitted_count = 0;
    std::vector<RejectedRecord> rejected;
    // Provenance note: the rule-based consistency window is this artifact's
    // construction, not a published criterion.
    std::string consistency_note =
        "rule-based consistency window (accept requires meta rating >= 5, reject "
        "requires <= 7) is a deterministic floor for the quality gate";
};

struct SynthesisOptions {
    pipeline::RunConfig cfg;
    bool llm_consistency_check = false;
};

// One reconstructed review per human review: weaknesses rewritten into
// concrete suggestions using the rebuttal thread, scores copied unchanged.
std::vector<Review> reconstruct_reviews(const DatasetRecord& record,
                                        const gateway::Gateway& gw,
                                        const PromptLibrary& prompts,
                                        const pipeline::RunConfig& cfg);

// Populates the full trace (z1, z2, z3) and a regenerated meta-review.
// Throws on stage failure; the caller records the record as rejected.
DatasetRecord build_training_record(const DatasetRecord& record, const gateway::Gateway& gw,
                                    const PromptLibrary& prompts,
                                    scholar::SearchClient& retrieval,
                                    const SynthesisOptions& options);

struct QcVerdict {
    bool accepted = true;
    RejectReason reason = RejectReason::IncompleteFields;
    std::string detail;
};

// Deterministic completeness + logical-consistency gate; reject is a value,
// not an error. The gateway check runs only when gw is non-null.
QcVerdict quality_control(const DatasetRecord& record, const gateway::Gateway* gw = nullptr,
                          const PromptLibrary* prompts = nullptr);

// Full pipeline over a record list with bounded parallelism. Emitted records
// land in `emitted` in input order; the report reconciles every input.
SynthesisReport synthesize_dataset(const std::vector<DatasetRecord>& records,
                                   const gateway::Gateway& gw, const PromptLibrary& prompts,
                                   scholar::SearchClient& retrieval,
                                   const SynthesisOptions& options,
                                   std::vector<DatasetRecord>& emitted);

} // namespace reviewkit::synthesis
