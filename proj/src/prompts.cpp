#include "reviewkit/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace reviewkit {

namespace {

using gateway::StageTag;

constexpr StageTag kAllStages[] = {
    StageTag::Questions, StageTag::Analysis, StageTag::QaReport,  StageTag::Reviewer,
    StageTag::Reliability, StageTag::Meta,   StageTag::Judge,     StageTag::Synthesis,
};

const char* default_prompt(StageTag stage) {
    switch (stage) {
        case StageTag::Questions:
            return "You are a senior researcher preparing a literature review for a "
                   "manuscript. When asked for research questions, identify what the "
                   "manuscript claims to contribute and pose sharp questions that would "
                   "let a reviewer test those claims against prior work. When asked for "
                   "search keywords, produce short, concrete phrases a scholarly search "
                   "engine can match. Follow the response format exactly.";
        case StageTag::Analysis:
            return "You are an expert reader producing a systematic analysis of a "
                   "research manuscript. Cover its research motivation, core ideas, "
                   "technical approach, and experimental design, each in its own "
                   "section. Be specific and ground every statement in the manuscript "
                   "text. Follow the response format exactly.";
        case StageTag::QaReport:
            return "You are a scholarly assistant answering research questions about a "
                   "manuscript using a set of retrieved related papers. Answer each "
                   "question by comparing the manuscript against the retrieved papers, "
                   "cite retrieved papers by their identifier, and close with an overall "
                   "novelty verdict. Cite only papers from the provided list. Follow the "
                   "response format exactly.";
        case StageTag::Reviewer:
            return "You are an expert peer reviewer for a machine learning venue. Write "
                   "a rigorous, professional review of the manuscript: summarize it, "
                   "list concrete strengths and weaknesses, and pose questions for the "
                   "authors. Score the overall rating on a 1-10 scale and soundness, "
                   "presentation, and contribution on a 1-4 scale. Follow the response "
                   "format exactly.";
        case StageTag::Reliability:
            return "You are a verification assistant checking review claims against the "
                   "manuscript text. For each claim, find the most relevant verbatim "
                   "quote from the manuscript, classify the claim as methodology or "
                   "experimental, judge whether the quote supports it, and state your "
                   "confidence. Quotes must be copied exactly from the manuscript. "
                   "Follow the response format exactly.";
        case StageTag::Meta:
            return "You are an area chair writing a meta-review. Integrate the "
                   "manuscript, the individual reviews, and any verification findings "
                   "into a single balanced assessment with a summary, strengths, "
                   "weaknesses, and concrete suggestions, then give final scores and an "
                   "accept/reject decision. Follow the response format exactly.";
        case StageTag::Judge:
            return "You are an impartial judge comparing two reviews of the same "
                   "manuscript. For each requested dimension, decide whether the first "
                   "or second review is better, or whether they tie. Judge only the "
                   "review texts against the manuscript. Follow the response format "
                   "exactly.";
        case StageTag::Synthesis:
            return "You are rewriting a peer review into a more instructive version "
                   "using the author rebuttal. Keep the professional tone, keep every "
                   "citation from the original review verbatim, and turn criticisms the "
                   "rebuttal addressed into concrete, actionable suggestions. Follow "
                   "the response format exactly.";
    }
    return "";
}

} // namespace

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    for (StageTag stage : kAllStages) {
        lib.prompts_[stage] = default_prompt(stage);
    }
    return lib;
}

PromptLibrary PromptLibrary::load(const std::string& dir) {
    PromptLibrary lib = builtin();
    for (StageTag stage : kAllStages) {
        const std::filesystem::path path =
            std::filesystem::path(dir) / (std::string(gateway::to_string(stage)) + ".txt");
        std::ifstream in(path);
        if (!in) continue;
        std::ostringstream buffer;
        buffer << in.rdbuf();
        std::string text = buffer.str();
        // Strip one trailing newline so file-based prompts match inline ones.
        if (!text.empty() && text.back() == '\n') text.pop_back();
        if (!text.empty()) lib.prompts_[stage] = std::move(text);
    }
    return lib;
}

const std::string& PromptLibrary::system_prompt(gateway::StageTag stage) const {
    return prompts_.at(stage);
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    size_t pos = 0;
    while (pos < tmpl.size()) {
        const size_t open = tmpl.find("{{", pos);
        if (open == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        const size_t close = tmpl.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        out.append(tmpl, pos, open - pos);
        const std::string key = tmpl.substr(open + 2, close - open - 2);
        auto it = values.find(key);
        if (it != values.end()) {
            out += it->second;
        } else {
            out.append(tmpl, open, close + 2 - open);
        }
        pos = close + 2;
    }
    return out;
}

} // namespace reviewkit
