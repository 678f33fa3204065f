#pragma once

#include <map>
#include <string>

#include "reviewkit/gateway.hpp"

namespace reviewkit {

// System prompts per stage. Prompt text is configuration, not code: built-in
// defaults can be overridden by a directory holding one <stage>.txt per tag.
class PromptLibrary {
public:
    static PromptLibrary builtin();

    // Starts from the built-in set and replaces any stage whose file exists
    // in `dir` (e.g. dir/reviewer.txt).
    static PromptLibrary load(const std::string& dir);

    const std::string& system_prompt(gateway::StageTag stage) const;

private:
    std::map<gateway::StageTag, std::string> prompts_;
};

// Replaces each "{{key}}" with its value; unknown keys are left intact.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values);

} // namespace reviewkit
