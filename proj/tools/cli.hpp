#pragma once

#include <string>
#include <vector>

namespace reviewkit::cli {

// Entry point shared by the binary and the test suites. Exit codes:
// 0 success, 2 usage/config, 3 data/pipeline, 4 provider.
int cli_main(int argc, const char* const* argv);
int cli_main(const std::vector<std::string>& args);

} // namespace reviewkit::cli
