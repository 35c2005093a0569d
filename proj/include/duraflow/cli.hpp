#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace duraflow::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes: 0 success, 1 data or model error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace duraflow::cli
