#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pcert {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 success, 1 domain error, 2 usage error.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pcert
