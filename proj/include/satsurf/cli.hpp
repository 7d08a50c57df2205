#pragma once

#include <string>
#include <vector>

namespace satsurf {

// Entry point shared by the binary and the python bindings.
// Exit status: 0 success, 1 validation/usage error, 2 runtime failure.
int run_command(const std::vector<std::string>& args);

}  // namespace satsurf
