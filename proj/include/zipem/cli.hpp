#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zipem {

/// Runs the command line `args` (program name first). Returns 0 on success,
/// 2 on a usage error and 1 on a runtime failure.
int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zipem
