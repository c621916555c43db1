#pragma once

#include <iosfwd>

namespace spm {

/// Entry point of the `spm` tool. Returns 0 on success, 1 on runtime or file
/// errors and 2 on usage errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spm
