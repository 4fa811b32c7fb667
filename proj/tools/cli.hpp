#pragma once

#include <ostream>

namespace heunlab
{

// Entry point of the heunlab command. Exit status: 0 when every check passes,
// 1 for a failed check or a numerical failure, 2 for a usage error.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace heunlab
