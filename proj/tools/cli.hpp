#pragma once

#include <iosfwd>

namespace fbq::cli {

// Entry point of the `fbq` tool. Primary results go to `out` (and to files),
// the resolved configuration and diagnostics to `err`.
// Exit codes: 0 ok, 1 runtime failure or failed verdict, 2 configuration error.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace fbq::cli
