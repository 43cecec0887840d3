#pragma once

namespace p2m {

/// Entry point of the p2m command: 0 on success, 1 on usage errors, 2 on runtime failures.
int cli_main(int argc, const char* const* argv);

}  // namespace p2m
