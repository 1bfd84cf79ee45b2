#pragma once

namespace mqbench::cli {

/// Entry point behind main(). Exit codes: 0 success, 1 validation or
/// usage error, 2 runtime failure, 3 run completed but degenerate.
int cli_main(int argc, const char* const* argv);

}  // namespace mqbench::cli
