#pragma once

namespace vxf {

/// Entry point of the command-line tool; returns the process exit code.
/// Exit code 0 means every requested output was fully written.
int run_cli(int argc, const char* const* argv);

}  // namespace vxf
