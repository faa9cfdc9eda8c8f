#pragma once

#include <iosfwd>

namespace priorsens::cli {

enum ExitCode : int {
    ok = 0,
    unexpected = 1,
    input_error = 2,
    contour_error = 3,
    numerical_error = 4,
};

// Environment variable naming the default output directory.
inline constexpr const char* output_dir_env = "PRIORSENS_OUTPUT_DIR";

/// Entry point of the `priorsens` tool. Results go to `out`, warnings and
/// errors to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace priorsens::cli
