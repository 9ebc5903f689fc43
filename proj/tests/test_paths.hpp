#pragma once

#include <cstdlib>
#include <filesystem>

// Locations of the bundled case data and frozen reference files, resolved at
// compile time from the source tree (overridable via GRIDSE_DATA_DIR for
// out-of-tree runs).
namespace gridse::test {

inline std::filesystem::path data_dir() {
    if (const char* env = std::getenv("GRIDSE_DATA_DIR")) return env;
    return std::filesystem::path(GRIDSE_SOURCE_DIR) / "data";
}

inline std::filesystem::path ref_dir() {
    if (const char* env = std::getenv("GRIDSE_REF_DIR")) return env;
    return std::filesystem::path(GRIDSE_SOURCE_DIR) / "tests" / "data";
}

inline std::filesystem::path cli_path() {
    if (const char* env = std::getenv("GRIDSE_CLI")) return env;
    return {};
}

}  // namespace gridse::test
