#pragma once

#include <filesystem>
#include <string>

#include "gridse/grid.hpp"

namespace gridse::grid {

// Native case schema (JSON): {"base_mva": ..., "buses": [...], "branches": [...]}
// with bus keys id, kind, p_load, q_load, gs, bs, base_kv, vm, va, v_set, p_gen
// and branch keys from, to, r, x, b, tap, shift, status. Angles in degrees.
NetworkCase parse_case_json(const std::string& text);
std::string case_to_json(const NetworkCase& c);

// MATPOWER-style tabular format: mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch
// blocks. Parse errors report the offending line number.
NetworkCase parse_case_matpower(const std::string& text);

// Auto-detects the two formats above.
NetworkCase parse_case(const std::string& text);
NetworkCase load_case(const std::filesystem::path& path);

}  // namespace gridse::grid
