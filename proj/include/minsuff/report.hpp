#pragma once

#include <nlohmann/json.hpp>
#include <string>

namespace minsuff::report {

inline constexpr const char* kToolName = "minsuff";
inline constexpr const char* kToolVersion = "0.1.0";

// Content digest used for the reproducibility audit trail (FNV-1a, 64-bit).
std::string fnv1a64_hex(const std::string& bytes);

std::string read_file(const std::string& path);  // throws SpecError when unreadable

nlohmann::json make_report(const std::string& command,
                           const nlohmann::json& inputs,
                           const nlohmann::json& result,
                           const nlohmann::json& findings,
                           long long timing_ms);

std::string render_text(const nlohmann::json& report);

}  // namespace minsuff::report
