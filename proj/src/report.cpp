#include "minsuff/report.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include "minsuff/common.hpp"

namespace minsuff::report {

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot read file \"" + path + "\"");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json make_report(const std::string& command, const nlohmann::json& inputs,
                           const nlohmann::json& result, const nlohmann::json& findings,
                           long long timing_ms) {
    nlohmann::json rep;
    rep["tool_version"] = std::string(kToolName) + " " + kToolVersion;
    rep["command"] = command;
    rep["inputs"] = inputs;
    rep["result"] = result;
    rep["findings"] = findings;
    rep["timing_ms"] = timing_ms;
    return rep;
}

namespace {

void render_value(const nlohmann::json& v, const std::string& indent, std::ostream& os) {
    if (v.is_object()) {
        os << "\n";
        for (auto it = v.begin(); it != v.end(); ++it) {
            os << indent << "  " << it.key() << ": ";
            render_value(it.value(), indent + "  ", os);
        }
    } else if (v.is_array() && !v.empty() && (v.front().is_object() || v.front().is_array())) {
        os << "\n";
        for (const auto& item : v) {
            os << indent << "  - ";
            render_value(item, indent + "  ", os);
        }
    } else {
        os << v.dump() << "\n";
    }
}

}  // namespace

std::string render_text(const nlohmann::json& report) {
    std::ostringstream os;
    os << report.value("tool_version", "") << "\n";
    os << "command: " << report.value("command", "") << "\n";
    if (report.contains("result")) {
        os << "result:";
        render_value(report.at("result"), "", os);
    }
    if (report.contains("findings") && !report.at("findings").empty()) {
        os << "findings:";
        render_value(report.at("findings"), "", os);
    }
    os << "timing_ms: " << report.value("timing_ms", 0LL) << "\n";
    return os.str();
}

}  // namespace minsuff::report
