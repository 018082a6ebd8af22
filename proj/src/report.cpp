#include "mirage/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mirage::report {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void RunReport::set_summary(const std::string& key, double value) {
    for (auto& [k, v] : summary) {
        if (k == key) {
            v = value;
            return;
        }
    }
    summary.emplace_back(key, value);
}

double RunReport::summary_value(const std::string& key) const {
    for (const auto& [k, v] : summary)
        if (k == key) return v;
    throw std::out_of_range("no summary metric: " + key);
}

std::string RunReport::csv() const {
    std::string out = "time_s,entity_id,metric,value\n";
    char buf[64];
    for (const auto& r : series) {
        std::snprintf(buf, sizeof buf, "%.6f", r.time_s);
        out += buf;
        out += ',';
        out += r.entity_id;
        out += ',';
        out += r.metric;
        out += ',';
        out += format_value(r.value);
        out += '\n';
    }
    return out;
}

void RunReport::write_csv(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) throw std::runtime_error("cannot open report file for writing: " + path);
    f << csv();
}

nlohmann::json RunReport::summary_json() const {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["scenario"] = scenario;
    j["seed"] = seed;
    j["effective_config"] = effective_config;
    nlohmann::json s = nlohmann::json::object();
    for (const auto& [k, v] : summary) s[k] = v;
    j["summary"] = s;
    return j;
}

void RunReport::write_summary(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open summary file for writing: " + path);
    f << summary_json().dump(2) << "\n";
}

}  // namespace mirage::report
