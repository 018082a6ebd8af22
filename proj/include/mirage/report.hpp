#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace mirage::report {

inline constexpr const char* kToolVersion = "1.0.0";

struct Record {
    double time_s = 0;
    std::string entity_id;
    std::string metric;
    double value = 0;
};

struct RunReport {
    std::string scenario;
    uint64_t seed = 0;
    nlohmann::json effective_config;  // every knob explicit
    std::vector<Record> series;
    std::vector<std::pair<std::string, double>> summary;  // stable order

    void add(double t, const std::string& entity, const std::string& metric, double value) {
        series.push_back(Record{t, entity, metric, value});
    }
    void set_summary(const std::string& key, double value);
    double summary_value(const std::string& key) const;  // throws if absent

    // Byte-stable CSV: header "time_s,entity_id,metric,value".
    std::string csv() const;
    void write_csv(const std::string& path) const;
    nlohmann::json summary_json() const;
    void write_summary(const std::string& path) const;
};

std::string format_value(double v);

}  // namespace mirage::report
