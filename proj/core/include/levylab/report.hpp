#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace levylab {

struct StatRecord {
    std::string name;
    double value = 0.0;
    double stderr_ = -1.0;    // < 0: not applicable
    double threshold = 0.0;
    bool pass = true;
    bool lower_is_pass = true;  // value <= threshold passes (or >= when false)
};

// Self-contained machine+human record of one experiment run.
struct ExperimentReport {
    std::string experiment;
    std::map<std::string, std::string> config_echo;
    std::vector<StatRecord> statistics;
    std::map<std::string, double> flags;  // approximation bookkeeping
    std::uint64_t seed = 0;
    long n = 0;
    double wall_ms = 0.0;

    void add(const std::string& name, double value, double threshold, bool lower_is_pass = true,
             double stderr_ = -1.0);
    void add_info(const std::string& name, double value, double stderr_ = -1.0);
    bool all_pass() const;

    std::string to_json() const;  // schema field: levylab-report/1
    std::string to_text() const;  // aligned summary table
};

void write_file(const std::string& path, const std::string& content);

}  // namespace levylab
