#include "levylab/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "levylab/errors.hpp"

namespace levylab {

void ExperimentReport::add(const std::string& name, double value, double threshold,
                           bool lower_is_pass, double stderr_) {
    StatRecord r;
    r.name = name;
    r.value = value;
    r.threshold = threshold;
    r.lower_is_pass = lower_is_pass;
    r.stderr_ = stderr_;
    r.pass = lower_is_pass ? value <= threshold : value >= threshold;
    statistics.push_back(std::move(r));
}

void ExperimentReport::add_info(const std::string& name, double value, double stderr_) {
    StatRecord r;
    r.name = name;
    r.value = value;
    r.threshold = std::nan("");
    r.stderr_ = stderr_;
    r.pass = true;
    statistics.push_back(std::move(r));
}

bool ExperimentReport::all_pass() const {
    for (const auto& s : statistics)
        if (!s.pass) return false;
    return true;
}

std::string ExperimentReport::to_json() const {
    nlohmann::json j;
    j["schema"] = "levylab-report/1";
    j["experiment"] = experiment;
    j["config"] = config_echo;
    j["statistics"] = nlohmann::json::array();
    for (const auto& s : statistics) {
        nlohmann::json r;
        r["name"] = s.name;
        r["value"] = s.value;
        if (s.stderr_ >= 0.0) r["stderr"] = s.stderr_;
        if (!std::isnan(s.threshold)) {
            r["threshold"] = s.threshold;
            r["direction"] = s.lower_is_pass ? "<=" : ">=";
        }
        r["pass"] = s.pass;
        j["statistics"].push_back(r);
    }
    j["provenance"] = {{"seed", seed}, {"n", n}, {"wall_ms", wall_ms}};
    j["flags"] = flags;
    return j.dump(2);
}

std::string ExperimentReport::to_text() const {
    std::ostringstream os;
    os << "experiment: " << experiment << "  (seed " << seed << ", n " << n << ", "
       << static_cast<long>(wall_ms) << " ms)\n";
    char buf[256];
    for (const auto& s : statistics) {
        if (std::isnan(s.threshold)) {
            std::snprintf(buf, sizeof(buf), "  %-44s %14.6g%s\n", s.name.c_str(), s.value,
                          s.stderr_ >= 0.0 ? "  (info)" : "  (info)");
        } else {
            std::snprintf(buf, sizeof(buf), "  %-44s %14.6g  %s %10.4g  [%s]\n", s.name.c_str(),
                          s.value, s.lower_is_pass ? "<=" : ">=", s.threshold,
                          s.pass ? "pass" : "FAIL");
        }
        os << buf;
    }
    for (const auto& [k, v] : flags) {
        std::snprintf(buf, sizeof(buf), "  flag %-39s %14.6g\n", k.c_str(), v);
        os << buf;
    }
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    os << content;
}

}  // namespace levylab
