#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "levylab/levy_model.hpp"

namespace levylab {

// Key = value configuration with [section] headers, flattened to
// "section.key".  One file per experiment; command-line overrides use the
// same "section.key=value" form.
class ExperimentConfig {
  public:
    std::string experiment;

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_text(const std::string& text);

    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_num(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;

    std::string require_str(const std::string& key) const;
    double require_num(const std::string& key) const;

    std::uint64_t seed() const;
    long n_paths() const;
    double dt() const;
    std::string out_dir() const { return get_str("experiment.out_dir", "."); }

    LevyModel make_model() const;

    // basic invariant checks shared by all experiments; throws ConfigError
    // naming the offending field
    void validate() const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

  private:
    std::map<std::string, std::string> kv_;
};

}  // namespace levylab
