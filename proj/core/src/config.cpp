#include "levylab/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "levylab/errors.hpp"

namespace levylab {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_text(ss.str());
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line, section = "experiment";
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.kv_[section + "." + key] = val;
    }
    cfg.experiment = cfg.get_str("experiment.name", "");
    return cfg;
}

void ExperimentConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must have the form section.key=value: " + assignment);
    std::string key = trim(assignment.substr(0, eq));
    const std::string val = trim(assignment.substr(eq + 1));
    if (key.find('.') == std::string::npos) key = "params." + key;
    kv_[key] = val;
    if (key == "experiment.name") experiment = val;
}

std::string ExperimentConfig::get_str(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double ExperimentConfig::get_num(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("field " + key + ": not a number: '" + it->second + "'");
    }
}

long ExperimentConfig::get_int(const std::string& key, long fallback) const {
    const double v = get_num(key, static_cast<double>(fallback));
    return static_cast<long>(v);
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("field " + key + ": not a boolean: '" + it->second + "'");
}

std::vector<double> ExperimentConfig::get_list(const std::string& key,
                                               std::vector<double> fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<double> out;
    std::istringstream is(it->second);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError("field " + key + ": bad list element '" + tok + "'");
        }
    }
    if (out.empty()) throw ConfigError("field " + key + ": empty list");
    return out;
}

std::string ExperimentConfig::require_str(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing required field " + key);
    return it->second;
}

double ExperimentConfig::require_num(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required field " + key);
    return get_num(key, 0.0);
}

std::uint64_t ExperimentConfig::seed() const {
    return static_cast<std::uint64_t>(get_int("experiment.seed", 1));
}

long ExperimentConfig::n_paths() const { return get_int("params.n_paths", 10000); }
double ExperimentConfig::dt() const { return get_num("params.dt", 1e-3); }

LevyModel ExperimentConfig::make_model() const {
    const std::string fam = get_str("model.family", "BrownianStandard");
    if (fam == "BrownianStandard") return make_brownian_standard();
    if (fam == "BrownianDrift") return make_brownian_drift(require_num("model.drift"));
    if (fam == "KouTwoSidedExp")
        return make_kou(get_num("model.sigma", 1.0), get_num("model.drift", 0.0),
                        get_num("model.lambda", 1.0), get_num("model.p_up", 0.5),
                        get_num("model.alpha_plus", 2.0), get_num("model.alpha_minus", 2.0));
    if (fam == "SpectrallyNegativeExp")
        return make_spectrally_negative(get_num("model.sigma", 0.0), require_num("model.drift"),
                                        get_num("model.lambda", 1.0), get_num("model.alpha", 1.0));
    if (fam == "TruncatedSpectral") {
        TruncatedSpectralJumps spec;
        spec.upward = get_bool("model.upward", true);
        spec.c = get_num("model.c", 1.0);
        spec.alpha = get_num("model.alpha", 0.5);
        spec.eps = get_num("model.eps", 1e-3);
        return make_truncated_spectral(get_num("model.sigma", 0.0), get_num("model.drift", 0.0),
                                       spec);
    }
    throw ConfigError("field model.family: unknown family '" + fam + "'");
}

void ExperimentConfig::validate() const {
    if (experiment.empty()) throw ConfigError("missing required field experiment.name");
    if (has("params.dt") && get_num("params.dt", 0.0) <= 0.0)
        throw ConfigError("field params.dt: must be > 0");
    if (has("params.n_paths") && get_int("params.n_paths", 0) < 100)
        throw ConfigError("field params.n_paths: must be >= 100");
    make_model();  // surfaces model-field diagnostics
}

}  // namespace levylab
