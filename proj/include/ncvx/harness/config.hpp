#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncvx::harness {

/// Flat key = value configuration with [section] headers; keys are stored as
/// "section.key". Lines starting with # are comments.
class ConfigFile {
public:
    ConfigFile() = default;

    static ConfigFile parse(std::istream& in) {
        ConfigFile cfg;
        std::string line, section;
        while (std::getline(in, line)) {
            const auto trimmed = trim(line);
            if (trimmed.empty() || trimmed[0] == '#') continue;
            if (trimmed.front() == '[' && trimmed.back() == ']') {
                section = trim(trimmed.substr(1, trimmed.size() - 2));
                continue;
            }
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config: expected key = value, got: " + trimmed);
            std::string key = trim(trimmed.substr(0, eq));
            if (!section.empty()) key = section + "." + key;
            cfg.values_[key] = trim(trimmed.substr(eq + 1));
        }
        return cfg;
    }

    static ConfigFile parse_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::invalid_argument("config: cannot open " + path);
        return parse(f);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_str(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : std::stod(it->second);
    }

    long get_long(const std::string& key, long fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : std::stol(it->second);
    }

    unsigned long long get_u64(const std::string& key, unsigned long long fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : std::stoull(it->second);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return it->second == "true" || it->second == "1" || it->second == "yes";
    }

    /// Comma-separated values, or "logspace:lo,hi,count".
    std::vector<double> get_grid(const std::string& key,
                                 const std::vector<double>& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const std::string& v = it->second;
        if (v.rfind("logspace:", 0) == 0) {
            const auto parts = split(v.substr(9), ',');
            if (parts.size() != 3)
                throw std::invalid_argument("config: logspace needs lo,hi,count");
            return logspace(std::stod(parts[0]), std::stod(parts[1]), std::stol(parts[2]));
        }
        std::vector<double> out;
        for (const auto& part : split(v, ',')) out.push_back(std::stod(part));
        return out;
    }

    /// Canonical echo (sorted keys) used for the run manifest.
    std::string echo() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
        return out;
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    static std::vector<double> logspace(double lo, double hi, long count) {
        if (count < 1 || lo <= 0.0 || hi <= 0.0)
            throw std::invalid_argument("logspace: need positive bounds and count >= 1");
        std::vector<double> out(count);
        if (count == 1) {
            out[0] = lo;
            return out;
        }
        const double llo = std::log(lo), lhi = std::log(hi);
        for (long i = 0; i < count; ++i)
            out[i] = std::exp(llo + (lhi - llo) * i / (count - 1));
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    static std::vector<std::string> split(const std::string& s, char sep) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, sep)) out.push_back(trim(item));
        return out;
    }

    std::map<std::string, std::string> values_;
};

}  // namespace ncvx::harness
