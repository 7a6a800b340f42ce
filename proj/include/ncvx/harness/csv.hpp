#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace ncvx::harness {

/// %.17g rendering: round-trippable doubles, identical across runs.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Fixed-schema CSV table. Rows are preformatted strings so that emission
/// order (and therefore the output bytes) is independent of worker count.
class Csv {
public:
    explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(const std::vector<std::string>& cells) {
        std::string row;
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) row += ',';
            row += cells[i];
        }
        rows_.push_back(std::move(row));
    }

    void append(const Csv& other) {
        rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
    }

    std::string str() const {
        std::string out;
        for (size_t i = 0; i < header_.size(); ++i) {
            if (i) out += ',';
            out += header_[i];
        }
        out += '\n';
        for (const auto& row : rows_) {
            out += row;
            out += '\n';
        }
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open output file: " + path);
        f << str();
    }

    size_t row_count() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::string> rows_;
};

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Run manifest written next to each CSV: the canonical config echo plus a
/// content hash of it, so a result file can be traced back to its inputs.
inline void write_manifest(const std::string& csv_path, const std::string& config_echo) {
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_echo)));
    std::ofstream f(csv_path + ".manifest", std::ios::binary);
    if (!f) throw std::runtime_error("cannot open manifest for: " + csv_path);
    f << "input_hash = fnv1a64:" << hash << "\n" << config_echo;
}

}  // namespace ncvx::harness
