#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace asep {

inline constexpr const char* kCodeVersion = "asep-lab 0.3.0";

// 17 significant digits: round-trips every double
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    CsvTable& add(double x) { return add_cell(format_double(x)); }
    CsvTable& add(long long x) { return add_cell(std::to_string(x)); }
    CsvTable& add(int x) { return add_cell(std::to_string(x)); }
    CsvTable& add(std::size_t x) { return add_cell(std::to_string(x)); }
    CsvTable& add(const std::string& s) {
        if (s.find_first_of(",\"\n") != std::string::npos) throw ParameterError("CSV cell may not contain , \" or newline");
        return add_cell(s);
    }
    CsvTable& add(const char* s) { return add(std::string(s)); }
    void end_row() {
        if (current_.size() != header_.size()) throw ParameterError("CSV row width does not match header");
        rows_.push_back(std::move(current_));
        current_.clear();
    }

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    std::string str() const {
        std::ostringstream o;
        auto line = [&](const std::vector<std::string>& v) {
            for (std::size_t i = 0; i < v.size(); ++i) o << (i ? "," : "") << v[i];
            o << '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return o.str();
    }
    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open " + path + " for writing");
        f << str();
        if (!f) throw IoError("write failed: " + path);
    }

private:
    CsvTable& add_cell(std::string s) {
        current_.push_back(std::move(s));
        return *this;
    }
    std::vector<std::string> header_;
    std::vector<std::string> current_;
    std::vector<std::vector<std::string>> rows_;
};

// Reads a CSV with a header row into columns of strings.
struct CsvData {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ParameterError("no column named " + name);
    }
    std::vector<double> numbers(const std::string& name) const {
        const auto c = column(name);
        std::vector<double> out;
        for (const auto& r : rows) {
            try {
                out.push_back(std::stod(r.at(c)));
            } catch (const std::exception&) {
                throw ParameterError("non-numeric value in column " + name);
            }
        }
        return out;
    }
};

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

inline CsvData read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    CsvData d;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (trim(line).empty()) continue;
        auto cells = split(line, ',');
        if (first) {
            d.header = cells;
            first = false;
        } else {
            if (cells.size() != d.header.size()) throw ParameterError("ragged CSV row in " + path);
            d.rows.push_back(cells);
        }
    }
    if (first) throw IoError("empty CSV: " + path);
    return d;
}

// key=value lines; '#' starts a comment; blank lines ignored.
using Config = std::map<std::string, std::string>;

inline Config parse_config(std::istream& in, const std::string& origin = "config") {
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParameterError(origin + ":" + std::to_string(lineno) + ": expected key=value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ParameterError(origin + ":" + std::to_string(lineno) + ": empty key");
        c[key] = trim(line.substr(eq + 1));
    }
    return c;
}

inline Config read_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config " + path);
    return parse_config(f, path);
}

// Manifest: the resolved configuration plus code version, as sorted key=value lines.
inline std::string manifest_text(const std::string& subcommand, const Config& resolved) {
    std::ostringstream o;
    o << "code_version=" << kCodeVersion << '\n';
    o << "subcommand=" << subcommand << '\n';
    for (const auto& [k, v] : resolved) o << k << '=' << v << '\n';
    return o.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << text;
    if (!f) throw IoError("write failed: " + path);
}

// "a:b:log" (one point per decade, or a:b:log:n for n points) or "a:b:lin:n" or "x,y,z"
inline std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> out;
    auto num = [&](const std::string& s) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ParameterError("bad number in grid: " + s);
        }
    };
    if (spec.find(':') != std::string::npos) {
        const auto p = split(spec, ':');
        if (p.size() < 3) throw ParameterError("grid needs a:b:log or a:b:lin:n");
        const double a = num(p[0]), b = num(p[1]);
        if (p[2] == "log") {
            if (!(a > 0 && b > 0)) throw ParameterError("log grid needs positive ends");
            int n = p.size() > 3 ? int(num(p[3])) : int(std::lround(std::abs(std::log10(b / a)))) + 1;
            if (n < 2) n = 2;
            for (int i = 0; i < n; ++i) out.push_back(a * std::pow(b / a, double(i) / (n - 1)));
        } else if (p[2] == "lin") {
            if (p.size() < 4) throw ParameterError("linear grid needs a point count");
            const int n = int(num(p[3]));
            if (n < 2) throw ParameterError("linear grid needs at least 2 points");
            for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
        } else {
            throw ParameterError("grid kind must be log or lin");
        }
    } else {
        for (const auto& s : split(spec, ',')) out.push_back(num(s));
    }
    if (out.empty()) throw ParameterError("empty grid");
    return out;
}

// "64" -> 64x64, "4x4" -> 4x4
inline std::pair<int, int> parse_dims(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) {
            const int l = std::stoi(s);
            return {l, l};
        }
        return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
    } catch (const std::exception&) {
        throw ParameterError("bad lattice size: " + s);
    }
}

}  // namespace asep
