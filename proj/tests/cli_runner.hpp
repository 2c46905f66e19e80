#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace clirun {

struct Result {
    int status = -1;
    std::string out;
    std::string err;
};

inline std::string quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) {
        if (c == '\'') {
            q += "'\\''";
        } else {
            q += c;
        }
    }
    return q + "'";
}

inline std::string temp_path(const std::string& name) {
    static int counter = 0;
    return (std::filesystem::temp_directory_path() /
            ("gpkit_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + name))
        .string();
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Runs `exe args...` through the shell, capturing stdout, stderr and the exit code.
inline Result run(const std::string& exe, const std::vector<std::string>& args) {
    const std::string err_path = temp_path("stderr.txt");
    std::string cmd = quote(exe);
    for (const auto& a : args) { cmd += " " + quote(a); }
    cmd += " 2>" + quote(err_path);
    Result r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) { return r; }
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) { r.out.append(buf, got); }
    const int raw = ::pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = slurp(err_path);
    std::filesystem::remove(err_path);
    return r;
}

/// Splits CSV text into a header and numeric rows.
struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) { return i; }
        }
        return header.size();
    }
};

inline Csv parse_csv(const std::string& text) {
    Csv c;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) { continue; }
        std::istringstream ls(line);
        std::string cell;
        if (first) {
            while (std::getline(ls, cell, ',')) { c.header.push_back(cell); }
            first = false;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) { row.push_back(std::stod(cell)); }
        c.rows.push_back(row);
    }
    return c;
}

}  // namespace clirun
