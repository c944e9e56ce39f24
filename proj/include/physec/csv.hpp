#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace physec::csv {

// Shortest round-trip formatting; locale-independent, so reruns are
// byte-identical.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf.data(), res.ptr);
}

inline std::string format_u64(uint64_t v) { return std::to_string(v); }

struct Table {
    std::string metadata; // leading '#' line
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> trailing_comments; // '#'-prefixed summary lines

    std::string render() const {
        std::string out;
        if (!metadata.empty()) {
            out += "# " + metadata + "\n";
        }
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out += ',';
            out += columns[i];
        }
        out += '\n';
        for (const auto& row : rows) {
            if (row.size() != columns.size())
                throw std::logic_error("csv::Table: row arity mismatch");
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += ',';
                out += row[i];
            }
            out += '\n';
        }
        for (const auto& line : trailing_comments) out += "# " + line + "\n";
        return out;
    }
};

// Write-then-rename so readers never observe a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("write_atomic: cannot open " + tmp.string());
        out << content;
        if (!out.good()) throw std::runtime_error("write_atomic: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace physec::csv
