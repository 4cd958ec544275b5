#include "clocklab/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace clocklab {

namespace {

constexpr const char* kHeader = "timestamp_s,temperature_c,lte_ppm,tone_ppm,true_ppm";

std::optional<double> parse_cell(const std::string& cell, const char* column,
                                 std::size_t line_no) {
    if (cell.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        std::ostringstream msg;
        msg << "dataset: line " << line_no << ": bad " << column << " value '" << cell << "'";
        throw std::runtime_error(msg.str());
    }
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') { cells.push_back(cur); cur.clear(); }
        else cur.push_back(ch);
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

ReadResult read_dataset(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_dataset: cannot open " + path.string());

    std::string line;
    if (!std::getline(f, line) || line != kHeader) {
        throw std::runtime_error("read_dataset: bad header in " + path.string());
    }

    ReadResult out;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 5) {
            std::ostringstream msg;
            msg << "dataset: line " << line_no << ": expected 5 fields, got " << cells.size();
            throw std::runtime_error(msg.str());
        }
        MeasurementRecord r;
        const auto ts = parse_cell(cells[0], "timestamp_s", line_no);
        const auto temp = parse_cell(cells[1], "temperature_c", line_no);
        if (!ts || !temp) {
            std::ostringstream msg;
            msg << "dataset: line " << line_no << ": timestamp and temperature are required";
            throw std::runtime_error(msg.str());
        }
        r.timestamp_s = *ts;
        r.temperature_c = *temp;
        r.lte_ppm = parse_cell(cells[2], "lte_ppm", line_no);
        r.tone_ppm = parse_cell(cells[3], "tone_ppm", line_no);
        r.true_ppm = parse_cell(cells[4], "true_ppm", line_no);
        if (!r.lte_ppm && !r.tone_ppm && !r.true_ppm) {
            std::ostringstream msg;
            msg << "dataset: line " << line_no << ": row has no ppm measurement";
            throw std::runtime_error(msg.str());
        }
        if (!out.records.empty() && r.timestamp_s <= out.records.back().timestamp_s) {
            std::ostringstream msg;
            msg << "dataset: line " << line_no << ": timestamps not strictly increasing";
            throw std::runtime_error(msg.str());
        }
        if (!out.records.empty() &&
            std::abs(r.timestamp_s - out.records.back().timestamp_s - 60.0) > 1e-6) {
            out.has_gaps = true;
        }
        out.records.push_back(r);
    }
    return out;
}

void write_dataset(std::span<const MeasurementRecord> records,
                   const std::filesystem::path& path) {
    std::string text(kHeader);
    text.push_back('\n');
    for (const auto& r : records) {
        text += format_double(r.timestamp_s);
        text.push_back(',');
        text += format_double(r.temperature_c);
        text.push_back(',');
        if (r.lte_ppm) text += format_double(*r.lte_ppm);
        text.push_back(',');
        if (r.tone_ppm) text += format_double(*r.tone_ppm);
        text.push_back(',');
        if (r.true_ppm) text += format_double(*r.true_ppm);
        text.push_back('\n');
    }
    atomic_write_text(path, text);
}

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
    const auto dir = path.parent_path().empty() ? "." : path.parent_path();
    const auto tmp = dir / (path.filename().string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("atomic_write_text: cannot open " + tmp.string());
        f << text;
        if (!f) throw std::runtime_error("atomic_write_text: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_manifest(const nlohmann::json& manifest, const std::filesystem::path& path) {
    atomic_write_text(path, manifest.dump(2) + "\n");
}

nlohmann::json read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_manifest: cannot open " + path.string());
    return nlohmann::json::parse(f);
}

}  // namespace clocklab
