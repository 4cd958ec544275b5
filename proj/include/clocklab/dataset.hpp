#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

// Measurement dataset persistence. One CSV row per minute:
//   timestamp_s,temperature_c,lte_ppm,tone_ppm,true_ppm
// timestamp_s counts seconds from midnight of the collection's first day
// (monotone across days; seconds-of-day is timestamp_s mod 86400). Missing
// measurements are empty fields. Serialization is canonical (shortest
// round-trip decimals, LF endings), so write -> read -> write is
// byte-stable.

namespace clocklab {

struct MeasurementRecord {
    double timestamp_s = 0.0;
    double temperature_c = 0.0;
    std::optional<double> lte_ppm;
    std::optional<double> tone_ppm;
    std::optional<double> true_ppm;  // synthetic datasets only
};

struct ReadResult {
    std::vector<MeasurementRecord> records;
    bool has_gaps = false;  // one-minute cadence broken somewhere
};

ReadResult read_dataset(const std::filesystem::path& path);

void write_dataset(std::span<const MeasurementRecord> records,
                   const std::filesystem::path& path);

// Shortest round-trip decimal formatting shared by every CSV writer.
std::string format_double(double v);

// Atomic text write: temp file in the target directory, then rename.
void atomic_write_text(const std::filesystem::path& path, const std::string& text);

void write_manifest(const nlohmann::json& manifest, const std::filesystem::path& path);
nlohmann::json read_manifest(const std::filesystem::path& path);

}  // namespace clocklab
