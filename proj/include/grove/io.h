#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grove/data.h"
#include "grove/forest.h"

namespace grove {

// Header line plus rows. Comma-delimited when the header contains a comma,
// otherwise whitespace-delimited. A column whose cells all parse as numbers
// is numeric; anything else is kept as strings. Throws DataError.
std::vector<NamedColumn> parse_dataset(std::string_view text);
std::vector<NamedColumn> parse_dataset_file(const std::filesystem::path& path);

// Forest file layout (little-endian):
//   "GROVEF1\0", version byte, tree type code, num_trees, mtry,
//   min_node_size, seed, num_samples, feature names, classes, timepoints,
//   optional impurity importance sums, then per tree the node arrays
//   (split feature, threshold, left, right, leaf index) and leaf payloads,
//   and a trailing FNV-1a 64-bit checksum of all preceding bytes.
// Bag records are not stored.
inline constexpr std::uint8_t kForestFileVersion = 1;

std::vector<std::uint8_t> serialize_forest(const ForestModel& forest);
// Throws ForestFileError on bad magic, unknown version, checksum mismatch or
// truncation.
ForestModel deserialize_forest(std::span<const std::uint8_t> bytes);

void save_forest(const ForestModel& forest, const std::filesystem::path& path);
ForestModel load_forest(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

// Shortest round-trip decimal representation.
std::string format_number(double value);

}  // namespace grove
