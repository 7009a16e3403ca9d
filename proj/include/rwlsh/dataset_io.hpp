// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string_view>

#include "rwlsh/core.hpp"

namespace rwlsh {

enum class DatasetFormat { kFvecs, kBvecs, kCsv };

/// Accepts "fvecs", "bvecs" and "csv".
DatasetFormat parse_format(std::string_view text);
/// Guesses from the file extension.
DatasetFormat format_from_path(const std::filesystem::path& path);

/// fvecs: records of a little-endian int32 dimension followed by that many
/// float32 values. bvecs: the same with uint8 values. csv: one point per line,
/// comma separated. Every record must have the same dimension.
RawDataset ingest(const std::filesystem::path& path, DatasetFormat format);

void write_fvecs(const RawDataset& data, const std::filesystem::path& path);
void write_csv(const RawDataset& data, const std::filesystem::path& path);

}  // namespace rwlsh
