// SPDX-License-Identifier: Apache-2.0

#include "rwlsh/dataset_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "rwlsh/error.hpp"

namespace rwlsh {

namespace {

std::string read_all(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  require(file.good(), ErrorCategory::kIo, "cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  require(!bytes.empty(), ErrorCategory::kFormat, "'" + path.string() + "' is empty");
  return bytes;
}

std::uint32_t load_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

template <typename Value>
RawDataset read_vecs(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  std::vector<double> values;
  std::size_t dim = 0;
  std::size_t pos = 0;
  std::size_t record = 0;
  while (pos < bytes.size()) {
    require(bytes.size() - pos >= 4, ErrorCategory::kFormat,
            "record " + std::to_string(record) + ": truncated dimension header");
    const auto d = static_cast<std::int32_t>(load_u32(bytes.data() + pos));
    pos += 4;
    require(d > 0, ErrorCategory::kFormat, "record " + std::to_string(record) + ": nonpositive dimension");
    if (record == 0) dim = static_cast<std::size_t>(d);
    require(static_cast<std::size_t>(d) == dim, ErrorCategory::kFormat,
            "record " + std::to_string(record) + " has dimension " + std::to_string(d) + ", expected " +
                std::to_string(dim));
    require((bytes.size() - pos) / sizeof(Value) >= dim, ErrorCategory::kFormat,
            "record " + std::to_string(record) + ": truncated values");
    for (std::size_t i = 0; i < dim; ++i, pos += sizeof(Value)) {
      if constexpr (std::is_same_v<Value, float>) {
        values.push_back(static_cast<double>(std::bit_cast<float>(load_u32(bytes.data() + pos))));
      } else {
        values.push_back(static_cast<double>(static_cast<unsigned char>(bytes[pos])));
      }
    }
    ++record;
  }
  return RawDataset(dim, std::move(values));
}

RawDataset read_csv(const std::filesystem::path& path) {
  const std::string text = read_all(path);
  std::vector<double> values;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    std::size_t fields = 0;
    std::size_t p = 0;
    while (true) {
      const std::size_t comma = std::min(line.find(',', p), line.size());
      std::string_view field = line.substr(p, comma - p);
      while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
      if (!field.empty() && field.front() == '+') field.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      require(ec == std::errc() && ptr == field.data() + field.size() && !field.empty(), ErrorCategory::kFormat,
              "line " + std::to_string(line_no) + ": '" + std::string(field) + "' is not a number");
      values.push_back(v);
      ++fields;
      if (comma == line.size()) break;
      p = comma + 1;
    }
    if (dim == 0) dim = fields;
    require(fields == dim, ErrorCategory::kFormat,
            "line " + std::to_string(line_no) + " has " + std::to_string(fields) + " values, expected " +
                std::to_string(dim));
  }
  require(dim > 0, ErrorCategory::kFormat, "'" + path.string() + "' holds no points");
  return RawDataset(dim, std::move(values));
}

}  // namespace

DatasetFormat parse_format(std::string_view text) {
  if (text == "fvecs") return DatasetFormat::kFvecs;
  if (text == "bvecs") return DatasetFormat::kBvecs;
  if (text == "csv") return DatasetFormat::kCsv;
  fail(ErrorCategory::kInvalidArgument, "unknown dataset format '" + std::string(text) + "'");
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  require(ext.size() > 1, ErrorCategory::kInvalidArgument,
          "cannot infer the format of '" + path.string() + "'; pass --format");
  return parse_format(ext.substr(1));
}

RawDataset ingest(const std::filesystem::path& path, DatasetFormat format) {
  switch (format) {
    case DatasetFormat::kFvecs:
      return read_vecs<float>(path);
    case DatasetFormat::kBvecs:
      return read_vecs<std::uint8_t>(path);
    case DatasetFormat::kCsv:
      return read_csv(path);
  }
  fail(ErrorCategory::kInvalidArgument, "unknown dataset format");
}

void write_fvecs(const RawDataset& data, const std::filesystem::path& path) {
  std::string out;
  auto put = [&out](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
  };
  for (std::size_t p = 0; p < data.size(); ++p) {
    put(static_cast<std::uint32_t>(data.dim()));
    for (double v : data.point(p)) put(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  require(file.good(), ErrorCategory::kIo, "cannot open '" + path.string() + "' for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  require(file.good(), ErrorCategory::kIo, "write to '" + path.string() + "' failed");
}

void write_csv(const RawDataset& data, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::trunc);
  require(file.good(), ErrorCategory::kIo, "cannot open '" + path.string() + "' for writing");
  char buf[32];
  for (std::size_t p = 0; p < data.size(); ++p) {
    const auto point = data.point(p);
    for (std::size_t i = 0; i < point.size(); ++i) {
      const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), point[i]);
      if (i > 0) file.put(',');
      file.write(buf, end - buf);
    }
    file.put('\n');
  }
  require(file.good(), ErrorCategory::kIo, "write to '" + path.string() + "' failed");
}

}  // namespace rwlsh
