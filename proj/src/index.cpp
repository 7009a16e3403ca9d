// SPDX-License-Identifier: Apache-2.0

#include "rwlsh/index.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <new>
#include <string>

#include "binary_io.hpp"
#include "rwlsh/error.hpp"
#include "rwlsh/random.hpp"

namespace rwlsh {

namespace {

constexpr std::string_view kMagic = "RWLSHIDX";
constexpr std::uint64_t kWalkStream = 0x57414c4bULL;
constexpr std::uint64_t kFamilyStream = 0x46414d49ULL;

constexpr std::uint64_t fmix64(std::uint64_t k) noexcept {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

std::shared_ptr<const RandomWalkTable> make_walks(const NormalizedDataset& data, const IndexConfig& config) {
  if (config.kind != HashFamilyKind::kRandomWalk) {
    return nullptr;
  }
  std::vector<Coord> caps = data.universe_caps();
  for (std::size_t i = 0; i < caps.size(); ++i) {
    caps[i] = static_cast<Coord>(std::min<std::int64_t>(std::int64_t{caps[i]} + config.walk_margin,
                                                        std::max<Coord>(caps[i], kMaxWalkUniverse)));
    require(caps[i] <= kMaxWalkUniverse, ErrorCategory::kOutOfRange,
            "dimension " + std::to_string(i) + " has universe " + std::to_string(caps[i]) +
                ", beyond the walk-table bound " + std::to_string(kMaxWalkUniverse) + "; normalize with a smaller cap");
  }
  return std::make_shared<const RandomWalkTable>(
      build_walk_table(caps, config.functions, config.tables, derive_seed(config.seed, {kWalkStream})));
}

LshFunctionVector make_family(const NormalizedDataset& data, const IndexConfig& config,
                              const std::shared_ptr<const RandomWalkTable>& walks, std::size_t table) {
  const std::uint64_t seed = derive_seed(config.seed, {kFamilyStream, table});
  if (config.kind == HashFamilyKind::kRandomWalk) {
    return make_random_walk_family(walks, table, config.width, seed);
  }
  return sample_family(config.kind, data.dim(), config.functions, config.width, seed);
}

HashTable layout_table(LshFunctionVector family, const std::vector<std::uint32_t>& slots, std::size_t slot_count) {
  HashTable table;
  table.family = std::move(family);
  try {
    table.offsets.assign(slot_count + 1, 0);
    table.ids.resize(slots.size());
  } catch (const std::bad_alloc&) {
    fail(ErrorCategory::kResourceExhausted, "hash table allocation failed");
  }
  for (std::uint32_t s : slots) {
    ++table.offsets[s + 1];
  }
  for (std::size_t s = 0; s < slot_count; ++s) {
    table.offsets[s + 1] += table.offsets[s];
  }
  std::vector<std::uint32_t> cursor(table.offsets.begin(), table.offsets.end() - 1);
  for (std::size_t p = 0; p < slots.size(); ++p) {
    table.ids[cursor[slots[p]]++] = static_cast<PointId>(p);
  }
  return table;
}

template <bool kParallel>
HashIndex build_impl(std::shared_ptr<const NormalizedDataset> data, const IndexConfig& config) {
  validate(config);
  require(data != nullptr && data->size() > 0, ErrorCategory::kInvalidArgument, "build_index: empty dataset");
  require(data->size() < (std::size_t{1} << 32), ErrorCategory::kInvalidArgument,
          "build_index: point ids must fit in 32 bits");
  const auto walks = make_walks(*data, config);
  const std::size_t slot_count = std::size_t{1} << config.slot_bits;
  const std::uint64_t mask = slot_count - 1;
  const auto n = static_cast<std::int64_t>(data->size());

  std::vector<HashTable> tables;
  tables.reserve(config.tables);
  std::vector<std::uint32_t> slots(data->size());
  for (std::size_t t = 0; t < config.tables; ++t) {
    auto family = make_family(*data, config, walks, t);
    if constexpr (kParallel) {
#pragma omp parallel for schedule(static)
      for (std::int64_t p = 0; p < n; ++p) {
        const auto key = hash_point(family, data->point(static_cast<std::size_t>(p)));
        slots[static_cast<std::size_t>(p)] = static_cast<std::uint32_t>(mix_key(key) & mask);
      }
    } else {
      for (std::int64_t p = 0; p < n; ++p) {
        const auto key = hash_point(family, data->point(static_cast<std::size_t>(p)));
        slots[static_cast<std::size_t>(p)] = static_cast<std::uint32_t>(mix_key(key) & mask);
      }
    }
    tables.push_back(layout_table(std::move(family), slots, slot_count));
  }
  return HashIndex(config, std::move(data), walks, std::move(tables),
                   build_template(config.functions, config.width, config.default_probes));
}

void write_config(detail::ByteWriter& out, const IndexConfig& config) {
  out.put(static_cast<std::uint8_t>(config.kind));
  out.put(static_cast<std::uint32_t>(config.functions));
  out.put_f64(config.width);
  out.put(static_cast<std::uint32_t>(config.tables));
  out.put(static_cast<std::uint32_t>(config.slot_bits));
  out.put(config.seed);
  out.put(static_cast<std::uint32_t>(config.default_probes));
  out.put(config.walk_margin);
}

IndexConfig read_config(detail::ByteReader& in) {
  IndexConfig config;
  const auto kind = in.get<std::uint8_t>();
  require(kind <= 2, ErrorCategory::kCorruption, "index file: unknown hash family");
  config.kind = static_cast<HashFamilyKind>(kind);
  config.functions = in.get<std::uint32_t>();
  config.width = in.get_f64();
  config.tables = in.get<std::uint32_t>();
  config.slot_bits = in.get<std::uint32_t>();
  config.seed = in.get<std::uint64_t>();
  config.default_probes = in.get<std::uint32_t>();
  config.walk_margin = in.get<Coord>();
  try {
    validate(config);
  } catch (const Error& e) {
    fail(ErrorCategory::kCorruption, std::string("index file: bad config: ") + e.what());
  }
  return config;
}

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  constexpr std::size_t kChunk = 1U << 30;
  for (std::size_t pos = 0; pos < bytes.size(); pos += kChunk) {
    const std::size_t len = std::min(kChunk, bytes.size() - pos);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), static_cast<uInt>(len));
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void validate(const IndexConfig& config) {
  require(config.tables >= 1, ErrorCategory::kInvalidArgument, "index needs L >= 1");
  require(config.functions >= 1 && config.functions <= 64, ErrorCategory::kInvalidArgument,
          "index needs 1 <= M <= 64");
  require(config.slot_bits >= 8 && config.slot_bits <= 30, ErrorCategory::kInvalidArgument,
          "slot bits must lie in [8, 30]");
  require(std::isfinite(config.width) && config.width > 0.0, ErrorCategory::kInvalidArgument,
          "bucket width must be positive");
  require(config.walk_margin >= 0 && config.walk_margin % 2 == 0 && config.walk_margin <= kMaxWalkUniverse,
          ErrorCategory::kInvalidArgument, "walk margin must be an even integer in [0, 32766]");
  if (config.kind == HashFamilyKind::kRandomWalk) {
    require(config.width >= 2.0 && std::floor(config.width) == config.width && std::fmod(config.width, 2.0) == 0.0,
            ErrorCategory::kInvalidArgument, "random-walk bucket width must be a positive even integer");
  }
}

std::uint64_t mix_key(std::span<const std::int64_t> key) noexcept {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::int64_t k : key) {
    h = fmix64(h ^ static_cast<std::uint64_t>(k));
  }
  return h;
}

HashIndex::HashIndex(IndexConfig config, std::shared_ptr<const NormalizedDataset> data,
                     std::shared_ptr<const RandomWalkTable> walks, std::vector<HashTable> tables,
                     Template probe_template)
    : config_(config),
      data_(std::move(data)),
      walks_(std::move(walks)),
      tables_(std::move(tables)),
      template_(std::move(probe_template)),
      slot_mask_((std::uint64_t{1} << config.slot_bits) - 1) {
  validate(config_);
  require(tables_.size() == config_.tables, ErrorCategory::kInvalidArgument, "table count does not match L");
  const std::size_t slot_count = std::size_t{1} << config_.slot_bits;
  for (const auto& table : tables_) {
    require(table.offsets.size() == slot_count + 1 && table.ids.size() == data_->size() &&
                table.offsets.back() == data_->size(),
            ErrorCategory::kCorruption, "hash table layout does not match the dataset");
    std::size_t occupied = 0;
    std::size_t longest = 0;
    for (std::size_t s = 0; s < slot_count; ++s) {
      require(table.offsets[s] <= table.offsets[s + 1], ErrorCategory::kCorruption, "slot offsets not monotone");
      const std::size_t len = table.offsets[s + 1] - table.offsets[s];
      occupied += len > 0 ? 1 : 0;
      longest = std::max(longest, len);
    }
    stats_.occupied_slots.push_back(occupied);
    stats_.longest_chain.push_back(longest);
  }
}

std::size_t HashIndex::index_bytes() const noexcept {
  std::size_t bytes = 0;
  for (const auto& table : tables_) {
    bytes += table.offsets.size() * sizeof(std::uint32_t) + table.ids.size() * sizeof(PointId);
    bytes += (table.family.offsets().size() + table.family.projections().size()) * sizeof(double);
  }
  return bytes;
}

HashIndex build_index(std::shared_ptr<const NormalizedDataset> data, const IndexConfig& config) {
  return build_impl<true>(std::move(data), config);
}

namespace reference {
HashIndex build_index(std::shared_ptr<const NormalizedDataset> data, const IndexConfig& config) {
  return build_impl<false>(std::move(data), config);
}
}  // namespace reference

std::span<const PointId> probe_bucket(const HashIndex& index, std::size_t table, std::span<const std::int64_t> key) {
  require(table < index.tables().size(), ErrorCategory::kOutOfRange, "probe_bucket: table index out of range");
  const auto& t = index.tables()[table];
  const std::uint64_t slot = index.slot_of(key);
  return {t.ids.data() + t.offsets[slot], t.offsets[slot + 1] - t.offsets[slot]};
}

void save_index(const HashIndex& index, const std::filesystem::path& path) {
  detail::ByteWriter out;
  const auto& data = index.data();
  out.put_bytes(kMagic);
  out.put(kIndexFormatVersion);
  write_config(out, index.config());
  out.put(static_cast<std::uint64_t>(data.size()));
  out.put(static_cast<std::uint32_t>(data.dim()));
  out.put_f64(data.params().scale);
  out.put_array(data.params().shift);
  out.put_array(data.coords());

  const auto& walks = index.walks();
  out.put(static_cast<std::uint8_t>(walks ? 1 : 0));
  if (walks) {
    out.put(walks->seed());
    out.put_array(walks->caps());
    out.put_array(walks->entries());
  }
  for (const auto& table : index.tables()) {
    out.put(table.family.seed());
    out.put_array(table.family.offsets());
    out.put_array(table.family.projections());
    out.put_array(table.offsets);
    out.put_array(table.ids);
  }
  const auto& tmpl = index.probe_template();
  out.put(static_cast<std::uint64_t>(tmpl.subsets.size()));
  for (std::size_t i = 0; i < tmpl.subsets.size(); ++i) {
    out.put_array(tmpl.subsets[i]);
    out.put_f64(tmpl.expected_scores[i]);
  }
  out.put(crc_of(out.buffer()));

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    require(file.good(), ErrorCategory::kIo, "cannot open '" + tmp + "' for writing");
    file.write(out.buffer().data(), static_cast<std::streamsize>(out.buffer().size()));
    require(file.good(), ErrorCategory::kIo, "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorCategory::kIo, "cannot move index into place: " + ec.message());
}

HashIndex load_index(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  require(file.good(), ErrorCategory::kIo, "cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  require(bytes.size() >= kMagic.size() + 8, ErrorCategory::kCorruption, "index file is truncated");
  require(std::string_view(bytes).substr(0, kMagic.size()) == kMagic, ErrorCategory::kFormat,
          "'" + path.string() + "' is not an index file");

  const std::string_view body(bytes.data(), bytes.size() - 4);
  detail::ByteReader trailer(std::string_view(bytes).substr(bytes.size() - 4));
  const auto version = detail::ByteReader(body.substr(kMagic.size())).get<std::uint32_t>();
  require(version == kIndexFormatVersion, ErrorCategory::kVersionMismatch,
          "index format version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kIndexFormatVersion) + ")");
  require(trailer.get<std::uint32_t>() == crc_of(body), ErrorCategory::kCorruption, "index file checksum mismatch");

  detail::ByteReader in(body);
  in.get_bytes(kMagic.size());
  in.get<std::uint32_t>();
  const IndexConfig config = read_config(in);
  const auto n = in.get<std::uint64_t>();
  const auto dim = in.get<std::uint32_t>();
  const std::size_t limit = body.size();
  NormalizationParams params;
  params.scale = in.get_f64();
  params.shift = in.get_array<double>(limit);
  auto coords = in.get_array<Coord>(limit);
  require(coords.size() == n * dim, ErrorCategory::kCorruption, "index file: coordinate count mismatch");

  try {
    auto data = std::make_shared<const NormalizedDataset>(dim, std::move(coords), std::move(params));

    std::shared_ptr<const RandomWalkTable> walks;
    if (in.get<std::uint8_t>() != 0) {
      const auto walk_seed = in.get<std::uint64_t>();
      auto caps = in.get_array<Coord>(limit);
      auto entries = in.get_array<std::int16_t>(limit);
      walks = std::make_shared<const RandomWalkTable>(config.tables, config.functions, std::move(caps), walk_seed,
                                                      std::move(entries));
    }
    require((walks != nullptr) == (config.kind == HashFamilyKind::kRandomWalk), ErrorCategory::kCorruption,
            "index file: walk section does not match the hash family");

    std::vector<HashTable> tables;
    for (std::size_t t = 0; t < config.tables; ++t) {
      HashTable table;
      const auto seed = in.get<std::uint64_t>();
      auto offsets = in.get_array<double>(limit);
      auto projections = in.get_array<double>(limit);
      table.family = LshFunctionVector(config.kind, dim, config.width, seed, std::move(offsets), std::move(projections),
                                       walks, t);
      table.offsets = in.get_array<std::uint32_t>(limit);
      table.ids = in.get_array<PointId>(limit);
      for (PointId id : table.ids) {
        require(id < n, ErrorCategory::kCorruption, "index file: point id out of range");
      }
      tables.push_back(std::move(table));
    }

    Template tmpl;
    tmpl.functions = config.functions;
    tmpl.width = config.width;
    const auto count = in.get<std::uint64_t>();
    require(count <= limit, ErrorCategory::kCorruption, "index file: template too long");
    for (std::uint64_t i = 0; i < count; ++i) {
      auto subset = in.get_array<std::uint32_t>(2 * config.functions);
      for (auto r : subset) {
        require(r < 2 * config.functions, ErrorCategory::kCorruption, "index file: template rank out of range");
      }
      tmpl.subsets.push_back(std::move(subset));
      tmpl.expected_scores.push_back(in.get_f64());
    }
    require(in.at_end(), ErrorCategory::kCorruption, "index file has trailing bytes");
    return HashIndex(config, std::move(data), std::move(walks), std::move(tables), std::move(tmpl));
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::kCorruption) throw;
    fail(ErrorCategory::kCorruption, std::string("index file: ") + e.what());
  }
}

}  // namespace rwlsh
