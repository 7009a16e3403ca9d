// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "rwlsh/core.hpp"
#include "rwlsh/hash_family.hpp"
#include "rwlsh/multiprobe.hpp"
#include "rwlsh/walk.hpp"

namespace rwlsh {

struct IndexConfig {
  HashFamilyKind kind = HashFamilyKind::kRandomWalk;
  std::size_t functions = 10;  // M
  double width = 8.0;          // W, in normalized units
  std::size_t tables = 8;      // L
  unsigned slot_bits = 21;     // B: each table has 2^B slots
  std::uint64_t seed = 0;
  std::size_t default_probes = 100;  // T used for the stored template
  /// Even headroom added to every dimension's walk universe (random walk
  /// only), so queries slightly outside the data range can still be hashed.
  Coord walk_margin = 0;

  bool operator==(const IndexConfig&) const = default;
};

void validate(const IndexConfig& config);

/// Folds the M key integers through the MurmurHash3 fmix64 finalizer:
/// h <- fmix64(h ^ k_i), starting from a fixed constant.
std::uint64_t mix_key(std::span<const std::int64_t> key) noexcept;

/// One table: 2^B slots laid out as a CSR array. ids[offsets[s] .. offsets[s+1])
/// are the points whose key mixes to slot s, in ascending id order.
struct HashTable {
  LshFunctionVector family;
  std::vector<std::uint32_t> offsets;
  std::vector<PointId> ids;

  bool operator==(const HashTable&) const = default;
};

struct BuildStats {
  std::vector<std::size_t> occupied_slots;  // per table
  std::vector<std::size_t> longest_chain;   // per table
};

/// L hash tables over a normalized dataset. Immutable after construction and
/// safe for any number of concurrent readers.
class HashIndex {
 public:
  HashIndex(IndexConfig config, std::shared_ptr<const NormalizedDataset> data,
            std::shared_ptr<const RandomWalkTable> walks, std::vector<HashTable> tables, Template probe_template);

  const IndexConfig& config() const noexcept { return config_; }
  const NormalizedDataset& data() const noexcept { return *data_; }
  const std::shared_ptr<const NormalizedDataset>& data_handle() const noexcept { return data_; }
  const std::shared_ptr<const RandomWalkTable>& walks() const noexcept { return walks_; }
  const std::vector<HashTable>& tables() const noexcept { return tables_; }
  const Template& probe_template() const noexcept { return template_; }
  const BuildStats& stats() const noexcept { return stats_; }

  std::uint64_t slot_of(std::span<const std::int64_t> key) const noexcept { return mix_key(key) & slot_mask_; }

  /// Bytes of slot arrays, id arrays and hash parameters. Walk tables are
  /// reported separately by walk_table_bytes().
  std::size_t index_bytes() const noexcept;
  std::size_t walk_table_bytes() const noexcept { return walks_ ? walks_->byte_size() : 0; }

 private:
  IndexConfig config_;
  std::shared_ptr<const NormalizedDataset> data_;
  std::shared_ptr<const RandomWalkTable> walks_;
  std::vector<HashTable> tables_;
  Template template_;
  std::uint64_t slot_mask_ = 0;
  BuildStats stats_;
};

/// Hashes every point into every table. Parallel over points; the slot
/// contents are identical to the serial reference for any thread count.
HashIndex build_index(std::shared_ptr<const NormalizedDataset> data, const IndexConfig& config);

namespace reference {
HashIndex build_index(std::shared_ptr<const NormalizedDataset> data, const IndexConfig& config);
}  // namespace reference

/// Contents of the slot `key` mixes to. May include points with a different
/// key that share the slot.
std::span<const PointId> probe_bucket(const HashIndex& index, std::size_t table, std::span<const std::int64_t> key);

/// Little-endian, versioned, CRC32-checked. The file carries the dataset so a
/// loaded index answers queries on its own.
void save_index(const HashIndex& index, const std::filesystem::path& path);
HashIndex load_index(const std::filesystem::path& path);

inline constexpr std::uint32_t kIndexFormatVersion = 1;

}  // namespace rwlsh
