// minibench/feature_cache.h

// Copyright 2026  The minibench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MINIBENCH_FEATURE_CACHE_H_
#define MINIBENCH_FEATURE_CACHE_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "minibench/corpus.h"

namespace minibench {

/// Multi-layer representation of one utterance, stored layer-major
/// [layer][frame][dim].
struct FeatureRecord {
  std::string utt_id;
  int num_layers = 0;
  int num_frames = 0;
  int dim = 0;
  std::vector<float> data;

  FeatureRecord() = default;
  FeatureRecord(std::string id, int layers, int frames, int d)
      : utt_id(std::move(id)), num_layers(layers), num_frames(frames), dim(d),
        data(static_cast<std::size_t>(layers) * frames * d, 0.0f) {}

  float &at(int l, int t, int d) {
    return data[(static_cast<std::size_t>(l) * num_frames + t) * dim + d];
  }
  float at(int l, int t, int d) const {
    return data[(static_cast<std::size_t>(l) * num_frames + t) * dim + d];
  }
  std::span<float> Frame(int l, int t) {
    return {data.data() + (static_cast<std::size_t>(l) * num_frames + t) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<const float> Frame(int l, int t) const {
    return {data.data() + (static_cast<std::size_t>(l) * num_frames + t) * dim,
            static_cast<std::size_t>(dim)};
  }

  // Throws InvalidArgument unless L, T, D >= 1, the payload size matches and
  // every value is finite.
  void Validate() const;
};

/// Time-pooled record, [layer][dim].
struct PooledRecord {
  std::string utt_id;
  int num_layers = 0;
  int dim = 0;
  std::vector<float> data;

  std::span<const float> Layer(int l) const {
    return {data.data() + static_cast<std::size_t>(l) * dim, static_cast<std::size_t>(dim)};
  }
  // Single-frame view, which is how pooled records are stored on disk.
  FeatureRecord AsRecord() const;
  static PooledRecord FromRecord(const FeatureRecord &single_frame);
};

inline constexpr float kLayerNormEpsilon = 1e-5f;

// Zero mean, unit variance over the frame's dimensions; no affine terms.
void LayerNormFrame(std::span<const float> in, std::span<float> out);

// Per layer, mean over frames of the (optionally layer-normalized) frames.
// Accumulates in double.
PooledRecord PoolRecord(const FeatureRecord &record, bool normalize);

// --- Binary cache format -------------------------------------------------
//
//   offset size  field
//   0      4     magic "MSPB"
//   4      4     version (u32, currently 1)
//   8      1     dtype code (u8, 1 = f32)
//   9      2     L (u16)
//   11     4     T (u32)
//   15     4     D (u32)
//   19     4*L*T*D payload, layer-major, f32 little-endian
//
// All integers are little-endian.  Records are concatenated in a data file
// and located through a JSON-lines index {"id","file","offset","len"}.

inline constexpr char kCacheMagic[4] = {'M', 'S', 'P', 'B'};
inline constexpr std::uint32_t kCacheVersion = 1;
inline constexpr std::size_t kRecordHeaderBytes = 19;

enum class DType : std::uint8_t { kF32 = 1 };
std::size_t DTypeBytes(DType dtype);

std::string EncodeRecord(const FeatureRecord &record);
// Throws FormatError on bad magic, version, dtype or a truncated payload.
FeatureRecord DecodeRecord(std::string_view bytes, std::string utt_id);

struct IndexEntry {
  std::string id;
  std::string file;  // relative to the index directory
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

/// Location of every record of a cache directory.
class CacheIndex {
 public:
  void Add(IndexEntry entry);
  const IndexEntry *Find(std::string_view id) const;
  bool Contains(std::string_view id) const { return Find(id) != nullptr; }
  std::size_t size() const { return order_.size(); }
  std::uint64_t total_bytes() const { return total_bytes_; }
  const std::vector<IndexEntry> &entries() const { return order_; }

  // Throws InvalidArgument if two records of one file overlap.
  void CheckNonOverlapping() const;

  std::string Serialize() const;
  static CacheIndex Parse(std::string_view text);

 private:
  std::vector<IndexEntry> order_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::uint64_t total_bytes_ = 0;
};

/// Appends records to `dir`/`data_file` and publishes `dir`/index.jsonl on
/// Close().  One writer per cache directory.
class CacheWriter {
 public:
  CacheWriter(std::filesystem::path dir, std::string data_file = "features.msb");
  ~CacheWriter();
  CacheWriter(const CacheWriter &) = delete;
  CacheWriter &operator=(const CacheWriter &) = delete;

  // Returns the index delta of the written record.
  IndexEntry Write(const FeatureRecord &record);
  void Close();
  const CacheIndex &index() const { return index_; }

 private:
  std::filesystem::path dir_;
  std::string data_file_;
  std::ofstream out_;
  std::uint64_t offset_ = 0;
  CacheIndex index_;
  bool closed_ = false;
};

/// Read access to a published cache directory; safe for concurrent readers.
class CacheReader {
 public:
  explicit CacheReader(std::filesystem::path dir);
  const CacheIndex &index() const { return index_; }
  const std::filesystem::path &dir() const { return dir_; }
  // Throws NotFoundError for an absent id and FormatError for a corrupt record.
  FeatureRecord Read(std::string_view utt_id) const;

 private:
  std::filesystem::path dir_;
  CacheIndex index_;
};

// --- Storage accounting --------------------------------------------------

/// Frames produced for a given number of samples by a window/hop framing
/// without edge padding: floor((n - window) / hop) + 1, or 0 if n < window.
struct FrameRule {
  std::int64_t window = 400;
  std::int64_t hop = 160;
  std::int64_t NumFrames(std::int64_t num_samples) const;
};

struct StorageEstimate {
  std::uint64_t payload_bytes = 0;
  std::uint64_t header_bytes = 0;
  std::uint64_t num_records = 0;
  std::uint64_t total() const { return payload_bytes + header_bytes; }
};

StorageEstimate EstimateStorage(const Manifest &manifest, int num_layers, int dim,
                                DType dtype, bool pooled, const FrameRule &rule);

}  // namespace minibench

#endif  // MINIBENCH_FEATURE_CACHE_H_
