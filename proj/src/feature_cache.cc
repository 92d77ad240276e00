// feature_cache.cc

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

#include "minibench/feature_cache.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "minibench/common.h"

namespace minibench {

static_assert(std::endian::native == std::endian::little,
              "cache I/O assumes a little-endian host");

using nlohmann::json;
using nlohmann::ordered_json;

void FeatureRecord::Validate() const {
  if (num_layers < 1 || num_frames < 1 || dim < 1)
    throw InvalidArgument("record '" + utt_id + "' has an empty shape");
  if (num_layers > std::numeric_limits<std::uint16_t>::max())
    throw InvalidArgument("record '" + utt_id + "' has too many layers");
  if (data.size() != static_cast<std::size_t>(num_layers) * num_frames * dim)
    throw InvalidArgument("record '" + utt_id + "' payload size does not match its shape");
  for (float v : data)
    if (!std::isfinite(v))
      throw InvalidArgument("record '" + utt_id + "' contains a non-finite value");
}

FeatureRecord PooledRecord::AsRecord() const {
  FeatureRecord r(utt_id, num_layers, 1, dim);
  r.data = data;
  return r;
}

PooledRecord PooledRecord::FromRecord(const FeatureRecord &r) {
  if (r.num_frames != 1)
    throw InvalidArgument("pooled record '" + r.utt_id + "' must have exactly one frame");
  PooledRecord p;
  p.utt_id = r.utt_id;
  p.num_layers = r.num_layers;
  p.dim = r.dim;
  p.data = r.data;
  return p;
}

void LayerNormFrame(std::span<const float> in, std::span<float> out) {
  double mean = 0.0;
  for (float v : in) mean += v;
  mean /= static_cast<double>(in.size());
  double var = 0.0;
  for (float v : in) var += (v - mean) * (v - mean);
  var /= static_cast<double>(in.size());
  const double inv = 1.0 / std::sqrt(var + kLayerNormEpsilon);
  for (std::size_t i = 0; i < in.size(); ++i)
    out[i] = static_cast<float>((in[i] - mean) * inv);
}

PooledRecord PoolRecord(const FeatureRecord &r, bool normalize) {
  r.Validate();
  PooledRecord p;
  p.utt_id = r.utt_id;
  p.num_layers = r.num_layers;
  p.dim = r.dim;
  p.data.assign(static_cast<std::size_t>(r.num_layers) * r.dim, 0.0f);
  std::vector<float> frame(static_cast<std::size_t>(r.dim));
  std::vector<double> acc(static_cast<std::size_t>(r.dim));
  for (int l = 0; l < r.num_layers; ++l) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int t = 0; t < r.num_frames; ++t) {
      std::span<const float> f = r.Frame(l, t);
      if (normalize) {
        LayerNormFrame(f, frame);
        f = frame;
      }
      for (int d = 0; d < r.dim; ++d) acc[d] += f[d];
    }
    for (int d = 0; d < r.dim; ++d)
      p.data[static_cast<std::size_t>(l) * r.dim + d] =
          static_cast<float>(acc[d] / r.num_frames);
  }
  return p;
}

std::size_t DTypeBytes(DType dtype) {
  switch (dtype) {
    case DType::kF32: return 4;
  }
  throw InvalidArgument("unknown dtype");
}

std::string EncodeRecord(const FeatureRecord &r) {
  r.Validate();
  std::string out;
  out.reserve(kRecordHeaderBytes + r.data.size() * 4);
  out.append(kCacheMagic, 4);
  PutLE<std::uint32_t>(&out, kCacheVersion);
  PutLE<std::uint8_t>(&out, static_cast<std::uint8_t>(DType::kF32));
  PutLE<std::uint16_t>(&out, static_cast<std::uint16_t>(r.num_layers));
  PutLE<std::uint32_t>(&out, static_cast<std::uint32_t>(r.num_frames));
  PutLE<std::uint32_t>(&out, static_cast<std::uint32_t>(r.dim));
  out.append(reinterpret_cast<const char *>(r.data.data()), r.data.size() * 4);
  return out;
}

FeatureRecord DecodeRecord(std::string_view b, std::string utt_id) {
  if (b.size() < kRecordHeaderBytes)
    throw FormatError("record '" + utt_id + "': truncated header");
  if (std::memcmp(b.data(), kCacheMagic, 4) != 0)
    throw FormatError("record '" + utt_id + "': bad magic");
  if (GetLE<std::uint32_t>(b, 4) != kCacheVersion)
    throw FormatError("record '" + utt_id + "': unsupported version " +
                      std::to_string(GetLE<std::uint32_t>(b, 4)));
  if (GetLE<std::uint8_t>(b, 8) != static_cast<std::uint8_t>(DType::kF32))
    throw FormatError("record '" + utt_id + "': unsupported dtype");
  const std::uint16_t layers = GetLE<std::uint16_t>(b, 9);
  const std::uint32_t frames = GetLE<std::uint32_t>(b, 11);
  const std::uint32_t dim = GetLE<std::uint32_t>(b, 15);
  if (layers == 0 || frames == 0 || dim == 0)
    throw FormatError("record '" + utt_id + "': empty shape");
  const std::uint64_t count = std::uint64_t{layers} * frames * dim;
  if (b.size() - kRecordHeaderBytes < count * 4)
    throw FormatError("record '" + utt_id + "': truncated payload");
  FeatureRecord r(std::move(utt_id), layers, static_cast<int>(frames), static_cast<int>(dim));
  std::memcpy(r.data.data(), b.data() + kRecordHeaderBytes, count * 4);
  return r;
}

void CacheIndex::Add(IndexEntry entry) {
  if (by_id_.count(entry.id)) throw InvalidArgument("duplicate cache id '" + entry.id + "'");
  total_bytes_ += entry.length;
  by_id_.emplace(entry.id, order_.size());
  order_.push_back(std::move(entry));
}

const IndexEntry *CacheIndex::Find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &order_[it->second];
}

void CacheIndex::CheckNonOverlapping() const {
  std::map<std::string, std::vector<std::pair<std::uint64_t, std::uint64_t>>> spans;
  for (const auto &e : order_) spans[e.file].emplace_back(e.offset, e.offset + e.length);
  for (auto &[file, v] : spans) {
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i].first < v[i - 1].second)
        throw InvalidArgument("overlapping records in " + file);
  }
}

std::string CacheIndex::Serialize() const {
  std::string out;
  for (const auto &e : order_) {
    ordered_json j;
    j["id"] = e.id;
    j["file"] = e.file;
    j["offset"] = e.offset;
    j["len"] = e.length;
    out += j.dump();
    out += '\n';
  }
  return out;
}

CacheIndex CacheIndex::Parse(std::string_view text) {
  CacheIndex index;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      json j = json::parse(line);
      index.Add({j.at("id").get<std::string>(), j.at("file").get<std::string>(),
                 j.at("offset").get<std::uint64_t>(), j.at("len").get<std::uint64_t>()});
    } catch (const std::exception &e) {
      throw FormatError("index line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return index;
}

CacheWriter::CacheWriter(std::filesystem::path dir, std::string data_file)
    : dir_(std::move(dir)), data_file_(std::move(data_file)) {
  std::filesystem::create_directories(dir_);
  out_.open(dir_ / data_file_, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error("cannot open cache file " + (dir_ / data_file_).string());
}

CacheWriter::~CacheWriter() {
  if (!closed_) {
    try {
      Close();
    } catch (...) {
    }
  }
}

IndexEntry CacheWriter::Write(const FeatureRecord &record) {
  if (closed_) throw Error("cache writer already closed");
  if (index_.Contains(record.utt_id))
    throw InvalidArgument("duplicate cache id '" + record.utt_id + "'");
  const std::string bytes = EncodeRecord(record);
  out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out_) throw Error("cache write failed for '" + record.utt_id + "'");
  IndexEntry e{record.utt_id, data_file_, offset_, bytes.size()};
  offset_ += bytes.size();
  index_.Add(e);
  return e;
}

void CacheWriter::Close() {
  if (closed_) return;
  closed_ = true;
  out_.close();
  if (!out_) throw Error("cache close failed in " + dir_.string());
  WriteFileAtomic(dir_ / "index.jsonl", index_.Serialize());
}

CacheReader::CacheReader(std::filesystem::path dir)
    : dir_(std::move(dir)),
      index_(CacheIndex::Parse(ReadFileBytes(dir_ / "index.jsonl"))) {}

FeatureRecord CacheReader::Read(std::string_view utt_id) const {
  const IndexEntry *e = index_.Find(utt_id);
  if (!e) throw NotFoundError("no cached record for '" + std::string(utt_id) + "'");
  std::ifstream in(dir_ / e->file, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + (dir_ / e->file).string());
  in.seekg(static_cast<std::streamoff>(e->offset));
  std::string bytes(e->length, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(e->length));
  bytes.resize(static_cast<std::size_t>(in.gcount()));
  FeatureRecord r = DecodeRecord(bytes, std::string(utt_id));
  if (kRecordHeaderBytes + r.data.size() * 4 != e->length)
    throw FormatError("record '" + std::string(utt_id) + "': length disagrees with index");
  return r;
}

std::int64_t FrameRule::NumFrames(std::int64_t n) const {
  if (n < window) return 0;
  return (n - window) / hop + 1;
}

StorageEstimate EstimateStorage(const Manifest &manifest, int num_layers, int dim,
                                DType dtype, bool pooled, const FrameRule &rule) {
  StorageEstimate est;
  const std::uint64_t per_frame =
      static_cast<std::uint64_t>(num_layers) * static_cast<std::uint64_t>(dim) * DTypeBytes(dtype);
  for (const auto &u : manifest.utterances) {
    const std::int64_t frames = rule.NumFrames(u.num_samples);
    if (frames <= 0) continue;
    est.payload_bytes += pooled ? per_frame : per_frame * static_cast<std::uint64_t>(frames);
    est.header_bytes += kRecordHeaderBytes;
    ++est.num_records;
  }
  return est;
}

}  // namespace minibench
