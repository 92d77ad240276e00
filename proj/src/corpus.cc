// corpus.cc

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

#include "minibench/corpus.h"

#include <set>
#include <sstream>

#include "minibench/common.h"

namespace minibench {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view TaskKindName(TaskKind kind) {
  switch (kind) {
    case TaskKind::kAsr: return "ASR";
    case TaskKind::kSid: return "SID";
    case TaskKind::kSe: return "SE";
    case TaskKind::kSs: return "SS";
  }
  return "?";
}

TaskKind ParseTaskKind(std::string_view name) {
  std::string n = ToLower(name);
  if (n == "asr") return TaskKind::kAsr;
  if (n == "sid") return TaskKind::kSid;
  if (n == "se") return TaskKind::kSe;
  if (n == "ss") return TaskKind::kSs;
  throw InvalidArgument("unknown task kind '" + std::string(name) + "'");
}

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

const Utterance *Manifest::Find(std::string_view id) const {
  for (const auto &u : utterances)
    if (u.id == id) return &u;
  return nullptr;
}

std::filesystem::path Manifest::Resolve(const std::string &ref) const {
  std::filesystem::path p(ref);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

void ValidateForTask(const Utterance &utt, TaskKind kind) {
  auto missing = [&](const std::string &field) {
    throw InvalidArgument("utterance '" + utt.id + "' lacks field '" + field +
                          "' required by task " + std::string(TaskKindName(kind)));
  };
  switch (kind) {
    case TaskKind::kAsr:
      if (!utt.transcript) missing("text");
      break;
    case TaskKind::kSid:
      if (!utt.speaker) missing("speaker");
      break;
    case TaskKind::kSe:
      for (const char *k : {"clean", "noisy"})
        if (!utt.refs.count(k)) missing(k);
      break;
    case TaskKind::kSs:
      for (const char *k : {"src1", "src2", "mix"})
        if (!utt.refs.count(k)) missing(k);
      break;
  }
}

namespace {

Utterance UtteranceFromJson(const json &j) {
  if (!j.is_object()) throw FormatError("record is not a JSON object");
  Utterance u;
  json extra = json::object();
  bool have_id = false, have_n = false;
  for (const auto &[key, value] : j.items()) {
    if (key == "id") {
      u.id = value.get<std::string>();
      have_id = true;
    } else if (key == "audio") {
      u.audio = value.get<std::string>();
    } else if (key == "sr") {
      u.sample_rate = value.get<int>();
    } else if (key == "n") {
      u.num_samples = value.get<std::int64_t>();
      have_n = true;
    } else if (key == "speaker") {
      if (!value.is_null()) u.speaker = value.get<std::string>();
    } else if (key == "text") {
      if (!value.is_null()) u.transcript = SplitWhitespace(value.get<std::string>());
    } else if (key == "score") {
      if (!value.is_null()) u.score = value.get<double>();
    } else if (key == "split") {
      u.split = ParseSplit(value.get<std::string>());
    } else if (key == "clean" || key == "noisy" || key == "src1" ||
               key == "src2" || key == "mix") {
      u.refs[key] = value.get<std::string>();
    } else {
      extra[key] = value;
    }
  }
  if (!have_id || u.id.empty()) throw FormatError("missing field 'id'");
  if (!have_n) throw FormatError("missing field 'n'");
  if (u.num_samples <= 0) throw FormatError("field 'n' must be positive");
  if (u.sample_rate <= 0) throw FormatError("field 'sr' must be positive");
  u.extra = std::move(extra);
  return u;
}

}  // namespace

Manifest ParseManifest(std::string_view text, std::optional<TaskKind> kind,
                       std::string_view source) {
  Manifest m;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto where = [&] {
      return std::string(source) + ":" + std::to_string(line_no) + ": ";
    };
    try {
      json j = json::parse(line);
      if (j.is_object() && j.contains("_provenance")) {
        if (!m.utterances.empty())
          throw FormatError("provenance record must be the first record");
        m.provenance = j["_provenance"];
        continue;
      }
      Utterance u = UtteranceFromJson(j);
      if (!ids.insert(u.id).second) throw FormatError("duplicate id '" + u.id + "'");
      if (kind) ValidateForTask(u, *kind);
      m.utterances.push_back(std::move(u));
    } catch (const json::exception &e) {
      throw FormatError(where() + e.what());
    } catch (const Error &e) {
      throw FormatError(where() + e.what());
    }
  }
  return m;
}

Manifest LoadManifest(const std::filesystem::path &path,
                      std::optional<TaskKind> kind) {
  Manifest m = ParseManifest(ReadFileBytes(path), kind, path.string());
  m.base_dir = path.parent_path();
  return m;
}

ordered_json UtteranceToJson(const Utterance &u) {
  ordered_json j;
  j["id"] = u.id;
  j["audio"] = u.audio;
  j["sr"] = u.sample_rate;
  j["n"] = u.num_samples;
  if (u.speaker) j["speaker"] = *u.speaker;
  if (u.transcript) {
    std::string text;
    for (const auto &tok : *u.transcript) {
      if (!text.empty()) text += ' ';
      text += tok;
    }
    j["text"] = text;
  }
  if (u.score) j["score"] = *u.score;
  j["split"] = std::string(SplitName(u.split));
  for (const char *k : kRefKeys) {
    auto it = u.refs.find(k);
    if (it != u.refs.end()) j[k] = it->second;
  }
  // json::object iterates in sorted key order.
  for (const auto &[key, value] : u.extra.items()) j[key] = value;
  return j;
}

std::string SerializeManifest(const Manifest &m) {
  std::ostringstream out;
  if (!m.provenance.is_null()) {
    ordered_json p;
    p["_provenance"] = m.provenance;
    out << p.dump() << '\n';
  }
  for (const auto &u : m.utterances) out << UtteranceToJson(u).dump() << '\n';
  return out.str();
}

void SaveManifest(const std::filesystem::path &path, const Manifest &m) {
  WriteFileAtomic(path, SerializeManifest(m));
}

}  // namespace minibench
