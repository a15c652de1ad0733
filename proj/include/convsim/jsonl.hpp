// convsim/jsonl.hpp

// Copyright 2026  The convsim authors

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

// Line-oriented JSON manifests. Every manifest in the toolkit is UTF-8 text
// with one JSON object per line; blank lines are ignored. Errors carry
// "path:line" context.

#ifndef CONVSIM_JSONL_HPP_
#define CONVSIM_JSONL_HPP_

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "json.hpp"

#include "convsim/error.hpp"

namespace convsim {

using Json = nlohmann::json;

inline void for_each_jsonl(const std::string& path,
                           const std::function<void(const Json&, int)>& fn) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const std::exception& e) {
      throw InputError(path + ":" + std::to_string(line_no) +
                       ": malformed record: " + e.what());
    }
    if (!rec.is_object()) {
      throw InputError(path + ":" + std::to_string(line_no) +
                       ": record is not a JSON object");
    }
    fn(rec, line_no);
  }
}

inline const Json& require_field(const Json& rec, const char* key,
                                 const std::string& ctx) {
  auto it = rec.find(key);
  if (it == rec.end()) throw InputError(ctx + ": missing field '" + key + "'");
  return *it;
}

inline std::string field_str(const Json& rec, const char* key,
                             const std::string& ctx) {
  const Json& v = require_field(rec, key, ctx);
  if (!v.is_string()) throw InputError(ctx + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

inline double field_num(const Json& rec, const char* key,
                        const std::string& ctx) {
  const Json& v = require_field(rec, key, ctx);
  if (!v.is_number()) throw InputError(ctx + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline long long field_int(const Json& rec, const char* key,
                           const std::string& ctx) {
  const Json& v = require_field(rec, key, ctx);
  if (!v.is_number_integer())
    throw InputError(ctx + ": field '" + key + "' must be an integer");
  return v.get<long long>();
}

/// Writes text to `path` atomically (temp file + rename), so readers and
/// resumed batch runs never observe a half-written file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to " + tmp);
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

}  // namespace convsim

#endif  // CONVSIM_JSONL_HPP_
