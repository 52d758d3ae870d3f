// Copyright 2026 The mgdrec Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Run manifests: content hashes of inputs, config snapshot, outputs.

#pragma once

#include <array>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "mgdrec/errors.hpp"

#ifndef MGDREC_VERSION
#define MGDREC_VERSION "0.0.0"
#endif

namespace mgdrec {

/// Incremental SHA-256, hex output.
class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256: init failed");
    }
  }

  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("sha256: update failed");
  }
  void update(const std::string& s) { update(s.data(), s.size()); }

  void update_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::array<char, 1 << 16> buf{};
    while (in) {
      in.read(buf.data(), buf.size());
      if (in.gcount() > 0) update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw std::runtime_error("sha256: final failed");
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string sha256_file(const std::filesystem::path& path) {
  Sha256 h;
  h.update_file(path);
  return h.hex();
}

/// Hash over the files of a dataset bundle, in fixed order, each prefixed
/// by its name.
inline std::string dataset_fingerprint(const std::filesystem::path& dir) {
  Sha256 h;
  for (const char* name : {"meta.json", "train.bin", "val.bin", "test.bin"}) {
    h.update(std::string(name) + '\n');
    h.update_file(dir / name);
  }
  return h.hex();
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// One per artifact directory. Timestamps live here and nowhere else.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json inputs = nlohmann::json::object();  // name -> {path, sha256}
  std::vector<std::string> outputs;
  std::string started_at = utc_timestamp();
  std::string finished_at;

  void add_input_file(const std::string& name, const std::filesystem::path& path) {
    inputs[name] = {{"path", path.generic_string()}, {"sha256", sha256_file(path)}};
  }
  void add_input_dataset(const std::string& name, const std::filesystem::path& dir) {
    inputs[name] = {{"path", dir.generic_string()}, {"sha256", dataset_fingerprint(dir)}};
  }

  nlohmann::json to_json() const {
    return {{"command", command},
            {"version", MGDREC_VERSION},
            {"seed", seed},
            {"config", config},
            {"inputs", inputs},
            {"outputs", outputs},
            {"started_at", started_at},
            {"finished_at", finished_at}};
  }

  void write(const std::filesystem::path& dir) {
    finished_at = utc_timestamp();
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    out << to_json().dump(2) << '\n';
  }
};

}  // namespace mgdrec
