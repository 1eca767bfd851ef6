/*
 * Copyright 2026 The xairan Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "xairan/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "xairan/errors.hpp"

namespace xairan {
namespace {

constexpr std::string_view kMagic = "xairan-checkpoint";
constexpr int kVersion = 1;

std::string fmt17(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc{}) throw IntegrityError("failed to format double");
  return std::string(buf, ptr);
}

template <typename Dense>
void put(std::ostream& out, std::string_view key, const Dense& m) {
  out << key;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ' ' << fmt17(m(r, c));
  }
  out << '\n';
}

using Entries = std::map<std::string, std::vector<std::string>, std::less<>>;

const std::vector<std::string>& field(const Entries& e, std::string_view key, std::size_t count) {
  const auto it = e.find(key);
  if (it == e.end()) throw ParseError("checkpoint: missing key '" + std::string(key) + "'");
  if (it->second.size() != count) {
    throw ParseError("checkpoint: key '" + std::string(key) + "' expects " + std::to_string(count) +
                     " values, got " + std::to_string(it->second.size()));
  }
  return it->second;
}

double to_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError("checkpoint: bad number '" + s + "'");
  }
  return v;
}

std::size_t to_size(const std::string& s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError("checkpoint: bad integer '" + s + "'");
  }
  return v;
}

template <typename Dense>
void fill(Dense& m, const std::vector<std::string>& values) {
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = to_double(values[k++]);
  }
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  const auto& p = ckpt.params;
  out << kMagic << ' ' << kVersion << '\n';
  out << "activation " << (p.activation == Activation::kTanh ? "tanh" : "identity") << '\n';
  out << "features " << p.features() << '\n';
  out << "hidden " << p.hidden() << '\n';
  out << "window " << ckpt.window << '\n';
  out << "horizon " << ckpt.horizon << '\n';
  put(out, "embed_w", p.embed_w);
  put(out, "embed_b", p.embed_b);
  put(out, "attn_v", p.attn_v);
  put(out, "out_w", p.out_w);
  out << "out_b " << fmt17(p.out_b) << '\n';
  put(out, "norm_mean", ckpt.norm.mean);
  put(out, "norm_std", ckpt.norm.std);
  out << "target_mean " << fmt17(ckpt.norm.target_mean) << '\n';
  out << "target_std " << fmt17(ckpt.norm.target_std) << '\n';
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(ckpt, out);
  if (!out) throw Error("write failed: " + path.string());
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("checkpoint: empty input");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kMagic) throw ParseError("checkpoint: bad magic '" + magic + "'");
    if (version != kVersion) {
      throw ParseError("checkpoint: unsupported version " + std::to_string(version));
    }
  }

  Entries entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    std::vector<std::string> values;
    for (std::string v; ls >> v;) values.push_back(std::move(v));
    entries[key] = std::move(values);
  }

  const std::size_t n = to_size(field(entries, "features", 1)[0]);
  const std::size_t h = to_size(field(entries, "hidden", 1)[0]);
  const std::string& act = field(entries, "activation", 1)[0];

  Checkpoint ckpt;
  ckpt.params = ModelParams::zeros(n, h);
  if (act == "tanh") {
    ckpt.params.activation = Activation::kTanh;
  } else if (act == "identity") {
    ckpt.params.activation = Activation::kIdentity;
  } else {
    throw ParseError("checkpoint: unknown activation '" + act + "'");
  }
  ckpt.window = to_size(field(entries, "window", 1)[0]);
  ckpt.horizon = to_size(field(entries, "horizon", 1)[0]);
  fill(ckpt.params.embed_w, field(entries, "embed_w", n * h));
  fill(ckpt.params.embed_b, field(entries, "embed_b", h));
  fill(ckpt.params.attn_v, field(entries, "attn_v", h));
  fill(ckpt.params.out_w, field(entries, "out_w", h));
  ckpt.params.out_b = to_double(field(entries, "out_b", 1)[0]);
  ckpt.norm.mean = Vector::Zero(static_cast<Eigen::Index>(n));
  ckpt.norm.std = Vector::Zero(static_cast<Eigen::Index>(n));
  fill(ckpt.norm.mean, field(entries, "norm_mean", n));
  fill(ckpt.norm.std, field(entries, "norm_std", n));
  ckpt.norm.target_mean = to_double(field(entries, "target_mean", 1)[0]);
  ckpt.norm.target_std = to_double(field(entries, "target_std", 1)[0]);
  ckpt.params.validate();
  return ckpt;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace xairan
