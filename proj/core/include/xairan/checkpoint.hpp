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

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>

#include "xairan/model.hpp"

namespace xairan {

// A trained predictor together with the normalization and windowing it was
// trained with.
struct Checkpoint {
  ModelParams params;
  Normalizer norm;
  std::size_t window = kDefaultWindow;
  std::size_t horizon = 1;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Versioned plain-text key/value format. One `key value...` line per entry,
// matrices row-major, doubles with 17 significant digits so that a
// write/read cycle is exact.
void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace xairan
