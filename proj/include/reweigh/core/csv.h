/*
 * Copyright 2026 The Reweigh Authors.
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

#ifndef REWEIGH_CORE_CSV_H_
#define REWEIGH_CORE_CSV_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace reweigh {

// Shortest decimal that round-trips to the same double ("nan", "inf" for
// non-finite values). Deterministic across runs and platforms.
std::string FormatDouble(double v);

// Minimal CSV emitter: a mandatory header, then rows of the same width.
// Fields are not quoted, so they must not contain commas or newlines.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path,
            const std::vector<std::string>& header);

  CsvWriter& Add(double v);
  CsvWriter& Add(std::int64_t v);
  CsvWriter& Add(int v) { return Add(static_cast<std::int64_t>(v)); }
  CsvWriter& Add(std::size_t v) { return Add(static_cast<std::int64_t>(v)); }
  CsvWriter& Add(std::string_view v);
  // Throws InvalidArgument if the row width differs from the header.
  void EndRow();
  // Flushes and throws IoError if any write failed.
  void Close();

 private:
  void Append(std::string_view field);

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t width_;
  std::size_t fields_ = 0;
  std::string line_;
};

}  // namespace reweigh

#endif  // REWEIGH_CORE_CSV_H_
