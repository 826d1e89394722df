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

#include "reweigh/core/csv.h"

#include <cmath>

#include "fmt/format.h"
#include "reweigh/core/errors.h"

namespace reweigh {

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::trunc), width_(header.size()) {
  if (!out_) throw IoError("cannot write " + path.string());
  for (const std::string& h : header) Append(h);
  EndRow();
}

CsvWriter& CsvWriter::Add(double v) {
  Append(FormatDouble(v));
  return *this;
}

CsvWriter& CsvWriter::Add(std::int64_t v) {
  Append(fmt::format("{}", v));
  return *this;
}

CsvWriter& CsvWriter::Add(std::string_view v) {
  if (v.find_first_of(",\n\r") != std::string_view::npos) {
    throw InvalidArgument("CSV field contains a separator: " + std::string(v));
  }
  Append(v);
  return *this;
}

void CsvWriter::Append(std::string_view field) {
  if (fields_ > 0) line_ += ',';
  line_ += field;
  ++fields_;
}

void CsvWriter::EndRow() {
  if (fields_ != width_) {
    throw InvalidArgument(fmt::format("CSV row has {} fields, header has {}",
                                      fields_, width_));
  }
  line_ += '\n';
  out_ << line_;
  line_.clear();
  fields_ = 0;
}

void CsvWriter::Close() {
  out_.flush();
  if (!out_) throw IoError("write failed: " + path_.string());
  out_.close();
}

}  // namespace reweigh
