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

#ifndef REWEIGH_CORE_F64LE_H_
#define REWEIGH_CORE_F64LE_H_

#include <filesystem>
#include <span>
#include <vector>

namespace reweigh {

// Raw little-endian IEEE-754 doubles, no header. Throws IoError.
void WriteF64Le(const std::filesystem::path& path,
                std::span<const double> values);
std::vector<double> ReadF64Le(const std::filesystem::path& path);

}  // namespace reweigh

#endif  // REWEIGH_CORE_F64LE_H_
