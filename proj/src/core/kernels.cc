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

#include "reweigh/core/kernels.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "reweigh/core/errors.h"

#ifdef REWEIGH_HAVE_OPENMP
#include <omp.h>
#endif

namespace reweigh::kernels {
namespace {

// Below this many multiply-adds the serial path wins.
constexpr std::size_t kParallelWork = std::size_t{1} << 16;

void CheckShape(const Tensor& out, std::size_t rows, std::size_t cols,
                const char* what) {
  if (out.rows() != rows || out.cols() != cols) {
    throw InvalidArgument(std::string(what) + ": output shape mismatch");
  }
}

void CheckMatMul(const Tensor& a, const Tensor& b, const Tensor& out) {
  if (a.cols() != b.rows()) throw InvalidArgument("MatMul: inner dims differ");
  CheckShape(out, a.rows(), b.cols(), "MatMul");
}

void CheckTransA(const Tensor& a, const Tensor& b, const Tensor& out) {
  if (a.rows() != b.rows()) {
    throw InvalidArgument("MatMulTransA: row counts differ");
  }
  CheckShape(out, a.cols(), b.cols(), "MatMulTransA");
}

void CheckTransB(const Tensor& a, const Tensor& b, const Tensor& out) {
  if (a.cols() != b.cols()) {
    throw InvalidArgument("MatMulTransB: column counts differ");
  }
  CheckShape(out, a.rows(), b.rows(), "MatMulTransB");
}

// Shared row bodies, so serial and parallel run literally the same code.
inline void MatMulRow(const Tensor& a, const Tensor& b, Tensor& out,
                      std::size_t i) {
  const std::size_t n = b.cols();
  double* o = out.data().data() + i * n;
  std::fill(o, o + n, 0.0);
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double aik = a(i, k);
    const double* brow = b.data().data() + k * n;
    for (std::size_t j = 0; j < n; ++j) o[j] += aik * brow[j];
  }
}

inline void TransARow(const Tensor& a, const Tensor& b, Tensor& out,
                      std::size_t i) {
  const std::size_t n = b.cols();
  double* o = out.data().data() + i * n;
  std::fill(o, o + n, 0.0);
  for (std::size_t m = 0; m < a.rows(); ++m) {
    const double ami = a(m, i);
    const double* brow = b.data().data() + m * n;
    for (std::size_t j = 0; j < n; ++j) o[j] += ami * brow[j];
  }
}

inline void TransBRow(const Tensor& a, const Tensor& b, Tensor& out,
                      std::size_t i) {
  const std::size_t k = a.cols();
  const double* arow = a.data().data() + i * k;
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const double* brow = b.data().data() + j * k;
    double acc = 0.0;
    for (std::size_t t = 0; t < k; ++t) acc += arow[t] * brow[t];
    out(i, j) = acc;
  }
}

inline void LogSoftmaxRow(const Tensor& logits, Tensor& out, std::size_t i) {
  const auto in = logits.row(i);
  auto o = out.row(i);
  const double mx = *std::max_element(in.begin(), in.end());
  double sum = 0.0;
  for (double v : in) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (std::size_t j = 0; j < in.size(); ++j) o[j] = in[j] - lse;
}

bool UseParallel(std::size_t work) {
  return work >= kParallelWork && MaxThreads() > 1;
}

}  // namespace

void MatMulSerial(const Tensor& a, const Tensor& b, Tensor& out) {
  CheckMatMul(a, b, out);
  for (std::size_t i = 0; i < a.rows(); ++i) MatMulRow(a, b, out, i);
}

void MatMulParallel(const Tensor& a, const Tensor& b, Tensor& out) {
  CheckMatMul(a, b, out);
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    MatMulRow(a, b, out, static_cast<std::size_t>(i));
  }
}

void MatMulTransASerial(const Tensor& a, const Tensor& b, Tensor& out) {
  CheckTransA(a, b, out);
  for (std::size_t i = 0; i < a.cols(); ++i) TransARow(a, b, out, i);
}

void MatMulTransAParallel(const Tensor& a, const Tensor& b, Tensor& out) {
  CheckTransA(a, b, out);
  const auto rows = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    TransARow(a, b, out, static_cast<std::size_t>(i));
  }
}

void MatMulTransBSerial(const Tensor& a, const Tensor& b, Tensor& out) {
  CheckTransB(a, b, out);
  for (std::size_t i = 0; i < a.rows(); ++i) TransBRow(a, b, out, i);
}

void MatMulTransBParallel(const Tensor& a, const Tensor& b, Tensor& out) {
  CheckTransB(a, b, out);
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    TransBRow(a, b, out, static_cast<std::size_t>(i));
  }
}

void LogSoftmaxRowsSerial(const Tensor& logits, Tensor& out) {
  CheckShape(out, logits.rows(), logits.cols(), "LogSoftmaxRows");
  if (logits.cols() == 0) throw InvalidArgument("LogSoftmaxRows: no columns");
  for (std::size_t i = 0; i < logits.rows(); ++i) LogSoftmaxRow(logits, out, i);
}

void LogSoftmaxRowsParallel(const Tensor& logits, Tensor& out) {
  CheckShape(out, logits.rows(), logits.cols(), "LogSoftmaxRows");
  if (logits.cols() == 0) throw InvalidArgument("LogSoftmaxRows: no columns");
  const auto rows = static_cast<std::ptrdiff_t>(logits.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    LogSoftmaxRow(logits, out, static_cast<std::size_t>(i));
  }
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows(), b.cols());
  if (UseParallel(a.rows() * a.cols() * b.cols())) {
    MatMulParallel(a, b, out);
  } else {
    MatMulSerial(a, b, out);
  }
  return out;
}

Tensor MatMulTransA(const Tensor& a, const Tensor& b) {
  Tensor out(a.cols(), b.cols());
  if (UseParallel(a.rows() * a.cols() * b.cols())) {
    MatMulTransAParallel(a, b, out);
  } else {
    MatMulTransASerial(a, b, out);
  }
  return out;
}

Tensor MatMulTransB(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows(), b.rows());
  if (UseParallel(a.rows() * a.cols() * b.rows())) {
    MatMulTransBParallel(a, b, out);
  } else {
    MatMulTransBSerial(a, b, out);
  }
  return out;
}

Tensor LogSoftmaxRows(const Tensor& logits) {
  Tensor out(logits.rows(), logits.cols());
  if (UseParallel(logits.size() * 8)) {
    LogSoftmaxRowsParallel(logits, out);
  } else {
    LogSoftmaxRowsSerial(logits, out);
  }
  return out;
}

double PairwiseSum(std::span<const double> values) {
  if (values.size() <= 8) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return PairwiseSum(values.first(half)) + PairwiseSum(values.subspan(half));
}

int MaxThreads() {
#ifdef REWEIGH_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace reweigh::kernels
