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

#ifndef REWEIGH_CORE_KERNELS_H_
#define REWEIGH_CORE_KERNELS_H_

#include <cstddef>
#include <span>

#include "reweigh/core/tensor.h"

// Dense kernels used by the autodiff engine and by inference.
//
// Every kernel exists twice: a serial reference and an OpenMP variant that
// splits the outer (row) loop across threads. Each output element is produced
// by exactly one thread with the same inner accumulation order as the serial
// version, so the two are bit-identical; tests assert that equality and the
// benchmark target compares their speed. The dispatchers pick the parallel
// variant only when the work is large enough to amortize thread startup.
namespace reweigh::kernels {

// out = a * b. out must already be shaped a.rows() x b.cols().
void MatMulSerial(const Tensor& a, const Tensor& b, Tensor& out);
void MatMulParallel(const Tensor& a, const Tensor& b, Tensor& out);

// out = a^T * b. out must be a.cols() x b.cols().
void MatMulTransASerial(const Tensor& a, const Tensor& b, Tensor& out);
void MatMulTransAParallel(const Tensor& a, const Tensor& b, Tensor& out);

// out = a * b^T. out must be a.rows() x b.rows().
void MatMulTransBSerial(const Tensor& a, const Tensor& b, Tensor& out);
void MatMulTransBParallel(const Tensor& a, const Tensor& b, Tensor& out);

// Row-wise log-softmax with max subtraction.
void LogSoftmaxRowsSerial(const Tensor& logits, Tensor& out);
void LogSoftmaxRowsParallel(const Tensor& logits, Tensor& out);

Tensor MatMul(const Tensor& a, const Tensor& b);
Tensor MatMulTransA(const Tensor& a, const Tensor& b);
Tensor MatMulTransB(const Tensor& a, const Tensor& b);
Tensor LogSoftmaxRows(const Tensor& logits);

// Pairwise (tree) summation: fixed reduction order independent of threading.
double PairwiseSum(std::span<const double> values);

// Threads the parallel variants would use (1 without OpenMP).
int MaxThreads();

}  // namespace reweigh::kernels

#endif  // REWEIGH_CORE_KERNELS_H_
