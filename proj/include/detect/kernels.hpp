#pragma once

// Dense kernels used by the metric model and BERTScore. Every kernel exists twice: an
// OpenMP version in detect::kernels and a plain loop in detect::kernels::serial. The
// parallel versions give each output element to exactly one thread and keep the serial
// accumulation order, so both produce bitwise-identical results for any thread count.
//
// Matrices are row-major. Shapes are checked and violations throw InvalidArgument.

#include <cstddef>
#include <span>

namespace detect::kernels {

struct MatrixView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct MutableMatrixView {
  std::span<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// y[b, o] = bias[o] + sum_i x[b, i] * w[o, i]
void affine_forward(MatrixView x, MatrixView w, std::span<const double> bias, MutableMatrixView y);
// dx[b, i] = sum_o dy[b, o] * w[o, i]
void affine_backward_input(MatrixView dy, MatrixView w, MutableMatrixView dx);
// dw[o, i] += sum_b dy[b, o] * x[b, i];  dbias[o] += sum_b dy[b, o]
void affine_backward_params(MatrixView x, MatrixView dy, MutableMatrixView dw, std::span<double> dbias);
// out[i, j] = cos(a_i, b_j); zero rows give cosine 0.
void cosine_matrix(MatrixView a, MatrixView b, MutableMatrixView out);

namespace serial {
void affine_forward(MatrixView x, MatrixView w, std::span<const double> bias, MutableMatrixView y);
void affine_backward_input(MatrixView dy, MatrixView w, MutableMatrixView dx);
void affine_backward_params(MatrixView x, MatrixView dy, MutableMatrixView dw, std::span<double> dbias);
void cosine_matrix(MatrixView a, MatrixView b, MutableMatrixView out);
}  // namespace serial

// Threads OpenMP will use (1 when built without OpenMP).
int max_threads();

}  // namespace detect::kernels
