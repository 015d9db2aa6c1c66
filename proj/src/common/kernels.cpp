#include "detect/kernels.hpp"

#include <cmath>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "detect/error.hpp"

namespace detect::kernels {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(std::string("kernel shape mismatch: ") + what);
}

void check_forward(MatrixView x, MatrixView w, std::span<const double> bias, MutableMatrixView y) {
  require(x.data.size() == x.rows * x.cols && w.data.size() == w.rows * w.cols, "storage");
  require(x.cols == w.cols, "x.cols != w.cols");
  require(bias.size() == w.rows, "bias size");
  require(y.rows == x.rows && y.cols == w.rows && y.data.size() == y.rows * y.cols, "output");
}

void check_backward_input(MatrixView dy, MatrixView w, MutableMatrixView dx) {
  require(dy.cols == w.rows, "dy.cols != w.rows");
  require(dx.rows == dy.rows && dx.cols == w.cols && dx.data.size() == dx.rows * dx.cols, "dx");
}

void check_backward_params(MatrixView x, MatrixView dy, MutableMatrixView dw, std::span<double> dbias) {
  require(x.rows == dy.rows, "batch");
  require(dw.rows == dy.cols && dw.cols == x.cols && dw.data.size() == dw.rows * dw.cols, "dw");
  require(dbias.size() == dy.cols, "dbias");
}

void check_cosine(MatrixView a, MatrixView b, MutableMatrixView out) {
  require(a.cols == b.cols, "embedding dims");
  require(out.rows == a.rows && out.cols == b.rows && out.data.size() == out.rows * out.cols, "out");
}

inline double dot_row(MatrixView a, std::size_t i, MatrixView b, std::size_t j) {
  double s = 0.0;
  const double* pa = a.data.data() + i * a.cols;
  const double* pb = b.data.data() + j * b.cols;
  for (std::size_t k = 0; k < a.cols; ++k) s += pa[k] * pb[k];
  return s;
}

inline double forward_cell(MatrixView x, MatrixView w, std::span<const double> bias, std::size_t b,
                           std::size_t o) {
  return bias[o] + dot_row(x, b, w, o);
}

inline double backward_input_cell(MatrixView dy, MatrixView w, std::size_t b, std::size_t i) {
  double s = 0.0;
  for (std::size_t o = 0; o < w.rows; ++o) s += dy(b, o) * w(o, i);
  return s;
}

inline void backward_params_row(MatrixView x, MatrixView dy, MutableMatrixView dw, std::span<double> dbias,
                                std::size_t o) {
  double* row = dw.data.data() + o * dw.cols;
  for (std::size_t b = 0; b < x.rows; ++b) {
    const double g = dy(b, o);
    if (g == 0.0) continue;
    const double* xb = x.data.data() + b * x.cols;
    for (std::size_t i = 0; i < x.cols; ++i) row[i] += g * xb[i];
  }
  double s = 0.0;
  for (std::size_t b = 0; b < x.rows; ++b) s += dy(b, o);
  dbias[o] += s;
}

double row_norm(MatrixView m, std::size_t r) { return std::sqrt(dot_row(m, r, m, r)); }

inline double cosine_cell(MatrixView a, MatrixView b, std::span<const double> na, std::span<const double> nb,
                          std::size_t i, std::size_t j) {
  if (na[i] == 0.0 || nb[j] == 0.0) return 0.0;
  return dot_row(a, i, b, j) / (na[i] * nb[j]);
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void affine_forward(MatrixView x, MatrixView w, std::span<const double> bias, MutableMatrixView y) {
  check_forward(x, w, bias, y);
  const auto total = static_cast<std::ptrdiff_t>(x.rows * w.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    const auto b = static_cast<std::size_t>(k) / w.rows;
    const auto o = static_cast<std::size_t>(k) % w.rows;
    y(b, o) = forward_cell(x, w, bias, b, o);
  }
}

void affine_backward_input(MatrixView dy, MatrixView w, MutableMatrixView dx) {
  check_backward_input(dy, w, dx);
  const auto total = static_cast<std::ptrdiff_t>(dx.rows * dx.cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    const auto b = static_cast<std::size_t>(k) / dx.cols;
    const auto i = static_cast<std::size_t>(k) % dx.cols;
    dx(b, i) = backward_input_cell(dy, w, b, i);
  }
}

void affine_backward_params(MatrixView x, MatrixView dy, MutableMatrixView dw, std::span<double> dbias) {
  check_backward_params(x, dy, dw, dbias);
  const auto rows = static_cast<std::ptrdiff_t>(dw.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t o = 0; o < rows; ++o) backward_params_row(x, dy, dw, dbias, static_cast<std::size_t>(o));
}

void cosine_matrix(MatrixView a, MatrixView b, MutableMatrixView out) {
  check_cosine(a, b, out);
  std::vector<double> na(a.rows), nb(b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) na[i] = row_norm(a, i);
  for (std::size_t j = 0; j < b.rows; ++j) nb[j] = row_norm(b, j);
  const auto total = static_cast<std::ptrdiff_t>(a.rows * b.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    const auto i = static_cast<std::size_t>(k) / b.rows;
    const auto j = static_cast<std::size_t>(k) % b.rows;
    out(i, j) = cosine_cell(a, b, na, nb, i, j);
  }
}

namespace serial {

void affine_forward(MatrixView x, MatrixView w, std::span<const double> bias, MutableMatrixView y) {
  check_forward(x, w, bias, y);
  for (std::size_t b = 0; b < x.rows; ++b) {
    for (std::size_t o = 0; o < w.rows; ++o) y(b, o) = forward_cell(x, w, bias, b, o);
  }
}

void affine_backward_input(MatrixView dy, MatrixView w, MutableMatrixView dx) {
  check_backward_input(dy, w, dx);
  for (std::size_t b = 0; b < dx.rows; ++b) {
    for (std::size_t i = 0; i < dx.cols; ++i) dx(b, i) = backward_input_cell(dy, w, b, i);
  }
}

void affine_backward_params(MatrixView x, MatrixView dy, MutableMatrixView dw, std::span<double> dbias) {
  check_backward_params(x, dy, dw, dbias);
  for (std::size_t o = 0; o < dw.rows; ++o) backward_params_row(x, dy, dw, dbias, o);
}

void cosine_matrix(MatrixView a, MatrixView b, MutableMatrixView out) {
  check_cosine(a, b, out);
  std::vector<double> na(a.rows), nb(b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) na[i] = row_norm(a, i);
  for (std::size_t j = 0; j < b.rows; ++j) nb[j] = row_norm(b, j);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.rows; ++j) out(i, j) = cosine_cell(a, b, na, nb, i, j);
  }
}

}  // namespace serial
}  // namespace detect::kernels
