#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace ag {

/// Dense row-major matrix. All model math runs on doubles; the long-double
/// instantiation backs the finite-difference gradient oracle, where plain
/// doubles would drown small gradients in cancellation noise.
template <typename S>
struct TensorT {
  int rows = 0;
  int cols = 0;
  std::vector<S> d;

  TensorT() = default;
  TensorT(int r, int c) : rows(r), cols(c), d(static_cast<std::size_t>(r) * c, S(0)) {}

  S& at(int i, int j) { return d[static_cast<std::size_t>(i) * cols + j]; }
  S at(int i, int j) const { return d[static_cast<std::size_t>(i) * cols + j]; }

  std::size_t size() const { return d.size(); }
  void zero() { std::fill(d.begin(), d.end(), S(0)); }

  /// Reshape without zeroing; reuses storage when the size matches.
  void ensure(int r, int c) {
    rows = r;
    cols = c;
    d.resize(static_cast<std::size_t>(r) * c);
  }
  void ensure_zero(int r, int c) {
    ensure(r, c);
    zero();
  }
};

using Tensor2 = TensorT<double>;

// out = A·B, A·Bᵀ, Aᵀ·B; accumulate adds instead of overwriting.
template <typename S>
void mm_nn(const TensorT<S>& a, const TensorT<S>& b, TensorT<S>& out, bool accumulate = false) {
  assert(a.cols == b.rows);
  out.ensure(a.rows, b.cols);
  if (!accumulate) out.zero();
  const int m = a.rows, k = a.cols, n = b.cols;
  for (int i = 0; i < m; ++i) {
    const S* arow = a.d.data() + static_cast<std::size_t>(i) * k;
    S* orow = out.d.data() + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const S av = arow[p];
      if (av == S(0)) continue;
      const S* brow = b.d.data() + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

template <typename S>
void mm_nt(const TensorT<S>& a, const TensorT<S>& b, TensorT<S>& out, bool accumulate = false) {
  assert(a.cols == b.cols);
  out.ensure(a.rows, b.rows);
  if (!accumulate) out.zero();
  const int m = a.rows, k = a.cols, n = b.rows;
  for (int i = 0; i < m; ++i) {
    const S* arow = a.d.data() + static_cast<std::size_t>(i) * k;
    S* orow = out.d.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const S* brow = b.d.data() + static_cast<std::size_t>(j) * k;
      S s = S(0);
      for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
      orow[j] += s;
    }
  }
}

template <typename S>
void mm_tn(const TensorT<S>& a, const TensorT<S>& b, TensorT<S>& out, bool accumulate = false) {
  assert(a.rows == b.rows);
  out.ensure(a.cols, b.cols);
  if (!accumulate) out.zero();
  const int m = a.cols, k = a.rows, n = b.cols;
  for (int p = 0; p < k; ++p) {
    const S* arow = a.d.data() + static_cast<std::size_t>(p) * m;
    const S* brow = b.d.data() + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const S av = arow[i];
      if (av == S(0)) continue;
      S* orow = out.d.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

/// X += broadcast row vector b (1 x cols).
template <typename S>
void add_row_vector(TensorT<S>& x, const TensorT<S>& b) {
  assert(b.rows == 1 && b.cols == x.cols);
  for (int i = 0; i < x.rows; ++i) {
    S* row = x.d.data() + static_cast<std::size_t>(i) * x.cols;
    for (int j = 0; j < x.cols; ++j) row[j] += b.d[static_cast<std::size_t>(j)];
  }
}

/// out (1 x cols) = column sums of X.
template <typename S>
void col_sums(const TensorT<S>& x, TensorT<S>& out, bool accumulate = false) {
  out.ensure(1, x.cols);
  if (!accumulate) out.zero();
  for (int i = 0; i < x.rows; ++i) {
    const S* row = x.d.data() + static_cast<std::size_t>(i) * x.cols;
    for (int j = 0; j < x.cols; ++j) out.d[static_cast<std::size_t>(j)] += row[j];
  }
}

inline bool all_finite(const Tensor2& x) {
  for (double v : x.d)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace ag
