#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace savac {

using Vector = std::vector<double>;

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) +
                                ")");
  }
}

// Sequential left-to-right reductions so results are reproducible on one
// platform regardless of threading.
inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

// Compressed row storage with ascending column order inside each row.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  // Duplicate entries are summed in their original order.
  static CsrMatrix from_triplets(std::size_t n, std::vector<Triplet> entries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Triplet& a, const Triplet& b) {
                       return std::tie(a.row, a.col) < std::tie(b.row, b.col);
                     });
    CsrMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    bool have_prev = false;
    std::size_t prev_row = 0, prev_col = 0;
    for (const auto& t : entries) {
      if (t.row >= n || t.col >= n) {
        throw std::out_of_range("CsrMatrix: triplet index out of range");
      }
      if (have_prev && t.row == prev_row && t.col == prev_col) {
        m.vals_.back() += t.value;
        continue;
      }
      m.cols_.push_back(t.col);
      m.vals_.push_back(t.value);
      ++m.row_ptr_[t.row + 1];
      have_prev = true;
      prev_row = t.row;
      prev_col = t.col;
    }
    std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
    return m;
  }

  std::size_t size() const { return n_; }
  std::size_t nonzeros() const { return vals_.size(); }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& cols() const { return cols_; }
  const std::vector<double>& values() const { return vals_; }

  double at(std::size_t i, std::size_t j) const {
    const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return vals_[static_cast<std::size_t>(it - cols_.begin())];
  }

  // y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    assert(x.size() == n_ && y.size() == n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        s += vals_[k] * x[cols_[k]];
      }
      y[i] = s;
    }
  }

  Vector multiply(std::span<const double> x) const {
    require_same_size(x.size(), n_, "CsrMatrix::multiply");
    Vector y(n_);
    multiply(x, y);
    return y;
  }

  // x^T A x
  double quadratic_form(std::span<const double> x) const {
    require_same_size(x.size(), n_, "CsrMatrix::quadratic_form");
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double row = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        row += vals_[k] * x[cols_[k]];
      }
      s += x[i] * row;
    }
    return s;
  }

  Vector diagonal() const {
    Vector d(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
    return d;
  }

  // alpha * this + diag(d), same sparsity pattern (diagonal must be present).
  CsrMatrix scaled_plus_diagonal(double alpha, std::span<const double> d) const {
    require_same_size(d.size(), n_, "CsrMatrix::scaled_plus_diagonal");
    CsrMatrix m = *this;
    for (double& v : m.vals_) v *= alpha;
    for (std::size_t i = 0; i < n_; ++i) {
      bool found = false;
      for (std::size_t k = m.row_ptr_[i]; k < m.row_ptr_[i + 1]; ++k) {
        if (m.cols_[k] == i) {
          m.vals_[k] += d[i];
          found = true;
          break;
        }
      }
      if (!found) {
        throw std::logic_error("CsrMatrix: missing diagonal entry in row " +
                               std::to_string(i));
      }
    }
    return m;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
};

}  // namespace savac
