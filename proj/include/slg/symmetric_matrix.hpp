#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>

namespace slg {

// Small dense real symmetric matrix. Storage is the packed lower triangle,
// so A(i,j) == A(j,i) holds by construction rather than by convention.
// Value type with fixed capacity: no allocation, cheap to copy, safe to use
// inside per-node inner loops.
class SymmetricMatrix {
 public:
  static constexpr int kMaxDim = 8;

  static constexpr int packed_size(int dim) { return dim * (dim + 1) / 2; }

  SymmetricMatrix() = default;

  explicit SymmetricMatrix(int dim) : dim_(dim) {
    assert(dim >= 1 && dim <= kMaxDim);
  }

  static SymmetricMatrix identity(int dim) {
    SymmetricMatrix a(dim);
    for (int i = 0; i < dim; ++i) a.at(i, i) = 1.0;
    return a;
  }

  static SymmetricMatrix diagonal(std::span<const double> d) {
    SymmetricMatrix a(static_cast<int>(d.size()));
    for (int i = 0; i < a.dim(); ++i) a.at(i, i) = d[i];
    return a;
  }

  int dim() const { return dim_; }

  double operator()(int i, int j) const {
    assert(i >= 0 && i < dim_ && j >= 0 && j < dim_);
    return data_[index(i, j)];
  }

  double& at(int i, int j) {
    assert(i >= 0 && i < dim_ && j >= 0 && j < dim_);
    return data_[index(i, j)];
  }

  std::span<const double> packed() const {
    return {data_.data(), static_cast<std::size_t>(packed_size(dim_))};
  }

  std::span<double> packed() {
    return {data_.data(), static_cast<std::size_t>(packed_size(dim_))};
  }

  SymmetricMatrix& add_scaled(const SymmetricMatrix& other, double factor) {
    assert(other.dim_ == dim_);
    for (int k = 0; k < packed_size(dim_); ++k) data_[k] += factor * other.data_[k];
    return *this;
  }

  SymmetricMatrix& scale(double factor) {
    for (int k = 0; k < packed_size(dim_); ++k) data_[k] *= factor;
    return *this;
  }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  bool finite() const {
    for (int k = 0; k < packed_size(dim_); ++k) {
      if (!std::isfinite(data_[k])) return false;
    }
    return true;
  }

  friend bool operator==(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    if (a.dim_ != b.dim_) return false;
    for (int k = 0; k < packed_size(a.dim_); ++k) {
      if (a.data_[k] != b.data_[k]) return false;
    }
    return true;
  }

  // Packed layout: row-major lower triangle, (i,j) with i >= j at i(i+1)/2 + j.
  static constexpr int index(int i, int j) {
    return i >= j ? i * (i + 1) / 2 + j : j * (j + 1) / 2 + i;
  }

 private:
  int dim_ = 0;
  std::array<double, kMaxDim*(kMaxDim + 1) / 2> data_{};
};

}  // namespace slg
