#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace vpflow {

// Dense 2D array, (i,j) with i the fast (x) index.  Value semantics.
template <class T>
class Array2D {
 public:
  Array2D() = default;
  Array2D(int nx, int ny, T fill = T{})
      : nx_(nx), ny_(ny), data_(static_cast<std::size_t>(nx) * ny, fill) {
    assert(nx >= 0 && ny >= 0);
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int i, int j) {
    assert(i >= 0 && i < nx_ && j >= 0 && j < ny_);
    return data_[static_cast<std::size_t>(j) * nx_ + i];
  }
  const T& operator()(int i, int j) const {
    assert(i >= 0 && i < nx_ && j >= 0 && j < ny_);
    return data_[static_cast<std::size_t>(j) * nx_ + i];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  void fill(T v) { data_.assign(data_.size(), v); }

  bool same_shape(const Array2D& o) const { return nx_ == o.nx_ && ny_ == o.ny_; }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  T min_value() const {
    T m = data_.empty() ? T{} : data_[0];
    for (const T& v : data_)
      if (v < m) m = v;
    return m;
  }
  T max_value() const {
    T m = data_.empty() ? T{} : data_[0];
    for (const T& v : data_)
      if (v > m) m = v;
    return m;
  }
  T max_abs() const {
    T m = T{};
    for (const T& v : data_) {
      T a = std::abs(v);
      if (a > m) m = a;
    }
    return m;
  }

  friend bool operator==(const Array2D& a, const Array2D& b) {
    return a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.data_ == b.data_;
  }

 private:
  int nx_ = 0, ny_ = 0;
  std::vector<T> data_;
};

using Field = Array2D<double>;

inline double dot(const Field& a, const Field& b) {
  assert(a.same_shape(b));
  double s = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t k = 0; k < a.size(); ++k) s += pa[k] * pb[k];
  return s;
}

// y += alpha * x
inline void axpy(double alpha, const Field& x, Field& y) {
  assert(x.same_shape(y));
  const double* px = x.data();
  double* py = y.data();
  for (std::size_t k = 0; k < x.size(); ++k) py[k] += alpha * px[k];
}

}  // namespace vpflow
