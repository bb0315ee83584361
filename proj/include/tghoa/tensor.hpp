#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace tghoa {

// Dense n-dimensional array of doubles, row-major. Rank is 1..3 in practice:
// vectors {n}, matrices {r,c}, conv weights {out,in,k}. Scalars use shape {1}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<int> s, double fill = 0.0) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel_of(shape)), fill);
  }

  static Tensor scalar(double v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
  }

  static Tensor from(std::vector<double> v) {
    Tensor t;
    t.shape = {static_cast<int>(v.size())};
    t.data = std::move(v);
    return t;
  }

  static long numel_of(const std::vector<int>& s) {
    long n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("tensor dim must be positive");
      n *= d;
    }
    return n;
  }

  int numel() const { return static_cast<int>(data.size()); }

  int rank() const { return static_cast<int>(shape.size()); }

  // 2-D accessors
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }
  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  double& operator[](int i) { return data[static_cast<size_t>(i)]; }
  double operator[](int i) const { return data[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace tghoa
