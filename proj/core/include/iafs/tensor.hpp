#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "iafs/rng.hpp"

namespace iafs {

/// Rank-3 extent (channels x height x width).
struct Shape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  [[nodiscard]] std::size_t size() const { return channels * height * width; }
  [[nodiscard]] std::size_t plane_size() const { return height * width; }
  [[nodiscard]] bool empty() const { return size() == 0; }
  [[nodiscard]] std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense real C x H x W grid, channel-major then row-major.
///
/// Plane c occupies the contiguous slice [c*H*W, (c+1)*H*W).
class ImageTensor {
 public:
  ImageTensor() = default;
  explicit ImageTensor(Shape shape, double fill = 0.0);
  ImageTensor(Shape shape, std::vector<double> values);

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::size_t channels() const { return shape_.channels; }
  [[nodiscard]] std::size_t height() const { return shape_.height; }
  [[nodiscard]] std::size_t width() const { return shape_.width; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] bool empty() const { return values_.empty(); }

  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] std::span<const double> plane(std::size_t c) const;
  [[nodiscard]] std::span<double> plane(std::size_t c);

  [[nodiscard]] double& at(std::size_t c, std::size_t y, std::size_t x) {
    return values_[(c * shape_.height + y) * shape_.width + x];
  }
  [[nodiscard]] double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values_[(c * shape_.height + y) * shape_.width + x];
  }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  [[nodiscard]] bool all_finite() const;

  ImageTensor& operator+=(const ImageTensor& other);
  ImageTensor& operator-=(const ImageTensor& other);
  ImageTensor& operator*=(double scale);
  ImageTensor& operator+=(double offset);

  friend ImageTensor operator+(ImageTensor a, const ImageTensor& b) { return a += b; }
  friend ImageTensor operator-(ImageTensor a, const ImageTensor& b) { return a -= b; }
  friend ImageTensor operator*(ImageTensor a, double s) { return a *= s; }
  friend ImageTensor operator*(double s, ImageTensor a) { return a *= s; }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  Shape shape_{};
  std::vector<double> values_;
};

/// Complex C x H x W grid with the same layout as ImageTensor.
class ComplexTensor {
 public:
  using value_type = std::complex<double>;

  ComplexTensor() = default;
  explicit ComplexTensor(Shape shape);
  ComplexTensor(Shape shape, std::vector<value_type> values);

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] std::span<const value_type> values() const { return values_; }
  [[nodiscard]] std::span<value_type> values() { return values_; }
  [[nodiscard]] std::span<const value_type> plane(std::size_t c) const;
  [[nodiscard]] std::span<value_type> plane(std::size_t c);

  [[nodiscard]] value_type& at(std::size_t c, std::size_t y, std::size_t x) {
    return values_[(c * shape_.height + y) * shape_.width + x];
  }
  [[nodiscard]] value_type at(std::size_t c, std::size_t y, std::size_t x) const {
    return values_[(c * shape_.height + y) * shape_.width + x];
  }

  [[nodiscard]] bool all_finite() const;

  ComplexTensor& operator+=(const ComplexTensor& other);
  friend ComplexTensor operator+(ComplexTensor a, const ComplexTensor& b) { return a += b; }

 private:
  Shape shape_{};
  std::vector<value_type> values_;
};

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double v);
  [[nodiscard]] double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// i.i.d. N(0, 1) entries drawn in storage order from `rng`.
ImageTensor sample_standard_normal(Rng& rng, const Shape& shape);

/// Sum of elementwise products (compensated).
double dot(const ImageTensor& a, const ImageTensor& b);

double l2_norm(const ImageTensor& a);

double sum(const ImageTensor& a);
double mean(const ImageTensor& a);
double mean_squared_difference(const ImageTensor& a, const ImageTensor& b);
double max_abs_difference(const ImageTensor& a, const ImageTensor& b);

/// Linear blend a*wa + b*wb.
ImageTensor linear_combination(const ImageTensor& a, double wa, const ImageTensor& b, double wb);

ImageTensor clamp(ImageTensor x, double lo, double hi);

void require_same_shape(const Shape& a, const Shape& b, const char* what);

}  // namespace iafs
