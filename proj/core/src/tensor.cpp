#include "iafs/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "iafs/error.hpp"

namespace iafs {

std::string Shape::str() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
  }
}

ImageTensor::ImageTensor(Shape shape, double fill) : shape_(shape), values_(shape.size(), fill) {}

ImageTensor::ImageTensor(Shape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.size()) {
    throw InvalidArgument("ImageTensor: " + std::to_string(values_.size()) +
                          " values for shape " + shape_.str());
  }
}

std::span<const double> ImageTensor::plane(std::size_t c) const {
  return std::span<const double>(values_).subspan(c * shape_.plane_size(), shape_.plane_size());
}

std::span<double> ImageTensor::plane(std::size_t c) {
  return std::span<double>(values_).subspan(c * shape_.plane_size(), shape_.plane_size());
}

bool ImageTensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ImageTensor& ImageTensor::operator+=(const ImageTensor& other) {
  require_same_shape(shape_, other.shape_, "ImageTensor::operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ImageTensor& ImageTensor::operator-=(const ImageTensor& other) {
  require_same_shape(shape_, other.shape_, "ImageTensor::operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

ImageTensor& ImageTensor::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

ImageTensor& ImageTensor::operator+=(double offset) {
  for (double& v : values_) v += offset;
  return *this;
}

ComplexTensor::ComplexTensor(Shape shape) : shape_(shape), values_(shape.size()) {}

ComplexTensor::ComplexTensor(Shape shape, std::vector<value_type> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.size()) {
    throw InvalidArgument("ComplexTensor: value count does not match shape " + shape_.str());
  }
}

std::span<const ComplexTensor::value_type> ComplexTensor::plane(std::size_t c) const {
  return std::span<const value_type>(values_).subspan(c * shape_.plane_size(),
                                                      shape_.plane_size());
}

std::span<ComplexTensor::value_type> ComplexTensor::plane(std::size_t c) {
  return std::span<value_type>(values_).subspan(c * shape_.plane_size(), shape_.plane_size());
}

bool ComplexTensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](const value_type& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

ComplexTensor& ComplexTensor::operator+=(const ComplexTensor& other) {
  require_same_shape(shape_, other.shape_, "ComplexTensor::operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    compensation_ += (sum_ - t) + v;
  } else {
    compensation_ += (v - t) + sum_;
  }
  sum_ = t;
}

ImageTensor sample_standard_normal(Rng& rng, const Shape& shape) {
  if (shape.empty()) {
    throw InvalidArgument("sample_standard_normal: zero-sized shape " + shape.str());
  }
  ImageTensor out(shape);
  for (double& v : out.values()) v = rng.normal();
  return out;
}

double dot(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a.shape(), b.shape(), "dot");
  CompensatedSum acc;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) acc.add(av[i] * bv[i]);
  return acc.value();
}

double l2_norm(const ImageTensor& a) {
  // Scaled accumulation keeps huge/tiny magnitudes representable.
  double scale = 0.0;
  for (double v : a.values()) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  CompensatedSum acc;
  for (double v : a.values()) {
    const double r = v / scale;
    acc.add(r * r);
  }
  return scale * std::sqrt(acc.value());
}

double sum(const ImageTensor& a) {
  CompensatedSum acc;
  for (double v : a.values()) acc.add(v);
  return acc.value();
}

double mean(const ImageTensor& a) {
  if (a.empty()) return 0.0;
  return sum(a) / static_cast<double>(a.size());
}

double mean_squared_difference(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a.shape(), b.shape(), "mean_squared_difference");
  if (a.empty()) return 0.0;
  CompensatedSum acc;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc.add(d * d);
  }
  return acc.value() / static_cast<double>(a.size());
}

double max_abs_difference(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_difference");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ImageTensor linear_combination(const ImageTensor& a, double wa, const ImageTensor& b, double wb) {
  require_same_shape(a.shape(), b.shape(), "linear_combination");
  ImageTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = wa * a[i] + wb * b[i];
  return out;
}

ImageTensor clamp(ImageTensor x, double lo, double hi) {
  for (double& v : x.values()) v = std::clamp(v, lo, hi);
  return x;
}

}  // namespace iafs
