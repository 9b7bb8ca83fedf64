#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dblp {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient slot.
///
/// Rank 0 is a scalar. Row-wise operations treat the last extent as the
/// row width and flatten every leading extent into the row count.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  /// Builds a rows×cols matrix from nested rows; all rows must have equal width.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor filled(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  /// Last extent (1 for a scalar).
  std::size_t row_width() const { return shape_.empty() ? 1 : shape_.back(); }
  /// Product of all but the last extent.
  std::size_t row_count() const { return row_width() == 0 ? 0 : size() / row_width(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& data() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t row, std::size_t col) { return values_[row * row_width() + col]; }
  double at(std::size_t row, std::size_t col) const { return values_[row * row_width() + col]; }
  /// Value of a single-element tensor.
  double item() const;

  bool has_grad() const { return has_grad_; }
  /// Allocates a zeroed gradient slot if none exists.
  void ensure_grad();
  void zero_grad();
  void drop_grad();
  std::span<double> grad() { return grad_; }
  std::span<const double> grad() const { return grad_; }

  /// Returns a copy with a new shape of the same total size.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
  bool has_grad_ = false;
};

}  // namespace dblp
