#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace absa {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

// Dense row-major array of doubles, rank 1 or 2. Plain value type: the
// autodiff layer wraps it in graph nodes, optimizers mutate it in place.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);  // zero-filled
    Tensor(Shape shape, std::vector<double> values);
    Tensor(std::initializer_list<double> v);                           // rank-1
    Tensor(std::initializer_list<std::initializer_list<double>> rows);  // rank-2

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, double v);
    static Tensor ones(Shape shape) { return full(std::move(shape), 1.0); }
    static Tensor scalar(double v) { return Tensor(Shape{1}, {v}); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return values_.size(); }
    bool is_scalar() const { return values_.size() == 1; }

    // rank-2 accessors; rank-1 tensors behave as a single row
    std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
    std::size_t cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 0); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& at(std::size_t i) { return values_[i]; }
    double at(std::size_t i) const { return values_[i]; }
    double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

    double item() const;  // value of a scalar tensor; throws ShapeError otherwise

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    bool bit_equal(const Tensor& o) const;

    void fill(double v);

private:
    Shape shape_;
    std::vector<double> values_;
};

}  // namespace absa
