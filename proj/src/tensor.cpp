#include "absa/tensor.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

#include "absa/errors.hpp"

namespace absa {

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

static std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) {
        if (d == 0) throw ShapeError("tensor: zero extent in shape " + shape_str(s));
        n *= d;
    }
    return s.empty() ? 0 : n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), values_(shape_numel(shape_), 0.0) {
    if (rank() < 1 || rank() > 2)
        throw ShapeError("tensor: rank must be 1 or 2, got shape " + shape_str(shape_));
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (rank() < 1 || rank() > 2)
        throw ShapeError("tensor: rank must be 1 or 2, got shape " + shape_str(shape_));
    if (shape_numel(shape_) != values_.size())
        throw ShapeError("tensor: shape " + shape_str(shape_) + " does not match " +
                         std::to_string(values_.size()) + " values");
}

Tensor::Tensor(std::initializer_list<double> v) : shape_{v.size()}, values_(v) {
    if (v.size() == 0) throw ShapeError("tensor: empty initializer");
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r ? rows.begin()->size() : 0;
    if (r == 0 || c == 0) throw ShapeError("tensor: empty initializer");
    shape_ = {r, c};
    values_.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("tensor: ragged initializer rows");
        values_.insert(values_.end(), row.begin(), row.end());
    }
}

Tensor Tensor::full(Shape shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

double Tensor::item() const {
    if (!is_scalar()) throw ShapeError("item: tensor " + shape_str(shape_) + " is not scalar");
    return values_[0];
}

bool Tensor::all_finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

bool Tensor::bit_equal(const Tensor& o) const {
    return shape_ == o.shape_ &&
           std::memcmp(values_.data(), o.values_.data(), values_.size() * sizeof(double)) == 0;
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

}  // namespace absa
