#ifndef NEGATTN_TENSOR_HPP
#define NEGATTN_TENSOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "negattn/errors.hpp"

namespace negattn {

// Dense row-major tensor of 64-bit floats. All arithmetic in this project is
// done in doubles; checkpoints may store f32 (see checkpoint.hpp). Values are
// treated as immutable once a tensor has been handed to another module.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shape);  // zero-filled
    Tensor(std::vector<int64_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int64_t> shape, double value);
    static Tensor ones(std::vector<int64_t> shape) { return full(std::move(shape), 1.0); }
    static Tensor identity(int64_t n);  // [n, n]

    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t dim(size_t i) const { return shape_.at(i); }
    size_t rank() const { return shape_.size(); }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](int64_t i) { return data_[i]; }
    double operator[](int64_t i) const { return data_[i]; }

    // 2-D accessors (matrices); bounds are the caller's problem.
    double& at(int64_t r, int64_t c) { return data_[r * shape_[1] + c]; }
    double at(int64_t r, int64_t c) const { return data_[r * shape_[1] + c]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    Tensor reshaped(std::vector<int64_t> shape) const;

private:
    std::vector<int64_t> shape_;
    std::vector<double> data_;
};

std::string shape_str(const std::vector<int64_t>& shape);
int64_t shape_numel(const std::vector<int64_t>& shape);

// Elementwise helpers. Shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
void add_inplace(Tensor& a, const Tensor& b);
void axpy_inplace(Tensor& a, double s, const Tensor& b);  // a += s * b

double max_abs_diff(const Tensor& a, const Tensor& b);
bool bit_equal(const Tensor& a, const Tensor& b);  // shape + memcmp on payload

}  // namespace negattn

#endif
