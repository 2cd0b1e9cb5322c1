#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace siphi {

// Tensor extents, stored inline (every op allocates an output, so a heap
// shape would double the allocations).
class Shape {
public:
    static constexpr std::size_t kMaxRank = 4;

    Shape() = default;
    Shape(std::initializer_list<std::size_t> extents) { assign(extents.begin(), extents.size()); }
    Shape(const std::vector<std::size_t>& extents) { assign(extents.data(), extents.size()); }

    std::size_t size() const { return rank_; }
    bool empty() const { return rank_ == 0; }
    std::size_t operator[](std::size_t i) const { return dims_[i]; }
    const std::size_t* begin() const { return dims_; }
    const std::size_t* end() const { return dims_ + rank_; }
    std::vector<std::size_t> to_vector() const { return {begin(), end()}; }

    bool operator==(const Shape& other) const;

private:
    void assign(const std::size_t* extents, std::size_t rank);
    std::size_t dims_[kMaxRank] = {};
    std::size_t rank_ = 0;
};

// Dense row-major float64 array. Most of the compute core works on rank-2
// tensors; vectors are represented as [1 x n] rows.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    static Tensor row(std::vector<double> values);
    static Tensor scalar(double v) { return row({v}); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // Rank-2 accessors.
    std::size_t rows() const {
        if (shape_.size() != 2) rank_error();
        return shape_[0];
    }
    std::size_t cols() const {
        if (shape_.size() != 2) rank_error();
        return shape_[1];
    }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    double item() const;

    bool operator==(const Tensor& other) const = default;

private:
    [[noreturn]] void rank_error() const;

    Shape shape_;
    std::vector<double> data_;
};

std::string shape_string(const Shape& shape);

// FNV-1a 64 over raw bytes.
std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace siphi
