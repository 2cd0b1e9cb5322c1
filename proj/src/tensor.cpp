#include "siphi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include "siphi/errors.hpp"

namespace siphi {

void Shape::assign(const std::size_t* extents, std::size_t rank) {
    if (rank > kMaxRank) throw ShapeError("tensor rank " + std::to_string(rank) + " exceeds " + std::to_string(kMaxRank));
    std::copy(extents, extents + rank, dims_);
    rank_ = rank;
}

bool Shape::operator==(const Shape& other) const {
    return rank_ == other.rank_ && std::equal(begin(), end(), other.begin());
}

namespace {

std::size_t extent_product(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one extent");
    std::size_t n = 1;
    for (auto e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
        n *= e;
    }
    return n;
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(extent_product(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (extent_product(shape_) != data_.size())
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) { return Tensor(Shape{rows, cols}, fill); }

Tensor Tensor::row(std::vector<double> values) {
    const auto n = values.size();
    return Tensor(Shape{1, n}, std::move(values));
}

void Tensor::rank_error() const { throw ShapeError("expected rank-2 tensor, got " + shape_string(shape_)); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::item() const {
    if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
    return data_[0];
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += " x ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t state) {
    for (auto b : bytes) {
        state ^= static_cast<std::uint8_t>(b);
        state *= 0x100000001b3ULL;
    }
    return state;
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t state) {
    return fnv1a64(std::as_bytes(std::span(text.data(), text.size())), state);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace siphi
