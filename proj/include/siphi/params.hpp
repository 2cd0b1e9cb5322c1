#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "siphi/autodiff.hpp"
#include "siphi/tensor.hpp"

namespace siphi {

struct Param {
    Tensor value;
    bool trainable = true;

    bool operator==(const Param&) const = default;
};

// Named parameter tensors. Names are unique and shapes are fixed once added.
class ParamSet {
public:
    void add(const std::string& name, Tensor value, bool trainable = true);
    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    const Tensor& get(const std::string& name) const;
    // Replaces the value; the shape must match.
    void set(const std::string& name, Tensor value);
    Tensor& mutable_value(const std::string& name);
    bool trainable(const std::string& name) const;

    std::vector<std::string> names() const;
    std::size_t size() const { return params_.size(); }
    std::size_t element_count() const;
    const std::map<std::string, Param>& entries() const { return params_; }

    // FNV-1a over names, shapes and value bits.
    std::uint64_t hash() const;

    // Registers every parameter in g (trainable ones as leaves, the rest as constants).
    ad::VarMap bind(ad::Graph& g) const;

    bool operator==(const ParamSet&) const = default;

private:
    std::map<std::string, Param> params_;
};

// Per-parameter gradients, keyed like the ParamSet.
using Gradients = std::map<std::string, Tensor>;

Gradients collect_gradients(const ad::Graph& g, const ad::VarMap& vars, const ParamSet& params);

}  // namespace siphi
