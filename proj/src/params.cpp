#include "siphi/params.hpp"

#include <cstring>

#include "siphi/errors.hpp"

namespace siphi {

void ParamSet::add(const std::string& name, Tensor value, bool trainable) {
    if (!params_.emplace(name, Param{std::move(value), trainable}).second)
        throw ConfigError("duplicate parameter name '" + name + "'");
}

const Tensor& ParamSet::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second.value;
}

void ParamSet::set(const std::string& name, Tensor value) {
    auto& slot = mutable_value(name);
    if (!slot.same_shape(value))
        throw ShapeError("parameter '" + name + "' has shape " + shape_string(slot.shape()) + ", got " +
                         shape_string(value.shape()));
    slot = std::move(value);
}

Tensor& ParamSet::mutable_value(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second.value;
}

bool ParamSet::trainable(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second.trainable;
}

std::vector<std::string> ParamSet::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, _] : params_) out.push_back(name);
    return out;
}

std::size_t ParamSet::element_count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
}

std::uint64_t ParamSet::hash() const {
    std::uint64_t h = fnv1a64(std::string_view{});
    for (const auto& [name, p] : params_) {
        h = fnv1a64(name, h);
        for (auto e : p.value.shape()) h = fnv1a64(std::to_string(e), h);
        h = fnv1a64(std::as_bytes(p.value.data()), h);
    }
    return h;
}

ad::VarMap ParamSet::bind(ad::Graph& g) const {
    ad::VarMap vars;
    for (const auto& [name, p] : params_) vars[name] = p.trainable ? g.leaf(p.value) : g.constant(p.value);
    return vars;
}

Gradients collect_gradients(const ad::Graph& g, const ad::VarMap& vars, const ParamSet& params) {
    Gradients out;
    for (const auto& [name, p] : params.entries()) {
        if (!p.trainable) continue;
        out.emplace(name, g.grad(vars.at(name)));
    }
    return out;
}

}  // namespace siphi
