#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gml2o/tensor.hpp"

namespace gml2o {

/// Primitive operations available on the tape. The set is closed: it spans
/// the recurrent network forward pass and the max-regret meta-loss.
enum class OpKind {
    add,
    subtract,
    hadamard,
    matmul,
    concat,
    slice,
    sigmoid,
    tanh,
    scale,
    sum,
    max_list,
};

const char* op_name(OpKind kind) noexcept;

/// Extra arguments for the primitives that need them.
///   scale:  factor
///   concat: axis
///   slice:  axis, [begin, end)
struct OpAttr {
    double factor = 1.0;
    std::size_t axis = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Evaluates one primitive without recording anything.
Tensor primitive_forward(OpKind kind, std::span<const Tensor* const> inputs, const OpAttr& attr = {});
Tensor primitive_forward(OpKind kind, std::initializer_list<const Tensor*> inputs, const OpAttr& attr = {});

/// Named parameters with a parallel gradient accumulator of identical shapes.
class ParamStore {
public:
    void add(const std::string& name, Tensor value);
    bool contains(const std::string& name) const { return values_.contains(name); }

    const Tensor& value(const std::string& name) const;
    Tensor& mutable_value(const std::string& name);
    const Tensor& grad(const std::string& name) const;
    Tensor& mutable_grad(const std::string& name);

    void zero_grad();
    /// value -= lr * grad for every parameter.
    void gradient_step(double lr);

    std::vector<std::string> names() const;
    /// Total number of scalar parameters.
    std::size_t scalar_count() const;
    bool all_finite() const;

    const std::map<std::string, Tensor>& values() const noexcept { return values_; }
    const std::map<std::string, Tensor>& grads() const noexcept { return grads_; }

    friend bool operator==(const ParamStore& a, const ParamStore& b) { return a.values_ == b.values_; }

private:
    std::map<std::string, Tensor> values_;
    std::map<std::string, Tensor> grads_;
};

struct NodeId {
    std::size_t index = 0;
};

/// Reverse-mode differentiation tape. Nodes are appended in evaluation
/// order, so the node list is always a topological order of the DAG.
class Tape {
public:
    NodeId constant(Tensor value);
    /// Leaf whose gradient is accumulated into `name` on backward().
    NodeId parameter(const ParamStore& store, const std::string& name);

    NodeId apply(OpKind kind, std::span<const NodeId> inputs, const OpAttr& attr = {});
    NodeId apply(OpKind kind, std::initializer_list<NodeId> inputs, const OpAttr& attr = {});

    NodeId add(NodeId a, NodeId b) { return apply(OpKind::add, {a, b}); }
    NodeId sub(NodeId a, NodeId b) { return apply(OpKind::subtract, {a, b}); }
    NodeId mul(NodeId a, NodeId b) { return apply(OpKind::hadamard, {a, b}); }
    NodeId matmul(NodeId a, NodeId b) { return apply(OpKind::matmul, {a, b}); }
    NodeId sigmoid(NodeId a) { return apply(OpKind::sigmoid, {a}); }
    NodeId tanh(NodeId a) { return apply(OpKind::tanh, {a}); }
    NodeId scale(NodeId a, double factor);
    NodeId sum(NodeId a) { return apply(OpKind::sum, {a}); }
    NodeId concat(std::span<const NodeId> parts, std::size_t axis);
    NodeId slice(NodeId a, std::size_t axis, std::size_t begin, std::size_t end);
    NodeId max(std::span<const NodeId> scalars) { return apply(OpKind::max_list, scalars); }

    const Tensor& value(NodeId id) const { return nodes_.at(id.index).value; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Accumulates d(output)/d(param) into `store`'s gradient buffers for
    /// every parameter leaf. Repeated calls add up until zero_grad().
    void backward(NodeId output, ParamStore& store) const;

    /// Adjoint of every node up to `output` with respect to that scalar.
    /// Nodes that do not influence the output get zero tensors.
    std::vector<Tensor> adjoints(NodeId output) const;

private:
    enum class Role { constant, parameter, op };

    struct Node {
        Role role = Role::constant;
        OpKind kind = OpKind::add;
        std::vector<std::size_t> inputs;
        OpAttr attr;
        Tensor value;
        std::string param;
    };

    std::vector<Node> nodes_;
};

/// Central-difference gradient of a scalar function of the store.
/// Each scalar parameter is perturbed by +/- eps in turn; the result holds
/// the gradient as its values, under the same names.
ParamStore finite_diff_gradient(const std::function<double(const ParamStore&)>& f, const ParamStore& at,
                                double eps);

}  // namespace gml2o
