#include "gml2o/tape.hpp"

#include <cmath>

#include "gml2o/errors.hpp"

namespace gml2o {

const char* op_name(OpKind kind) noexcept {
    switch (kind) {
        case OpKind::add: return "add";
        case OpKind::subtract: return "subtract";
        case OpKind::hadamard: return "hadamard";
        case OpKind::matmul: return "matmul";
        case OpKind::concat: return "concat";
        case OpKind::slice: return "slice";
        case OpKind::sigmoid: return "sigmoid";
        case OpKind::tanh: return "tanh";
        case OpKind::scale: return "scale";
        case OpKind::sum: return "sum";
        case OpKind::max_list: return "max_list";
    }
    return "unknown";
}

namespace {

[[noreturn]] void shape_fail(OpKind kind, std::span<const Tensor* const> inputs, const std::string& why) {
    std::string msg = std::string(op_name(kind)) + ": " + why + "; input shapes";
    for (const Tensor* t : inputs) msg += " " + shape_string(t->shape());
    throw ShapeError(msg);
}

void require_arity(OpKind kind, std::span<const Tensor* const> inputs, std::size_t n) {
    if (inputs.size() != n) {
        shape_fail(kind, inputs, "expects " + std::to_string(n) + " inputs, got " + std::to_string(inputs.size()));
    }
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Tensor concat_forward(std::span<const Tensor* const> inputs, std::size_t axis) {
    const OpKind kind = OpKind::concat;
    if (inputs.empty()) shape_fail(kind, inputs, "needs at least one input");
    const std::size_t rank = inputs[0]->rank();
    if (rank == 0 || axis >= rank) shape_fail(kind, inputs, "axis " + std::to_string(axis) + " out of range");
    for (const Tensor* t : inputs) {
        if (t->rank() != rank) shape_fail(kind, inputs, "rank mismatch");
    }
    if (rank == 1) {
        std::vector<double> out;
        for (const Tensor* t : inputs) out.insert(out.end(), t->values().begin(), t->values().end());
        return Tensor::vector(std::move(out));
    }
    if (axis == 0) {
        const std::size_t cols = inputs[0]->cols();
        std::size_t rows = 0;
        std::vector<double> out;
        for (const Tensor* t : inputs) {
            if (t->cols() != cols) shape_fail(kind, inputs, "column count mismatch");
            rows += t->rows();
            out.insert(out.end(), t->values().begin(), t->values().end());
        }
        return Tensor::matrix(rows, cols, std::move(out));
    }
    const std::size_t rows = inputs[0]->rows();
    std::size_t cols = 0;
    for (const Tensor* t : inputs) {
        if (t->rows() != rows) shape_fail(kind, inputs, "row count mismatch");
        cols += t->cols();
    }
    Tensor out = Tensor::zeros({rows, cols});
    std::size_t offset = 0;
    for (const Tensor* t : inputs) {
        const std::size_t c = t->cols();
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < c; ++j) out.at(r, offset + j) = t->at(r, j);
        }
        offset += c;
    }
    return out;
}

Tensor slice_forward(const Tensor& in, const OpAttr& attr) {
    const Tensor* ptr = &in;
    std::span<const Tensor* const> inputs(&ptr, 1);
    const std::size_t rank = in.rank();
    if (rank == 0 || attr.axis >= rank) shape_fail(OpKind::slice, inputs, "axis out of range");
    const std::size_t extent = rank == 1 ? in.rows() : in.shape()[attr.axis];
    if (attr.begin > attr.end || attr.end > extent) {
        shape_fail(OpKind::slice, inputs,
                   "range [" + std::to_string(attr.begin) + ", " + std::to_string(attr.end) + ") out of bounds");
    }
    const std::size_t len = attr.end - attr.begin;
    if (rank == 1) {
        return Tensor::vector(std::vector<double>(in.values().begin() + static_cast<std::ptrdiff_t>(attr.begin),
                                                  in.values().begin() + static_cast<std::ptrdiff_t>(attr.end)));
    }
    if (attr.axis == 0) {
        const std::size_t cols = in.cols();
        return Tensor::matrix(len, cols,
                              std::vector<double>(in.values().begin() + static_cast<std::ptrdiff_t>(attr.begin * cols),
                                                  in.values().begin() + static_cast<std::ptrdiff_t>(attr.end * cols)));
    }
    Tensor out = Tensor::zeros({in.rows(), len});
    for (std::size_t r = 0; r < in.rows(); ++r) {
        for (std::size_t j = 0; j < len; ++j) out.at(r, j) = in.at(r, attr.begin + j);
    }
    return out;
}

}  // namespace

Tensor primitive_forward(OpKind kind, std::span<const Tensor* const> inputs, const OpAttr& attr) {
    switch (kind) {
        case OpKind::add:
        case OpKind::subtract:
        case OpKind::hadamard: {
            require_arity(kind, inputs, 2);
            const Tensor& a = *inputs[0];
            const Tensor& b = *inputs[1];
            if (!a.same_shape(b)) shape_fail(kind, inputs, "elementwise shapes differ");
            Tensor out = a;
            auto o = out.data();
            auto bv = b.data();
            if (kind == OpKind::add) {
                for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
            } else if (kind == OpKind::subtract) {
                for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
            } else {
                for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
            }
            return out;
        }
        case OpKind::matmul: {
            require_arity(kind, inputs, 2);
            const Tensor& a = *inputs[0];
            const Tensor& b = *inputs[1];
            if (a.rank() != 2 || b.rank() == 0 || a.cols() != b.rows()) {
                shape_fail(kind, inputs, "inner dimensions differ");
            }
            return gml2o::matmul(a, b);
        }
        case OpKind::concat: return concat_forward(inputs, attr.axis);
        case OpKind::slice:
            require_arity(kind, inputs, 1);
            return slice_forward(*inputs[0], attr);
        case OpKind::sigmoid:
        case OpKind::tanh: {
            require_arity(kind, inputs, 1);
            Tensor out = *inputs[0];
            if (kind == OpKind::sigmoid) {
                for (double& v : out.data()) v = sigmoid(v);
            } else {
                for (double& v : out.data()) v = std::tanh(v);
            }
            return out;
        }
        case OpKind::scale: {
            require_arity(kind, inputs, 1);
            Tensor out = *inputs[0];
            out *= attr.factor;
            return out;
        }
        case OpKind::sum: {
            require_arity(kind, inputs, 1);
            double s = 0.0;
            for (double v : inputs[0]->data()) s += v;
            return Tensor::scalar(s);
        }
        case OpKind::max_list: {
            if (inputs.empty()) shape_fail(kind, inputs, "needs at least one input");
            double best = 0.0;
            for (std::size_t i = 0; i < inputs.size(); ++i) {
                if (inputs[i]->size() != 1) shape_fail(kind, inputs, "inputs must be scalars");
                const double v = inputs[i]->data()[0];
                if (i == 0 || v > best) best = v;
            }
            return Tensor::scalar(best);
        }
    }
    throw ShapeError("unknown op kind");
}

Tensor primitive_forward(OpKind kind, std::initializer_list<const Tensor*> inputs, const OpAttr& attr) {
    return primitive_forward(kind, std::span<const Tensor* const>(inputs.begin(), inputs.size()), attr);
}

// ParamStore

void ParamStore::add(const std::string& name, Tensor value) {
    if (values_.contains(name)) throw DuplicateError("parameter '" + name + "' already exists");
    grads_.emplace(name, Tensor::zeros(value.shape()));
    values_.emplace(name, std::move(value));
}

const Tensor& ParamStore::value(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw NotFoundError("unknown parameter '" + name + "'");
    return it->second;
}

Tensor& ParamStore::mutable_value(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end()) throw NotFoundError("unknown parameter '" + name + "'");
    return it->second;
}

const Tensor& ParamStore::grad(const std::string& name) const {
    auto it = grads_.find(name);
    if (it == grads_.end()) throw NotFoundError("unknown parameter '" + name + "'");
    return it->second;
}

Tensor& ParamStore::mutable_grad(const std::string& name) {
    auto it = grads_.find(name);
    if (it == grads_.end()) throw NotFoundError("unknown parameter '" + name + "'");
    return it->second;
}

void ParamStore::zero_grad() {
    for (auto& [name, g] : grads_) {
        for (double& v : g.data()) v = 0.0;
    }
}

void ParamStore::gradient_step(double lr) {
    for (auto& [name, value] : values_) {
        auto v = value.data();
        auto g = grads_.at(name).data();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    }
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& [name, v] : values_) out.push_back(name);
    return out;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, v] : values_) n += v.size();
    return n;
}

bool ParamStore::all_finite() const {
    for (const auto& [name, v] : values_) {
        if (!v.all_finite()) return false;
    }
    return true;
}

// Tape

NodeId Tape::constant(Tensor value) {
    Node n;
    n.role = Role::constant;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
}

NodeId Tape::parameter(const ParamStore& store, const std::string& name) {
    Node n;
    n.role = Role::parameter;
    n.value = store.value(name);
    n.param = name;
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
}

NodeId Tape::apply(OpKind kind, std::span<const NodeId> inputs, const OpAttr& attr) {
    std::vector<const Tensor*> values;
    std::vector<std::size_t> ids;
    values.reserve(inputs.size());
    ids.reserve(inputs.size());
    for (NodeId id : inputs) {
        if (id.index >= nodes_.size()) throw ShapeError(std::string(op_name(kind)) + ": dangling node id");
        values.push_back(&nodes_[id.index].value);
        ids.push_back(id.index);
    }
    Node n;
    n.role = Role::op;
    n.kind = kind;
    n.attr = attr;
    n.value = primitive_forward(kind, values, attr);
    n.inputs = std::move(ids);
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
}

NodeId Tape::apply(OpKind kind, std::initializer_list<NodeId> inputs, const OpAttr& attr) {
    return apply(kind, std::span<const NodeId>(inputs.begin(), inputs.size()), attr);
}

NodeId Tape::scale(NodeId a, double factor) {
    OpAttr attr;
    attr.factor = factor;
    return apply(OpKind::scale, {a}, attr);
}

NodeId Tape::concat(std::span<const NodeId> parts, std::size_t axis) {
    OpAttr attr;
    attr.axis = axis;
    return apply(OpKind::concat, parts, attr);
}

NodeId Tape::slice(NodeId a, std::size_t axis, std::size_t begin, std::size_t end) {
    OpAttr attr;
    attr.axis = axis;
    attr.begin = begin;
    attr.end = end;
    return apply(OpKind::slice, {a}, attr);
}

std::vector<Tensor> Tape::adjoints(NodeId output) const {
    if (output.index >= nodes_.size()) throw ShapeError("backward: unknown output node");
    if (nodes_[output.index].value.size() != 1) {
        throw ShapeError("backward: output must be scalar, got shape " +
                         shape_string(nodes_[output.index].value.shape()));
    }
    std::vector<Tensor> adj(output.index + 1);
    std::vector<bool> live(output.index + 1, false);
    auto touch = [&](std::size_t i) -> Tensor& {
        if (!live[i]) {
            adj[i] = Tensor::zeros(nodes_[i].value.shape());
            live[i] = true;
        }
        return adj[i];
    };
    touch(output.index).data()[0] = 1.0;

    for (std::size_t idx = output.index + 1; idx-- > 0;) {
        if (!live[idx]) continue;
        const Node& n = nodes_[idx];
        if (n.role != Role::op) continue;
        const Tensor& g = adj[idx];
        switch (n.kind) {
            case OpKind::add:
                touch(n.inputs[0]) += g;
                touch(n.inputs[1]) += g;
                break;
            case OpKind::subtract:
                touch(n.inputs[0]) += g;
                touch(n.inputs[1]) -= g;
                break;
            case OpKind::hadamard: {
                const Tensor& a = nodes_[n.inputs[0]].value;
                const Tensor& b = nodes_[n.inputs[1]].value;
                Tensor& ga = touch(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
                Tensor& gb = touch(n.inputs[1]);
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
                break;
            }
            case OpKind::matmul: {
                const Tensor& a = nodes_[n.inputs[0]].value;
                const Tensor& b = nodes_[n.inputs[1]].value;
                if (b.rank() == 1) {
                    // c_i = sum_j a_ij b_j
                    Tensor& ga = touch(n.inputs[0]);
                    const std::size_t m = a.rows(), k = a.cols();
                    for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t j = 0; j < k; ++j) ga.at(i, j) += g[i] * b[j];
                    }
                    Tensor& gb = touch(n.inputs[1]);
                    for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t j = 0; j < k; ++j) gb[j] += a.at(i, j) * g[i];
                    }
                } else {
                    touch(n.inputs[0]) += matmul_nt(g, b);
                    touch(n.inputs[1]) += matmul_tn(a, g);
                }
                break;
            }
            case OpKind::concat: {
                const bool by_cols = g.rank() == 2 && n.attr.axis == 1;
                std::size_t offset = 0;
                for (std::size_t in : n.inputs) {
                    Tensor& gi = touch(in);
                    if (by_cols) {
                        const std::size_t c = gi.cols();
                        for (std::size_t r = 0; r < gi.rows(); ++r) {
                            for (std::size_t j = 0; j < c; ++j) gi.at(r, j) += g.at(r, offset + j);
                        }
                        offset += c;
                    } else {
                        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[offset + i];
                        offset += gi.size();
                    }
                }
                break;
            }
            case OpKind::slice: {
                Tensor& gi = touch(n.inputs[0]);
                if (gi.rank() == 2 && n.attr.axis == 1) {
                    const std::size_t len = n.attr.end - n.attr.begin;
                    for (std::size_t r = 0; r < gi.rows(); ++r) {
                        for (std::size_t j = 0; j < len; ++j) gi.at(r, n.attr.begin + j) += g.at(r, j);
                    }
                } else {
                    const std::size_t offset = n.attr.begin * gi.cols();
                    for (std::size_t i = 0; i < g.size(); ++i) gi[offset + i] += g[i];
                }
                break;
            }
            case OpKind::sigmoid: {
                const Tensor& y = n.value;
                Tensor& gi = touch(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * y[i] * (1.0 - y[i]);
                break;
            }
            case OpKind::tanh: {
                const Tensor& y = n.value;
                Tensor& gi = touch(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * (1.0 - y[i] * y[i]);
                break;
            }
            case OpKind::scale: {
                Tensor& gi = touch(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i) gi[i] += n.attr.factor * g[i];
                break;
            }
            case OpKind::sum: {
                const double s = g[0];
                Tensor& gi = touch(n.inputs[0]);
                for (double& v : gi.data()) v += s;
                break;
            }
            case OpKind::max_list: {
                // Subgradient: route everything to the lowest-index argmax.
                std::size_t best = 0;
                for (std::size_t i = 1; i < n.inputs.size(); ++i) {
                    if (nodes_[n.inputs[i]].value[0] > nodes_[n.inputs[best]].value[0]) best = i;
                }
                touch(n.inputs[best])[0] += g[0];
                break;
            }
        }
    }
    for (std::size_t i = 0; i < adj.size(); ++i) {
        if (!live[i]) adj[i] = Tensor::zeros(nodes_[i].value.shape());
    }
    return adj;
}

void Tape::backward(NodeId output, ParamStore& store) const {
    const std::vector<Tensor> adj = adjoints(output);
    for (std::size_t i = 0; i < adj.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.role == Role::parameter) store.mutable_grad(n.param) += adj[i];
    }
}

ParamStore finite_diff_gradient(const std::function<double(const ParamStore&)>& f, const ParamStore& at,
                                double eps) {
    if (!(eps > 0.0)) throw Error("finite_diff_gradient: eps must be positive");
    ParamStore work = at;
    ParamStore out;
    for (const auto& name : at.names()) {
        Tensor g = Tensor::zeros(at.value(name).shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double orig = at.value(name)[i];
            work.mutable_value(name)[i] = orig + eps;
            const double up = f(work);
            work.mutable_value(name)[i] = orig - eps;
            const double down = f(work);
            work.mutable_value(name)[i] = orig;
            g[i] = (up - down) / (2.0 * eps);
        }
        out.add(name, std::move(g));
    }
    return out;
}

}  // namespace gml2o
