#include <cmath>
#include <random>

#include "doctest.h"
#include "gml2o/errors.hpp"
#include "gml2o/rng.hpp"
#include "gml2o/tape.hpp"
#include "gml2o/tensor.hpp"

using namespace gml2o;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(r * c);
    for (double& x : v) x = u(rng);
    return Tensor::matrix(r, c, std::move(v));
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

}  // namespace

TEST_CASE("primitive forward values") {
    const Tensor zero = Tensor::scalar(0.0);
    CHECK(primitive_forward(OpKind::sigmoid, {&zero}).item() == 0.5);
    CHECK(primitive_forward(OpKind::tanh, {&zero}).item() == 0.0);
    const Tensor eye = Tensor::identity(3);
    const Tensor v = Tensor::vector({1.5, -2.0, 3.25});
    CHECK(primitive_forward(OpKind::matmul, {&eye, &v}).values() == v.values());
}

TEST_CASE("shape mismatch names the op and shapes") {
    const Tensor a = Tensor::zeros({2, 3});
    const Tensor b = Tensor::zeros({2, 3});
    try {
        primitive_forward(OpKind::matmul, {&a, &b});
        FAIL("expected a shape error");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("matmul") != std::string::npos);
        CHECK(msg.find("2") != std::string::npos);
    }
    const Tensor c = Tensor::zeros({3});
    CHECK_THROWS_AS(primitive_forward(OpKind::add, {&a, &c}), ShapeError);
}

TEST_CASE("tensor shape invariant") {
    CHECK_THROWS(Tensor({2, 2}, {1.0, 2.0, 3.0}));
    CHECK(Tensor::zeros({4, 5}).size() == 20);
    CHECK(Tensor::scalar(2.0).rank() == 0);
}

TEST_CASE("matmul against a triple loop") {
    Rng rng(7);
    const Tensor a = random_tensor(3, 4, rng);
    const Tensor b = random_tensor(4, 2, rng);
    const Tensor c = matmul(a, b);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 4; ++k) s += a.at(i, k) * b.at(k, j);
            CHECK(c.at(i, j) == doctest::Approx(s).epsilon(1e-14));
        }
    }
    const Tensor at = random_tensor(4, 3, rng);
    const Tensor tn = matmul_tn(at, b);
    CHECK(tn.at(2, 1) == doctest::Approx(at.at(0, 2) * b.at(0, 1) + at.at(1, 2) * b.at(1, 1) +
                                         at.at(2, 2) * b.at(2, 1) + at.at(3, 2) * b.at(3, 1)));
}

TEST_CASE("backward: power rule and identity matmul") {
    ParamStore store;
    store.add("x", Tensor::scalar(3.0));
    Tape tape;
    const NodeId x = tape.parameter(store, "x");
    tape.backward(tape.mul(x, x), store);
    CHECK(store.grad("x").item() == 6.0);

    ParamStore s2;
    s2.add("v", Tensor::vector({0.3, -1.0, 2.0}));
    Tape t2;
    const NodeId w = t2.constant(Tensor::identity(3));
    t2.backward(t2.sum(t2.matmul(w, t2.parameter(s2, "v"))), s2);
    CHECK(s2.grad("v").values() == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("backward rejects non-scalar outputs") {
    ParamStore store;
    store.add("v", Tensor::vector({1.0, 2.0}));
    Tape tape;
    const NodeId v = tape.parameter(store, "v");
    CHECK_THROWS_AS(tape.backward(tape.tanh(v), store), ShapeError);
}

TEST_CASE("backward accumulates until zero_grad") {
    ParamStore store;
    store.add("x", Tensor::scalar(2.0));
    Tape tape;
    const NodeId x = tape.parameter(store, "x");
    const NodeId y = tape.scale(x, 3.0);
    tape.backward(y, store);
    tape.backward(y, store);
    CHECK(store.grad("x").item() == 6.0);
    store.zero_grad();
    CHECK(store.grad("x").item() == 0.0);
}

TEST_CASE("max_list routes to the lowest argmax") {
    ParamStore store;
    store.add("a", Tensor::scalar(1.0));
    store.add("b", Tensor::scalar(1.0));
    store.add("c", Tensor::scalar(0.5));
    Tape tape;
    const std::vector<NodeId> xs = {tape.parameter(store, "a"), tape.parameter(store, "b"), tape.parameter(store, "c")};
    tape.backward(tape.max(xs), store);
    CHECK(store.grad("a").item() == 1.0);
    CHECK(store.grad("b").item() == 0.0);
    CHECK(store.grad("c").item() == 0.0);
}

TEST_CASE("finite differences: trivial cases") {
    ParamStore s;
    s.add("x", Tensor::scalar(1.0));
    const ParamStore g = finite_diff_gradient([](const ParamStore& p) { return p.value("x").item() * p.value("x").item(); },
                                              s, 1e-5);
    CHECK(std::abs(g.value("x").item() - 2.0) < 1e-8);
    const ParamStore z = finite_diff_gradient([](const ParamStore&) { return 4.0; }, s, 1e-5);
    CHECK(z.value("x").item() == 0.0);
}

namespace {

// Scalar loss built from every primitive: an LSTM-like step, concat/slice and
// a max over list entries.
NodeId composite_loss(Tape& tape, const ParamStore& store, const Tensor& input) {
    const NodeId s = tape.constant(input);
    const NodeId w = tape.parameter(store, "w");
    const NodeId u = tape.parameter(store, "u");
    const NodeId b = tape.parameter(store, "b");
    const NodeId pre = tape.add(tape.matmul(s, w), tape.matmul(tape.constant(Tensor::filled({input.rows(), 1}, 1.0)), b));
    const NodeId i = tape.sigmoid(tape.slice(pre, 1, 0, 2));
    const NodeId g = tape.tanh(tape.slice(pre, 1, 2, 4));
    const NodeId c = tape.mul(i, g);
    const NodeId h = tape.mul(tape.sigmoid(tape.matmul(c, u)), tape.tanh(c));
    const std::vector<NodeId> parts = {h, c};
    const NodeId cat = tape.concat(parts, 1);
    const NodeId a = tape.sum(tape.slice(cat, 0, 0, 1));
    const NodeId z = tape.scale(tape.sum(tape.sub(cat, tape.constant(Tensor::filled({input.rows(), 4}, 0.1)))), 0.5);
    const std::vector<NodeId> items = {a, z, tape.scale(a, -1.0)};
    return tape.max(items);
}

}  // namespace

TEST_CASE("backward matches central differences on 100 random graphs") {
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng = make_rng(seed, 0, "core-test");
        ParamStore store;
        store.add("w", random_tensor(3, 4, rng));
        store.add("u", random_tensor(2, 2, rng));
        store.add("b", random_tensor(1, 4, rng));
        const Tensor input = random_tensor(2, 3, rng);
        Tape tape;
        tape.backward(composite_loss(tape, store, input), store);
        const ParamStore fd = finite_diff_gradient(
            [&](const ParamStore& p) {
                Tape t;
                return t.value(composite_loss(t, p, input)).item();
            },
            store, 1e-5);
        for (const auto& name : store.names()) {
            for (std::size_t k = 0; k < store.grad(name).size(); ++k) {
                if (rel_err(store.grad(name)[k], fd.value(name)[k]) >= 1e-4) ++failures;
            }
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("backward is linear and replays bitwise") {
    Rng rng(11);
    ParamStore store;
    store.add("w", random_tensor(3, 4, rng));
    store.add("u", random_tensor(2, 2, rng));
    store.add("b", random_tensor(1, 4, rng));
    const Tensor in1 = random_tensor(2, 3, rng);
    const Tensor in2 = random_tensor(2, 3, rng);

    ParamStore sum_store = store;
    Tape t;
    t.backward(t.add(composite_loss(t, sum_store, in1), composite_loss(t, sum_store, in2)), sum_store);

    ParamStore sep = store;
    Tape t1, t2;
    t1.backward(composite_loss(t1, sep, in1), sep);
    t2.backward(composite_loss(t2, sep, in2), sep);
    for (const auto& name : store.names()) {
        for (std::size_t k = 0; k < store.value(name).size(); ++k) {
            CHECK(sum_store.grad(name)[k] == doctest::Approx(sep.grad(name)[k]).epsilon(1e-13));
        }
    }

    ParamStore again = store;
    Tape t3, t4;
    t3.backward(composite_loss(t3, again, in1), again);
    ParamStore once = store;
    t4.backward(composite_loss(t4, once, in1), once);
    CHECK(again.grads() == once.grads());
}

TEST_CASE("stream derivation separates purposes and members") {
    CHECK(derive_stream_key(1, 0, "run") == derive_stream_key(1, 0, "run"));
    CHECK(derive_stream_key(1, 0, "run") != derive_stream_key(1, 1, "run"));
    CHECK(derive_stream_key(1, 0, "run") != derive_stream_key(1, 0, "init"));
    CHECK(derive_stream_key(1, 0, "run") != derive_stream_key(2, 0, "run"));
}
