#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tghoa/errors.hpp"
#include "tghoa/tensor.hpp"

namespace tghoa {

// Learnable parameter: value plus a persistent gradient accumulator.
// backward() adds into grad; callers zero it between optimizer steps.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape, 0.0) {}

  void zero_grad() { grad.fill(0.0); }
};

// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Define-by-run reverse-mode tape. A tape is built fresh per forward pass,
// single-threaded; backward() walks the nodes in exact reverse order and
// accumulates leaf gradients into their bound Params.
class Tape {
 public:
  // leaves
  Var input(Tensor value);  // constant, no gradient
  Var param(Param& p);      // copies the current value, grads flow back to p

  // primitives
  Var matvec(Var m, Var v);                    // {r,c} x {c} -> {r}
  Var matmul(Var a, Var b);                    // {m,k} x {k,n} -> {m,n}
  Var vecmat(Var v, Var m);                    // {r} x {r,c} -> {c}  (v^T M)
  Var add(Var a, Var b);                       // elementwise, same shape
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                       // Hadamard
  Var scale(Var x, double k);                  // constant scalar
  Var scalar_mul(Var s, Var x);                // s is {1}, broadcast multiply
  Var add_scalar(Var x, Var s);                // x + s, s is {1}
  Var tanh_(Var x);
  Var sigmoid_(Var x);
  Var relu_(Var x);
  Var log_(Var x);
  Var exp_(Var x);
  Var clamp(Var x, double lo, double hi);
  Var softmax(Var x, const std::vector<uint8_t>* mask = nullptr);  // {n} -> {n}
  Var concat(std::span<const Var> parts);      // vectors -> vector
  Var stack_rows(std::span<const Var> rows);   // n x {d} -> {n,d}
  Var mean_rows(Var m);                        // {n,d} -> {d}
  Var max_over_time(Var m);                    // {c,l} -> {c}, max along time
  Var conv1d(Var x, Var w, Var b, int stride); // x {cin,l}, w {cout,cin,k}, b {cout}
  Var maxpool1d(Var x, int width, int stride); // {c,l} -> {c,l'}
  Var dot(Var a, Var b);                       // {n} . {n} -> {1}
  Var embed_col(Var m, int col);               // column lookup {r,c} -> {r}
  Var pick(Var v, int i);                      // {n} -> {1}
  Var slice(Var v, int start, int len);        // {n} -> {len}
  Var sum(Var x);                              // all elements -> {1}

  const Tensor& val(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].needs_grad; }
  size_t size() const { return nodes_.size(); }

  // Accumulates d(loss)/d(param) into every bound Param reachable from loss.
  // May be called more than once on the same tape; gradients add up.
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    bool needs_grad = false;
    Param* bound = nullptr;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  std::vector<Node> nodes_;
  std::vector<Tensor> adj_;  // adjoints, live only during backward

  int push(Tensor value, bool needs, std::function<void(Tape&)> back);

  const Tensor& v_(int id) const { return nodes_[id].value; }
  bool rg_(int id) const { return nodes_[id].needs_grad; }
  Tensor& a_(int id);        // adjoint, allocated on first touch
  bool has_adj_(int id) const { return !adj_[id].shape.empty(); }

  static void check_same_shape(const char* op, const Tensor& a, const Tensor& b);
};

}  // namespace tghoa
