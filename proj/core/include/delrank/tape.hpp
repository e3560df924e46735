#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "delrank/param_store.hpp"
#include "delrank/tensor.hpp"

namespace delrank {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  double item() const { return value().item(); }
};

using GradMap = std::map<std::string, Tensor>;

// Records a forward computation as a sequence of primitive nodes and replays
// it backward to produce exact reverse-mode gradients of one scalar output
// with respect to every named leaf. One tape describes one forward pass;
// distinct tapes are independent and may run concurrently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Untracked input: participates in the computation, receives no gradient.
  Var constant(Tensor value);
  Var constant_scalar(double v);
  Var constant_vector(std::vector<double> values);

  // Named leaf backed by a parameter in `store`. Repeated calls with the
  // same name return the same node, so a parameter used twice in a forward
  // pass accumulates both gradient contributions.
  Var param(const ParamStore& store, const std::string& name);

  // Named leaf with an explicit value (for loss-level gradient checks).
  Var leaf(Tensor value, const std::string& name);

  // Reverse sweep from a one-element output. Returns a gradient tensor for
  // every named leaf touched by the forward pass; leaves never touched are
  // absent. The overload taking a ParamStore additionally fills exact zero
  // gradients for parameters the tape never saw.
  GradMap backward(Var output);
  GradMap backward(Var output, const ParamStore& fill_zeros_for);

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  std::size_t size() const { return nodes_.size(); }

  // Used by primitive backward rules during the reverse sweep.
  void accumulate(int id, const Tensor& g);
  const Tensor& grad_of(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

 private:
  friend Var make_node(Tape& tape, Tensor value, std::vector<int> parents,
                       std::function<void(Tape&, int)> back);

  struct Node {
    Tensor value;
    Tensor grad;
    bool grad_alloc = false;
    bool needs_grad = false;
    std::string name;
    std::vector<int> parents;
    std::function<void(Tape&, int)> back;
  };

  int emit(Tensor value, std::vector<int> parents, std::function<void(Tape&, int)> back);
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }

  std::vector<Node> nodes_;
  std::map<std::string, int> named_;
};

// --- differentiable primitives ---------------------------------------------
// Elementwise binary ops accept equal shapes, or one one-element operand
// which broadcasts. div throws on a zero denominator element; log on a
// non-positive argument.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double c);

// A (n x k) * B (k x m) -> n x m, or A (n x k) * v (k) -> n.
Var matmul(Var a, Var b);

// M (n x m) + row vector v (m), broadcast over rows.
Var add_rowvec(Var m, Var v);

// Concatenation along the last axis: two vectors, two matrices with equal
// row counts, or a matrix with a column (vector of length n).
Var concat(Var a, Var b);

// Mean over axis 0 of a matrix -> vector of column means.
Var mean_pool(Var a, std::size_t axis);

Var softplus(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var abs(Var a);

// Elementwise max(x, floor) with a scalar floor.
Var max_floor(Var a, double floor);

// Sum of all elements -> scalar.
Var sum(Var a);

// out[k] = a[idx[k]] over flat indices; duplicate indices accumulate grads.
Var select(Var a, std::vector<std::size_t> idx);

// v (n) -> matrix D with D[i][j] = v[i] - v[j].
Var outer_diff(Var v);

Var transpose(Var a);

// u[i] = log sum_{j >= i} exp(v[j]), computed with a running max shift.
Var suffix_logsumexp(Var v);

// Max of all elements -> scalar; subgradient routed to the first argmax.
Var max_reduce(Var v);

// Identity with a new shape (same element count).
Var reshape(Var a, std::vector<std::size_t> shape);

// Assemble k vectors of equal length m into a k x m matrix / k scalars into
// a length-k vector.
Var stack_rows(const std::vector<Var>& rows);
Var stack_scalars(const std::vector<Var>& xs);

}  // namespace delrank
