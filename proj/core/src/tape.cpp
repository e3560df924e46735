#include "delrank/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace delrank {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

void check_same_tape(Var a, Var b, const char* op) {
  if (a.tape == nullptr || b.tape == nullptr || a.tape != b.tape) {
    throw std::invalid_argument(std::string(op) + ": operands must live on the same tape");
  }
}

// Shape rule for elementwise binary ops: equal shapes, or one-element
// broadcast on either side.
void check_elementwise(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b) && !a.is_scalar() && !b.is_scalar()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

Tensor sum_to_scalar_like(const Tensor& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.numel(); ++i) s += g[i];
  return Tensor::scalar(s);
}

}  // namespace

const Tensor& Var::value() const {
  if (tape == nullptr) throw std::invalid_argument("Var::value: detached handle");
  return tape->value(id);
}

Var make_node(Tape& tape, Tensor value, std::vector<int> parents,
              std::function<void(Tape&, int)> back) {
  const int id = tape.emit(std::move(value), std::move(parents), std::move(back));
  return Var{&tape, id};
}

int Tape::emit(Tensor value, std::vector<int> parents, std::function<void(Tape&, int)> back) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.back = std::move(back);
  for (int p : n.parents) {
    if (nodes_[static_cast<std::size_t>(p)].needs_grad) {
      n.needs_grad = true;
      break;
    }
  }
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant_scalar(double v) { return constant(Tensor::scalar(v)); }

Var Tape::constant_vector(std::vector<double> values) {
  return constant(Tensor::from_vector(std::move(values)));
}

Var Tape::param(const ParamStore& store, const std::string& name) {
  auto it = named_.find(name);
  if (it != named_.end()) return Var{this, it->second};
  return leaf(store.at(name), name);
}

Var Tape::leaf(Tensor value, const std::string& name) {
  if (name.empty()) throw std::invalid_argument("Tape::leaf: empty name");
  if (named_.count(name) != 0) {
    throw std::invalid_argument("Tape::leaf: duplicate leaf '" + name + "'");
  }
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  n.name = name;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  named_[name] = id;
  return Var{this, id};
}

void Tape::accumulate(int id, const Tensor& g) {
  Node& n = node(id);
  if (!n.needs_grad) return;
  if (!n.grad_alloc) {
    n.grad = Tensor::zeros(n.value.shape());
    n.grad_alloc = true;
  }
  // Rank-0 and shape-{1} scalars are interchangeable.
  if (!n.grad.same_shape(g) && !(n.grad.numel() == 1 && g.numel() == 1)) {
    throw std::invalid_argument("Tape: gradient shape mismatch");
  }
  double* dst = n.grad.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < g.numel(); ++i) dst[i] += src[i];
}

GradMap Tape::backward(Var output) {
  if (output.tape != this) throw std::invalid_argument("Tape::backward: foreign output");
  Node& out = node(output.id);
  if (out.value.numel() != 1) {
    throw std::invalid_argument("Tape::backward: output must be scalar");
  }
  out.grad = Tensor::full(out.value.shape(), 1.0);
  out.grad_alloc = true;
  for (int id = output.id; id >= 0; --id) {
    Node& n = node(id);
    if (!n.grad_alloc || !n.needs_grad) continue;
    if (n.back) n.back(*this, id);
  }
  GradMap grads;
  for (const auto& [name, id] : named_) {
    const Node& n = node(id);
    grads[name] = n.grad_alloc ? n.grad : Tensor::zeros(n.value.shape());
  }
  // Reset so another backward from a different output starts clean.
  for (Node& n : nodes_) {
    n.grad = Tensor{};
    n.grad_alloc = false;
  }
  return grads;
}

GradMap Tape::backward(Var output, const ParamStore& fill_zeros_for) {
  GradMap grads = backward(output);
  for (const auto& [name, value] : fill_zeros_for) {
    if (grads.count(name) == 0) grads[name] = Tensor::zeros(value.shape());
  }
  return grads;
}

// --- elementwise binaries ---------------------------------------------------

namespace {

enum class BinOp { kAdd, kSub, kMul, kDiv };

Var binary(Var a, Var b, BinOp op, const char* name) {
  check_same_tape(a, b, name);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  check_elementwise(av, bv, name);

  const bool a_scalar = av.is_scalar() && !bv.is_scalar();
  const bool b_scalar = bv.is_scalar() && !av.is_scalar();
  const Tensor& big = a_scalar ? bv : av;

  Tensor out = Tensor::zeros(big.shape());
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a_scalar ? av[0] : av[i];
    const double y = b_scalar ? bv[0] : bv[i];
    switch (op) {
      case BinOp::kAdd: out[i] = x + y; break;
      case BinOp::kSub: out[i] = x - y; break;
      case BinOp::kMul: out[i] = x * y; break;
      case BinOp::kDiv:
        if (y == 0.0) throw std::domain_error("div: zero denominator element");
        out[i] = x / y;
        break;
    }
  }

  const int aid = a.id;
  const int bid = b.id;
  auto back = [aid, bid, op, a_scalar, b_scalar](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& av2 = t.value(aid);
    const Tensor& bv2 = t.value(bid);
    const std::size_t n2 = g.numel();
    Tensor ga = Tensor::zeros(g.shape());
    Tensor gb = Tensor::zeros(g.shape());
    for (std::size_t i = 0; i < n2; ++i) {
      const double x = a_scalar ? av2[0] : av2[i];
      const double y = b_scalar ? bv2[0] : bv2[i];
      const double gi = g[i];
      switch (op) {
        case BinOp::kAdd:
          ga[i] = gi;
          gb[i] = gi;
          break;
        case BinOp::kSub:
          ga[i] = gi;
          gb[i] = -gi;
          break;
        case BinOp::kMul:
          ga[i] = gi * y;
          gb[i] = gi * x;
          break;
        case BinOp::kDiv:
          ga[i] = gi / y;
          gb[i] = -gi * x / (y * y);
          break;
      }
    }
    t.accumulate(aid, a_scalar ? sum_to_scalar_like(ga) : ga);
    t.accumulate(bid, b_scalar ? sum_to_scalar_like(gb) : gb);
  };
  return make_node(*a.tape, std::move(out), {aid, bid}, back);
}

}  // namespace

Var add(Var a, Var b) { return binary(a, b, BinOp::kAdd, "add"); }
Var sub(Var a, Var b) { return binary(a, b, BinOp::kSub, "sub"); }
Var mul(Var a, Var b) { return binary(a, b, BinOp::kMul, "mul"); }
Var div(Var a, Var b) { return binary(a, b, BinOp::kDiv, "div"); }

Var scale(Var a, double c) {
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c;
  const int aid = a.id;
  auto back = [aid, c](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor ga = g;
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] *= c;
    t.accumulate(aid, ga);
  };
  return make_node(*a.tape, std::move(out), {aid}, back);
}

// --- matmul ------------------------------------------------------------------

Var matmul(Var a, Var b) {
  check_same_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2) throw std::invalid_argument("matmul: lhs must be a matrix");
  const std::size_t n = av.rows();
  const std::size_t k = av.cols();

  const int aid = a.id;
  const int bid = b.id;

  if (bv.rank() == 1) {
    if (bv.numel() != k) throw std::invalid_argument("matmul: inner dimension mismatch");
    Tensor out = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = av.data() + i * k;
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += row[l] * bv[l];
      out[i] = s;
    }
    auto back = [aid, bid, n, k](Tape& t, int self) {
      const Tensor& g = t.grad_of(self);
      const Tensor& a2 = t.value(aid);
      const Tensor& b2 = t.value(bid);
      Tensor ga = Tensor::zeros({n, k});
      Tensor gb = Tensor::zeros({k});
      for (std::size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        double* ga_row = ga.data() + i * k;
        const double* a_row = a2.data() + i * k;
        for (std::size_t l = 0; l < k; ++l) {
          ga_row[l] = gi * b2[l];
          gb[l] += gi * a_row[l];
        }
      }
      t.accumulate(aid, ga);
      t.accumulate(bid, gb);
    };
    return make_node(*a.tape, std::move(out), {aid, bid}, back);
  }

  if (bv.rank() != 2 || bv.rows() != k) {
    throw std::invalid_argument("matmul: inner dimension mismatch");
  }
  const std::size_t m = bv.cols();
  Tensor out = Tensor::zeros({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    const double* a_row = av.data() + i * k;
    double* o_row = out.data() + i * m;
    for (std::size_t l = 0; l < k; ++l) {
      const double x = a_row[l];
      if (x == 0.0) continue;
      const double* b_row = bv.data() + l * m;
      for (std::size_t j = 0; j < m; ++j) o_row[j] += x * b_row[j];
    }
  }
  auto back = [aid, bid, n, k, m](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& a2 = t.value(aid);
    const Tensor& b2 = t.value(bid);
    Tensor ga = Tensor::zeros({n, k});
    Tensor gb = Tensor::zeros({k, m});
    for (std::size_t i = 0; i < n; ++i) {
      const double* g_row = g.data() + i * m;
      double* ga_row = ga.data() + i * k;
      const double* a_row = a2.data() + i * k;
      for (std::size_t l = 0; l < k; ++l) {
        const double* b_row = b2.data() + l * m;
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += g_row[j] * b_row[j];
        ga_row[l] = s;
        double* gb_row = gb.data() + l * m;
        const double x = a_row[l];
        for (std::size_t j = 0; j < m; ++j) gb_row[j] += x * g_row[j];
      }
    }
    t.accumulate(aid, ga);
    t.accumulate(bid, gb);
  };
  return make_node(*a.tape, std::move(out), {aid, bid}, back);
}

Var add_rowvec(Var m, Var v) {
  check_same_tape(m, v, "add_rowvec");
  const Tensor& mv = m.value();
  const Tensor& vv = v.value();
  if (mv.rank() != 2 || vv.rank() != 1 || vv.numel() != mv.cols()) {
    throw std::invalid_argument("add_rowvec: expected matrix and matching row vector");
  }
  const std::size_t rows = mv.rows();
  const std::size_t cols = mv.cols();
  Tensor out = mv;
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = out.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] += vv[j];
  }
  const int mid = m.id;
  const int vid = v.id;
  auto back = [mid, vid, rows, cols](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor gv = Tensor::zeros({cols});
    for (std::size_t i = 0; i < rows; ++i) {
      const double* row = g.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) gv[j] += row[j];
    }
    t.accumulate(mid, g);
    t.accumulate(vid, gv);
  };
  return make_node(*m.tape, std::move(out), {mid, vid}, back);
}

// --- concat -------------------------------------------------------------------

Var concat(Var a, Var b) {
  check_same_tape(a, b, "concat");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const int aid = a.id;
  const int bid = b.id;

  if (av.rank() <= 1 && bv.rank() <= 1) {
    const std::size_t p = av.numel();
    const std::size_t q = bv.numel();
    Tensor out = Tensor::zeros({p + q});
    std::copy(av.data(), av.data() + p, out.data());
    std::copy(bv.data(), bv.data() + q, out.data() + p);
    auto back = [aid, bid, p, q](Tape& t, int self) {
      const Tensor& g = t.grad_of(self);
      Tensor ga = Tensor::zeros(t.value(aid).shape());
      Tensor gb = Tensor::zeros(t.value(bid).shape());
      std::copy(g.data(), g.data() + p, ga.data());
      std::copy(g.data() + p, g.data() + p + q, gb.data());
      t.accumulate(aid, ga);
      t.accumulate(bid, gb);
    };
    return make_node(*a.tape, std::move(out), {aid, bid}, back);
  }

  if (av.rank() != 2) throw std::invalid_argument("concat: unsupported operand ranks");
  const std::size_t n = av.rows();
  const std::size_t p = av.cols();
  std::size_t q = 0;
  if (bv.rank() == 2) {
    if (bv.rows() != n) throw std::invalid_argument("concat: row count mismatch");
    q = bv.cols();
  } else if (bv.rank() == 1 && bv.numel() == n) {
    q = 1;  // vector appended as a column
  } else {
    throw std::invalid_argument("concat: rhs must be a matrix with equal rows or a length-n vector");
  }
  Tensor out = Tensor::zeros({n, p + q});
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.data() + i * (p + q);
    std::copy(av.data() + i * p, av.data() + (i + 1) * p, row);
    if (bv.rank() == 2) {
      std::copy(bv.data() + i * q, bv.data() + (i + 1) * q, row + p);
    } else {
      row[p] = bv[i];
    }
  }
  const bool b_is_vec = bv.rank() == 1;
  auto back = [aid, bid, n, p, q, b_is_vec](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor ga = Tensor::zeros({n, p});
    Tensor gb = b_is_vec ? Tensor::zeros({n}) : Tensor::zeros({n, q});
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = g.data() + i * (p + q);
      std::copy(row, row + p, ga.data() + i * p);
      if (b_is_vec) {
        gb[i] = row[p];
      } else {
        std::copy(row + p, row + p + q, gb.data() + i * q);
      }
    }
    t.accumulate(aid, ga);
    t.accumulate(bid, gb);
  };
  return make_node(*a.tape, std::move(out), {aid, bid}, back);
}

Var mean_pool(Var a, std::size_t axis) {
  if (axis != 0) throw std::invalid_argument("mean_pool: only axis 0 is supported");
  const Tensor& av = a.value();
  if (av.rank() != 2) throw std::invalid_argument("mean_pool: expected a matrix");
  const std::size_t n = av.rows();
  const std::size_t m = av.cols();
  Tensor out = Tensor::zeros({m});
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = av.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) out[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < m; ++j) out[j] *= inv;
  const int aid = a.id;
  auto back = [aid, n, m, inv](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor ga = Tensor::zeros({n, m});
    for (std::size_t i = 0; i < n; ++i) {
      double* row = ga.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) row[j] = g[j] * inv;
    }
    t.accumulate(aid, ga);
  };
  return make_node(*a.tape, std::move(out), {aid}, back);
}

// --- elementwise unaries ------------------------------------------------------

namespace {

enum class UnOp { kSoftplus, kSigmoid, kRelu, kExp, kLog, kAbs };

Var unary(Var a, UnOp op) {
  const Tensor& av = a.value();
  Tensor out = Tensor::zeros(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) {
    const double x = av[i];
    switch (op) {
      case UnOp::kSoftplus: out[i] = stable_softplus(x); break;
      case UnOp::kSigmoid: out[i] = stable_sigmoid(x); break;
      case UnOp::kRelu: out[i] = x > 0.0 ? x : 0.0; break;
      case UnOp::kExp: out[i] = std::exp(x); break;
      case UnOp::kLog:
        if (x <= 0.0) throw std::domain_error("log: non-positive argument");
        out[i] = std::log(x);
        break;
      case UnOp::kAbs: out[i] = std::abs(x); break;
    }
  }
  const int aid = a.id;
  auto back = [aid, op](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& x = t.value(aid);
    const Tensor& y = t.value(self);
    Tensor ga = Tensor::zeros(g.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) {
      double d = 0.0;
      switch (op) {
        case UnOp::kSoftplus: d = stable_sigmoid(x[i]); break;
        case UnOp::kSigmoid: d = y[i] * (1.0 - y[i]); break;
        case UnOp::kRelu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
        case UnOp::kExp: d = y[i]; break;
        case UnOp::kLog: d = 1.0 / x[i]; break;
        case UnOp::kAbs: d = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0); break;
      }
      ga[i] = g[i] * d;
    }
    t.accumulate(aid, ga);
  };
  return make_node(*a.tape, std::move(out), {aid}, back);
}

}  // namespace

Var softplus(Var a) { return unary(a, UnOp::kSoftplus); }
Var sigmoid(Var a) { return unary(a, UnOp::kSigmoid); }
Var relu(Var a) { return unary(a, UnOp::kRelu); }
Var exp(Var a) { return unary(a, UnOp::kExp); }
Var log(Var a) { return unary(a, UnOp::kLog); }
Var abs(Var a) { return unary(a, UnOp::kAbs); }

Var max_floor(Var a, double floor) {
  const Tensor& av = a.value();
  Tensor out = Tensor::zeros(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) out[i] = std::max(av[i], floor);
  const int aid = a.id;
  auto back = [aid, floor](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& x = t.value(aid);
    Tensor ga = Tensor::zeros(g.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] = x[i] > floor ? g[i] : 0.0;
    t.accumulate(aid, ga);
  };
  return make_node(*a.tape, std::move(out), {aid}, back);
}

Var sum(Var a) {
  const Tensor& av = a.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.numel(); ++i) s += av[i];
  const int aid = a.id;
  auto back = [aid](Tape& t, int self) {
    const double g = t.grad_of(self)[0];
    Tensor ga = Tensor::full(t.value(aid).shape(), g);
    t.accumulate(aid, ga);
  };
  return make_node(*a.tape, Tensor::scalar(s), {aid}, back);
}

Var select(Var a, std::vector<std::size_t> idx) {
  const Tensor& av = a.value();
  Tensor out = Tensor::zeros({idx.size()});
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= av.numel()) throw std::invalid_argument("select: index out of range");
    out[k] = av[idx[k]];
  }
  const int aid = a.id;
  auto back = [aid, idx = std::move(idx)](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor ga = Tensor::zeros(t.value(aid).shape());
    for (std::size_t k = 0; k < idx.size(); ++k) ga[idx[k]] += g[k];
    t.accumulate(aid, ga);
  };
  return make_node(*a.tape, std::move(out), {aid}, back);
}

Var outer_diff(Var v) {
  const Tensor& vv = v.value();
  if (vv.rank() != 1) throw std::invalid_argument("outer_diff: expected a vector");
  const std::size_t n = vv.numel();
  Tensor out = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] = vv[i] - vv[j];
  }
  const int vid = v.id;
  auto back = [vid, n](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor gv = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = g.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        gv[i] += row[j];
        gv[j] -= row[j];
      }
    }
    t.accumulate(vid, gv);
  };
  return make_node(*v.tape, std::move(out), {vid}, back);
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  if (av.rank() != 2) throw std::invalid_argument("transpose: expected a matrix");
  const std::size_t n = av.rows();
  const std::size_t m = av.cols();
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out.data()[j * n + i] = av.data()[i * m + j];
  }
  const int aid = a.id;
  auto back = [aid, n, m](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);  // m x n
    Tensor ga = Tensor::zeros({n, m});
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) ga.data()[i * m + j] = g.data()[j * n + i];
    }
    t.accumulate(aid, ga);
  };
  return make_node(*a.tape, std::move(out), {aid}, back);
}

Var suffix_logsumexp(Var v) {
  const Tensor& vv = v.value();
  if (vv.rank() != 1 || vv.numel() == 0) {
    throw std::invalid_argument("suffix_logsumexp: expected a non-empty vector");
  }
  const std::size_t n = vv.numel();
  Tensor out = Tensor::zeros({n});
  // Running LSE from the tail: lse_i = max(v_i, lse_{i+1}) + log1p(exp(min - max)).
  double lse = vv[n - 1];
  out[n - 1] = lse;
  for (std::size_t i = n - 1; i-- > 0;) {
    const double hi = std::max(vv[i], lse);
    const double lo = std::min(vv[i], lse);
    lse = hi + std::log1p(std::exp(lo - hi));
    out[i] = lse;
  }
  const int vid = v.id;
  auto back = [vid, n](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& x = t.value(vid);
    const Tensor& u = t.value(self);
    Tensor gv = Tensor::zeros({n});
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i <= j; ++i) s += g[i] * std::exp(x[j] - u[i]);
      gv[j] = s;
    }
    t.accumulate(vid, gv);
  };
  return make_node(*v.tape, std::move(out), {vid}, back);
}

Var max_reduce(Var v) {
  const Tensor& vv = v.value();
  if (vv.numel() == 0) throw std::invalid_argument("max_reduce: empty tensor");
  std::size_t arg = 0;
  for (std::size_t i = 1; i < vv.numel(); ++i) {
    if (vv[i] > vv[arg]) arg = i;
  }
  const int vid = v.id;
  auto back = [vid, arg](Tape& t, int self) {
    const double g = t.grad_of(self)[0];
    Tensor gv = Tensor::zeros(t.value(vid).shape());
    gv[arg] = g;
    t.accumulate(vid, gv);
  };
  return make_node(*v.tape, Tensor::scalar(vv[arg]), {vid}, back);
}

Var reshape(Var a, std::vector<std::size_t> shape) {
  const Tensor& av = a.value();
  Tensor out = Tensor::zeros(shape);
  if (out.numel() != av.numel()) throw std::invalid_argument("reshape: element count mismatch");
  std::copy(av.data(), av.data() + av.numel(), out.data());
  const int aid = a.id;
  auto back = [aid](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    Tensor ga = Tensor::zeros(t.value(aid).shape());
    std::copy(g.data(), g.data() + g.numel(), ga.data());
    t.accumulate(aid, ga);
  };
  return make_node(*a.tape, std::move(out), {aid}, back);
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
  Tape& tape = *rows[0].tape;
  const std::size_t m = rows[0].value().numel();
  Tensor out = Tensor::zeros({rows.size(), m});
  std::vector<int> parents;
  parents.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Tensor& rv = rows[i].value();
    if (rows[i].tape != &tape) throw std::invalid_argument("stack_rows: mixed tapes");
    if (rv.rank() != 1 || rv.numel() != m) throw std::invalid_argument("stack_rows: ragged rows");
    std::copy(rv.data(), rv.data() + m, out.data() + i * m);
    parents.push_back(rows[i].id);
  }
  auto back = [parents, m](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    for (std::size_t i = 0; i < parents.size(); ++i) {
      Tensor gi = Tensor::zeros({m});
      std::copy(g.data() + i * m, g.data() + (i + 1) * m, gi.data());
      t.accumulate(parents[i], gi);
    }
  };
  return make_node(tape, std::move(out), parents, back);
}

Var stack_scalars(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("stack_scalars: no elements");
  Tape& tape = *xs[0].tape;
  Tensor out = Tensor::zeros({xs.size()});
  std::vector<int> parents;
  parents.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].tape != &tape) throw std::invalid_argument("stack_scalars: mixed tapes");
    out[i] = xs[i].value().item();
    parents.push_back(xs[i].id);
  }
  auto back = [parents](Tape& t, int self) {
    const Tensor& g = t.grad_of(self);
    for (std::size_t i = 0; i < parents.size(); ++i) {
      t.accumulate(parents[i], Tensor::full(t.value(parents[i]).shape(), g[i]));
    }
  };
  return make_node(tape, std::move(out), parents, back);
}

}  // namespace delrank
