#include "slowlab/gradcore/tape.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace slowlab::grad {

// ---- ParamStore ------------------------------------------------------------

Param& ParamStore::add(const std::string& name, Tensor init) {
  if (contains(name)) throw InvalidArgument("duplicate parameter '" + name + "'");
  Param p;
  p.name = name;
  p.grad = Tensor::Zero(init.rows(), init.cols());
  p.m = Tensor::Zero(init.rows(), init.cols());
  p.v = Tensor::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  params_.push_back(std::move(p));
  return params_.back();
}

Param& ParamStore::get(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw InvalidArgument("unknown parameter '" + name + "'");
}

const Param& ParamStore::get(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw InvalidArgument("unknown parameter '" + name + "'");
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return true;
  return false;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

// ---- Var / Tape ------------------------------------------------------------

const Tensor& Var::value() const { return tape_->value_of(id_); }
const Tensor& Var::grad() const { return tape_->grad_of(id_); }

double Var::scalar() const {
  const Tensor& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw GradError("scalar() on non-scalar node");
  return v(0, 0);
}

Var Tape::constant(Tensor value) {
  return push("constant", std::move(value), {}, nullptr);
}

Var Tape::param(Param& p) {
  Node n;
  n.op = "param";
  n.value = p.value;
  n.param = &p;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::push(const char* op, Tensor value, std::vector<int> parents,
               Backprop back) {
  if (!value.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite value produced by op '" << op << "' at node "
        << nodes_.size();
    throw GradError(msg.str());
  }
  Node n;
  n.op = op;
  n.value = std::move(value);
  for (int p : parents) n.needs_grad = n.needs_grad || nodes_[p].needs_grad;
  if (n.needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(int id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::note_signs(const Tensor& x) {
  if (!track_kinks_) return;
  const double* p = x.data();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const std::uint64_t s = p[i] > 0 ? 2 : (p[i] < 0 ? 1 : 0);
    kink_signature_ = (kink_signature_ ^ s) * 1099511628211ULL;
  }
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw GradError("loss belongs to another tape");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1)
    throw GradError("backward() requires a 1x1 loss");
  if (backward_done_) throw GradError("backward() called twice on one tape");
  backward_done_ = true;
  nodes_[loss.id()].grad = Tensor::Ones(1, 1);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.param != nullptr) {
      n.param->grad += n.grad;
    } else if (n.back) {
      // Copy: the closure may accumulate into earlier nodes, never this one.
      const Tensor g = n.grad;
      n.back(*this, g);
    }
  }
}

// ---- broadcasting helpers ----------------------------------------------------

namespace {

Tensor expand(const Tensor& x, Eigen::Index rows, Eigen::Index cols) {
  if (x.rows() == rows && x.cols() == cols) return x;
  if (x.rows() == 1 && x.cols() == 1) return Tensor::Constant(rows, cols, x(0, 0));
  if (x.rows() == 1 && x.cols() == cols) return x.replicate(rows, 1);
  if (x.cols() == 1 && x.rows() == rows) return x.replicate(1, cols);
  throw GradError("incompatible shapes for broadcast");
}

Tensor reduce_to(const Tensor& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Tensor::Constant(1, 1, g.sum());
  if (rows == 1) return g.colwise().sum();
  if (cols == 1) return g.rowwise().sum();
  throw GradError("incompatible shapes for reduction");
}

std::pair<Eigen::Index, Eigen::Index> broadcast_shape(const Tensor& a,
                                                      const Tensor& b) {
  const Eigen::Index r = std::max(a.rows(), b.rows());
  const Eigen::Index c = std::max(a.cols(), b.cols());
  auto ok = [&](const Tensor& x) {
    return (x.rows() == r || x.rows() == 1) && (x.cols() == c || x.cols() == 1);
  };
  if (!ok(a) || !ok(b)) {
    std::ostringstream msg;
    msg << "shape mismatch " << a.rows() << "x" << a.cols() << " vs "
        << b.rows() << "x" << b.cols();
    throw GradError(msg.str());
  }
  return {r, c};
}

Tape& same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape())
    throw GradError("operands live on different tapes");
  return *a.tape();
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

template <typename F, typename D>
Var unary(Var a, const char* op, F forward, D derivative) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Tensor out = a.value().unaryExpr(forward);
  return t.push(op, std::move(out), {ia},
                [ia, derivative](Tape& tp, const Tensor& g) {
                  tp.accumulate(ia, g.cwiseProduct(tp.value_of(ia).unaryExpr(derivative)));
                });
}

}  // namespace

// ---- ops -------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (a.cols() != b.rows()) throw GradError("matmul inner dimension mismatch");
  const int ia = a.id(), ib = b.id();
  Tensor out = a.value() * b.value();
  return t.push("matmul", std::move(out), {ia, ib},
                [ia, ib](Tape& tp, const Tensor& g) {
                  if (tp.needs_grad(ia)) tp.accumulate(ia, g * tp.value_of(ib).transpose());
                  if (tp.needs_grad(ib)) tp.accumulate(ib, tp.value_of(ia).transpose() * g);
                });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  auto [r, c] = broadcast_shape(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  Tensor out = expand(a.value(), r, c) + expand(b.value(), r, c);
  return t.push("add", std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value_of(ia);
    const Tensor& bv = tp.value_of(ib);
    if (tp.needs_grad(ia)) tp.accumulate(ia, reduce_to(g, av.rows(), av.cols()));
    if (tp.needs_grad(ib)) tp.accumulate(ib, reduce_to(g, bv.rows(), bv.cols()));
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  auto [r, c] = broadcast_shape(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  Tensor out = expand(a.value(), r, c) - expand(b.value(), r, c);
  return t.push("sub", std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value_of(ia);
    const Tensor& bv = tp.value_of(ib);
    if (tp.needs_grad(ia)) tp.accumulate(ia, reduce_to(g, av.rows(), av.cols()));
    if (tp.needs_grad(ib)) tp.accumulate(ib, -reduce_to(g, bv.rows(), bv.cols()));
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  auto [r, c] = broadcast_shape(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  Tensor out = expand(a.value(), r, c).cwiseProduct(expand(b.value(), r, c));
  return t.push("mul", std::move(out), {ia, ib},
                [ia, ib, r = r, c = c](Tape& tp, const Tensor& g) {
                  const Tensor& av = tp.value_of(ia);
                  const Tensor& bv = tp.value_of(ib);
                  if (tp.needs_grad(ia))
                    tp.accumulate(ia, reduce_to(g.cwiseProduct(expand(bv, r, c)),
                                                av.rows(), av.cols()));
                  if (tp.needs_grad(ib))
                    tp.accumulate(ib, reduce_to(g.cwiseProduct(expand(av, r, c)),
                                                bv.rows(), bv.cols()));
                });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double c) {
  const int ia = a.id();
  return a.tape()->push("scale", a.value() * c, {ia},
                        [ia, c](Tape& tp, const Tensor& g) { tp.accumulate(ia, g * c); });
}

Var add_scalar(Var a, double c) {
  const int ia = a.id();
  Tensor out = a.value().array() + c;
  return a.tape()->push("add_scalar", std::move(out), {ia},
                        [ia](Tape& tp, const Tensor& g) { tp.accumulate(ia, g); });
}

Var exp(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Tensor out = a.value().array().exp();
  const int out_id = static_cast<int>(t.size());
  return t.push("exp", std::move(out), {ia}, [ia, out_id](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g.cwiseProduct(tp.value_of(out_id)));
  });
}

Var log(Var a) {
  return unary(a, "log", [](double x) { return std::log(x); },
               [](double x) { return 1.0 / x; });
}

Var abs(Var a) {
  a.tape()->note_signs(a.value());
  return unary(a, "abs", [](double x) { return std::abs(x); },
               [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var square(Var a) {
  return unary(a, "square", [](double x) { return x * x; },
               [](double x) { return 2.0 * x; });
}

Var softplus(Var a) {
  return unary(
      a, "softplus",
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var relu(Var a) {
  a.tape()->note_signs(a.value());
  return unary(a, "relu", [](double x) { return x > 0 ? x : 0.0; },
               [](double x) { return x > 0 ? 1.0 : 0.0; });
}

Var smooth_leaky_relu(Var x, double slope) {
  return unary(
      x, "smooth_leaky_relu",
      [slope](double v) {
        const double sp = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
        return slope * v + (1.0 - slope) * sp;
      },
      [slope](double v) { return slope + (1.0 - slope) / (1.0 + std::exp(-v)); });
}

Var abs_pow(Var x, double p) {
  if (!(p > 0)) throw GradError("abs_pow exponent must be positive");
  x.tape()->note_signs(x.value());
  return unary(
      x, "abs_pow", [p](double v) { return std::pow(std::abs(v), p); },
      [p](double v) {
        if (v == 0.0) return 0.0;
        const double s = v > 0 ? 1.0 : -1.0;
        return s * p * std::pow(std::abs(v), p - 1.0);
      });
}

Var folded_normal_mean(Var mu, Var sigma) {
  Tape& t = same_tape(mu, sigma);
  if (mu.rows() != sigma.rows() || mu.cols() != sigma.cols())
    throw GradError("folded_normal_mean shape mismatch");
  if ((sigma.value().array() <= 0).any())
    throw GradError("folded_normal_mean requires sigma > 0");
  const int im = mu.id(), is = sigma.id();
  const Tensor& m = mu.value();
  const Tensor& s = sigma.value();
  Tensor out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double u = m.data()[i] / s.data()[i];
    out.data()[i] = 2.0 * s.data()[i] * normal_pdf(u) + m.data()[i] * (2.0 * normal_cdf(u) - 1.0);
  }
  return t.push("folded_normal_mean", std::move(out), {im, is},
                [im, is](Tape& tp, const Tensor& g) {
                  const Tensor& mv = tp.value_of(im);
                  const Tensor& sv = tp.value_of(is);
                  Tensor gm(mv.rows(), mv.cols()), gs(mv.rows(), mv.cols());
                  for (Eigen::Index i = 0; i < mv.size(); ++i) {
                    const double u = mv.data()[i] / sv.data()[i];
                    gm.data()[i] = g.data()[i] * (2.0 * normal_cdf(u) - 1.0);
                    gs.data()[i] = g.data()[i] * 2.0 * normal_pdf(u);
                  }
                  tp.accumulate(im, gm);
                  tp.accumulate(is, gs);
                });
}

Var sum(Var a) {
  const int ia = a.id();
  const auto r = a.rows(), c = a.cols();
  return a.tape()->push("sum", Tensor::Constant(1, 1, a.value().sum()), {ia},
                        [ia, r, c](Tape& tp, const Tensor& g) {
                          tp.accumulate(ia, Tensor::Constant(r, c, g(0, 0)));
                        });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var sum_cols(Var a) {
  const int ia = a.id();
  const auto c = a.cols();
  Tensor out = a.value().rowwise().sum();
  return a.tape()->push("sum_cols", std::move(out), {ia}, [ia, c](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g.replicate(1, c));
  });
}

Var sum_rows(Var a) {
  const int ia = a.id();
  const auto r = a.rows();
  Tensor out = a.value().colwise().sum();
  return a.tape()->push("sum_rows", std::move(out), {ia}, [ia, r](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g.replicate(r, 1));
  });
}

Var slogdet(Var a) {
  if (a.rows() != a.cols()) throw GradError("slogdet requires a square matrix");
  const int ia = a.id();
  Eigen::PartialPivLU<Tensor> lu(a.value());
  const Tensor& u = lu.matrixLU();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i) logdet += std::log(std::abs(u(i, i)));
  return a.tape()->push("slogdet", Tensor::Constant(1, 1, logdet), {ia},
                        [ia](Tape& tp, const Tensor& g) {
                          const Tensor& w = tp.value_of(ia);
                          tp.accumulate(ia, g(0, 0) * w.inverse().transpose());
                        });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw GradError("slice_cols out of range");
  const int ia = a.id();
  const auto r = a.rows(), c = a.cols();
  Tensor out = a.value().middleCols(start, count);
  return a.tape()->push("slice_cols", std::move(out), {ia},
                        [ia, r, c, start, count](Tape& tp, const Tensor& g) {
                          Tensor full = Tensor::Zero(r, c);
                          full.middleCols(start, count) = g;
                          tp.accumulate(ia, full);
                        });
}

Var hcat(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (a.rows() != b.rows()) throw GradError("hcat row mismatch");
  const int ia = a.id(), ib = b.id();
  const auto ca = a.cols(), cb = b.cols();
  Tensor out(a.rows(), ca + cb);
  out << a.value(), b.value();
  return t.push("hcat", std::move(out), {ia, ib}, [ia, ib, ca, cb](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g.leftCols(ca));
    tp.accumulate(ib, g.rightCols(cb));
  });
}

Var gather_cols(Var a, const std::vector<int>& index) {
  const int ia = a.id();
  const auto r = a.rows(), c = a.cols();
  Tensor out(r, static_cast<Eigen::Index>(index.size()));
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (index[j] < 0 || index[j] >= c) throw GradError("gather_cols index out of range");
    out.col(static_cast<Eigen::Index>(j)) = a.value().col(index[j]);
  }
  return a.tape()->push("gather_cols", std::move(out), {ia},
                        [ia, r, c, index](Tape& tp, const Tensor& g) {
                          Tensor full = Tensor::Zero(r, c);
                          for (std::size_t j = 0; j < index.size(); ++j)
                            full.col(index[j]) += g.col(static_cast<Eigen::Index>(j));
                          tp.accumulate(ia, full);
                        });
}

}  // namespace slowlab::grad
