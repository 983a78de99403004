#ifndef SLOWLAB_GRADCORE_TAPE_HPP_
#define SLOWLAB_GRADCORE_TAPE_HPP_

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "slowlab/common.hpp"

namespace slowlab::grad {

// Tensors are 2-D (rows x cols); scalars are 1x1 and row vectors 1xN.
using Tensor = Matrix;

class GradError : public Error {
 public:
  using Error::Error;
};

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
};

// Named parameters plus their gradient accumulators and optimizer state.
// Parameters live in a deque so references stay valid as more are added.
class ParamStore {
 public:
  Param& add(const std::string& name, Tensor init);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::deque<Param>& params() { return params_; }
  const std::deque<Param>& params() const { return params_; }

  void zero_grad();
  std::size_t num_scalars() const;

  std::int64_t step = 0;

 private:
  std::deque<Param> params_;
};

class Tape;

// Lightweight handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Tensor& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Single-use reverse-mode tape. Build the forward graph with the free
// functions below, then call backward() once on a 1x1 loss.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(Param& p);

  // Accumulates d(loss)/d(param) into every Param referenced on the tape.
  void backward(Var loss);

  // When enabled, every kinked op (abs, relu, |x|^p) folds the sign pattern
  // of its input into kink_signature(). grad_check uses this to detect a
  // finite-difference stencil that straddles a kink.
  void set_kink_tracking(bool on) { track_kinks_ = on; }
  std::uint64_t kink_signature() const { return kink_signature_; }

  std::size_t size() const { return nodes_.size(); }

  // Low-level node construction used by the op library.
  using Backprop = std::function<void(Tape&, const Tensor& upstream)>;
  Var push(const char* op, Tensor value, std::vector<int> parents,
           Backprop back);
  void accumulate(int id, const Tensor& g);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  const Tensor& value_of(int id) const { return nodes_[id].value; }
  const Tensor& grad_of(int id) const { return nodes_[id].grad; }
  void note_signs(const Tensor& x);

 private:
  struct Node {
    const char* op = "";
    Tensor value;
    Tensor grad;
    Backprop back;
    Param* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  bool track_kinks_ = false;
  bool backward_done_ = false;
  std::uint64_t kink_signature_ = 1469598103934665603ULL;
};

// ---- op library -----------------------------------------------------------
// Binary elementwise ops broadcast a 1x1 operand, a 1xC row or an Rx1 column
// against the other operand.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);

Var exp(Var a);
Var log(Var a);
Var abs(Var a);  // subgradient 0 at exactly 0
Var square(Var a);
Var softplus(Var a);
Var relu(Var a);
// a*x + (1-a)*log(1+e^x)
Var smooth_leaky_relu(Var x, double slope);
// |x|^p for p > 0; subgradient 0 at x = 0
Var abs_pow(Var x, double p);
// E|X| for X ~ N(mu, sigma^2), elementwise; sigma must be positive.
Var folded_normal_mean(Var mu, Var sigma);

Var sum(Var a);       // -> 1x1
Var mean(Var a);      // -> 1x1
Var sum_cols(Var a);  // sum across columns -> Rx1
Var sum_rows(Var a);  // sum down rows -> 1xC

// log|det A| of a square matrix.
Var slogdet(Var a);

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var hcat(Var a, Var b);
// out[:, j] = a[:, index[j]]
Var gather_cols(Var a, const std::vector<int>& index);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator+(Var a, double c) { return add_scalar(a, c); }
inline Var operator-(Var a, double c) { return add_scalar(a, -c); }

}  // namespace slowlab::grad

#endif  // SLOWLAB_GRADCORE_TAPE_HPP_
