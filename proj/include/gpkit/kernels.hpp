#pragma once

// Covariance functions as expression trees. Every trainable hyperparameter
// is stored and differentiated on the log scale; parameters flatten
// depth-first, left to right.

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "gpkit/core.hpp"
#include "gpkit/priors.hpp"

namespace gpkit {

namespace detail {

// Scratch storage that stays on the stack for the common case.
class Scratch {
 public:
  explicit Scratch(std::size_t n) : n_(n) {
    if (n > inline_.size()) heap_.resize(n);
  }
  double* data() { return n_ > inline_.size() ? heap_.data() : inline_.data(); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  std::array<double, 64> inline_{};
  std::vector<double> heap_;
};

inline double sqdist(Point x, Point y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

inline double dot(Point x, Point y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline std::string render_vec(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += format_double(v[i]);
  }
  return s + "]";
}

}  // namespace detail

/// Node of a kernel expression tree.
class KernelNode {
 public:
  virtual ~KernelNode() = default;

  virtual std::unique_ptr<KernelNode> clone() const = 0;

  /// Type label used in summaries, e.g. "SEIso" or "SumKernel".
  virtual std::string type_name() const = 0;

  virtual std::size_t num_params() const = 0;
  virtual void get_params(double* out) const = 0;
  virtual void set_params(const double* in) = 0;
  virtual std::vector<std::string> param_names() const = 0;

  virtual double eval(Point x, Point y) const = 0;

  /// Writes dk/dtheta into out[0..num_params) and returns k(x, y).
  virtual double eval_grad(Point x, Point y, double* out) const = 0;

  /// Throws ConfigError if the node cannot act on inputs of dimension d.
  virtual void check_dim(std::size_t d) const { (void)d; }

  /// Expression syntax accepted by the kernel parser.
  virtual std::string render() const = 0;

  /// Precedence for rendering: 0 = sum, 1 = product, 2 = atom.
  virtual int precedence() const { return 2; }
};

// ---------------------------------------------------------------------------
// Leaf nodes with a flat parameter vector.

class ParamNode : public KernelNode {
 public:
  std::size_t num_params() const override { return theta_.size(); }
  void get_params(double* out) const override { std::copy(theta_.begin(), theta_.end(), out); }
  void set_params(const double* in) override { std::copy(in, in + theta_.size(), theta_.begin()); }

 protected:
  explicit ParamNode(std::vector<double> theta) : theta_(std::move(theta)) {}
  std::vector<double> theta_;
};

/// k = sigma^2
class ConstKernel final : public ParamNode {
 public:
  explicit ConstKernel(double log_sigma) : ParamNode({log_sigma}) {}
  std::unique_ptr<KernelNode> clone() const override { return std::make_unique<ConstKernel>(*this); }
  std::string type_name() const override { return "Const"; }
  std::vector<std::string> param_names() const override { return {"Const log scale"}; }
  double eval(Point, Point) const override { return std::exp(2.0 * theta_[0]); }
  double eval_grad(Point, Point, double* out) const override {
    const double k = std::exp(2.0 * theta_[0]);
    out[0] = 2.0 * k;
    return k;
  }
  std::string render() const override { return "Const(" + format_double(theta_[0]) + ")"; }
};

/// k = sigma^2 if x == x' (bitwise coordinate equality), else 0.
class NoiseKernel final : public ParamNode {
 public:
  explicit NoiseKernel(double log_sigma) : ParamNode({log_sigma}) {}
  std::unique_ptr<KernelNode> clone() const override { return std::make_unique<NoiseKernel>(*this); }
  std::string type_name() const override { return "Noise"; }
  std::vector<std::string> param_names() const override { return {"Noise log scale"}; }
  double eval(Point x, Point y) const override {
    return std::equal(x.begin(), x.end(), y.begin()) ? std::exp(2.0 * theta_[0]) : 0.0;
  }
  double eval_grad(Point x, Point y, double* out) const override {
    const double k = eval(x, y);
    out[0] = 2.0 * k;
    return k;
  }
  std::string render() const override { return "Noise(" + format_double(theta_[0]) + ")"; }
};

/// k = x'x* / l^2
class LinIsoKernel final : public ParamNode {
 public:
  explicit LinIsoKernel(double log_ell) : ParamNode({log_ell}) {}
  std::unique_ptr<KernelNode> clone() const override { return std::make_unique<LinIsoKernel>(*this); }
  std::string type_name() const override { return "LinIso"; }
  std::vector<std::string> param_names() const override { return {"Lin log length"}; }
  double eval(Point x, Point y) const override {
    return detail::dot(x, y) * std::exp(-2.0 * theta_[0]);
  }
  double eval_grad(Point x, Point y, double* out) const override {
    const double k = eval(x, y);
    out[0] = -2.0 * k;
    return k;
  }
  std::string render() const override { return "Lin(" + format_double(theta_[0]) + ")"; }
};

/// k = x' L^-2 x*. No amplitude; compose with Const for one.
class LinArdKernel final : public ParamNode {
 public:
  explicit LinArdKernel(std::vector<double> log_ell) : ParamNode(std::move(log_ell)) {}
  std::unique_ptr<KernelNode> clone() const override { return std::make_unique<LinArdKernel>(*this); }
  std::string type_name() const override { return "LinArd"; }
  std::vector<std::string> param_names() const override {
    std::vector<std::string> n;
    for (std::size_t i = 0; i < theta_.size(); ++i) n.push_back("Lin log length " + std::to_string(i + 1));
    return n;
  }
  void check_dim(std::size_t d) const override {
    if (d != theta_.size())
      throw ConfigError("LinArd: " + std::to_string(theta_.size()) +
                        " length scales for input dimension " + std::to_string(d));
  }
  double eval(Point x, Point y) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i] * std::exp(-2.0 * theta_[i]);
    return s;
  }
  double eval_grad(Point x, Point y, double* out) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = x[i] * y[i] * std::exp(-2.0 * theta_[i]);
      out[i] = -2.0 * t;
      s += t;
    }
    return s;
  }
  std::string render() const override { return "Lin(" + detail::render_vec(theta_) + ")"; }
};

/// k = sigma^2 (x'x* + c)^degree, params (log c, log sigma).
class PolyKernel final : public ParamNode {
 public:
  PolyKernel(double log_c, double log_sigma, int degree)
      : ParamNode({log_c, log_sigma}), degree_(degree) {
    if (degree < 1) throw ConfigError("Poly: degree must be >= 1");
  }
  std::unique_ptr<KernelNode> clone() const override { return std::make_unique<PolyKernel>(*this); }
  std::string type_name() const override { return "Poly"; }
  std::vector<std::string> param_names() const override { return {"Poly log c", "Poly log scale"}; }
  int degree() const { return degree_; }
  double eval(Point x, Point y) const override {
    return std::exp(2.0 * theta_[1]) * std::pow(detail::dot(x, y) + std::exp(theta_[0]), degree_);
  }
  double eval_grad(Point x, Point y, double* out) const override {
    const double c = std::exp(theta_[0]);
    const double s2 = std::exp(2.0 * theta_[1]);
    const double base = detail::dot(x, y) + c;
    const double k = s2 * std::pow(base, degree_);
    out[0] = s2 * degree_ * std::pow(base, degree_ - 1) * c;
    out[1] = 2.0 * k;
    return k;
  }
  std::string render() const override {
    return "Poly(" + format_double(theta_[0]) + "," + format_double(theta_[1]) + "," +
           std::to_string(degree_) + ")";
  }

 private:
  int degree_;
};

/// k = sigma^2 exp(-2 sin^2(pi |x-x*| / p) / l^2), params (log l, log sigma, log p).
class PeriodicKernel final : public ParamNode {
 public:
  PeriodicKernel(double log_ell, double log_sigma, double log_p)
      : ParamNode({log_ell, log_sigma, log_p}) {}
  std::unique_ptr<KernelNode> clone() const override { return std::make_unique<PeriodicKernel>(*this); }
  std::string type_name() const override { return "Periodic"; }
  std::vector<std::string> param_names() const override {
    return {"Periodic log length", "Periodic log scale", "Periodic log period"};
  }
  double eval(Point x, Point y) const override {
    const double u = std::numbers::pi * std::sqrt(detail::sqdist(x, y)) / std::exp(theta_[2]);
    const double s = std::sin(u);
    return std::exp(2.0 * theta_[1] - 2.0 * s * s / std::exp(2.0 * theta_[0]));
  }
  double eval_grad(Point x, Point y, double* out) const override {
    const double inv_l2 = std::exp(-2.0 * theta_[0]);
    const double u = std::numbers::pi * std::sqrt(detail::sqdist(x, y)) / std::exp(theta_[2]);
    const double s = std::sin(u);
    const double k = std::exp(2.0 * theta_[1] - 2.0 * s * s * inv_l2);
    out[0] = k * 4.0 * s * s * inv_l2;
    out[1] = 2.0 * k;
    out[2] = k * 2.0 * u * std::sin(2.0 * u) * inv_l2;
    return k;
  }
  std::string render() const override {
    return "Periodic(" + format_double(theta_[0]) + "," + format_double(theta_[1]) + "," +
           format_double(theta_[2]) + ")";
  }
};

// ---------------------------------------------------------------------------
// Radial kernels: k = sigma^2 * g(r^2) with r the length-scaled distance.
// Each profile supplies g and h = -(dg/dr)/r, which gives
//   dk/dlog l   = sigma^2 h r^2          (iso)
//   dk/dlog l_i = sigma^2 h (d_i/l_i)^2  (ard)

enum class MaternOrder { Half, ThreeHalves, FiveHalves };

inline std::string matern_nu(MaternOrder o) {
  switch (o) {
    case MaternOrder::Half: return "1/2";
    case MaternOrder::ThreeHalves: return "3/2";
    case MaternOrder::FiveHalves: return "5/2";
  }
  return "?";
}

struct SEProfile {
  static constexpr std::size_t kExtra = 0;
  static std::string family() { return "SE"; }
  std::string call() const { return "SE"; }
  std::string label() const { return "SE"; }
  double g(double r2, const double*) const { return std::exp(-0.5 * r2); }
  double h(double r2, const double*) const { return std::exp(-0.5 * r2); }
  void dextra(double, const double*, double*) const {}
};

struct MaternProfile {
  static constexpr std::size_t kExtra = 0;
  MaternOrder order;
  std::string call() const { return "Matern(" + matern_nu(order) + ","; }
  std::string label() const {
    switch (order) {
      case MaternOrder::Half: return "Mat12";
      case MaternOrder::ThreeHalves: return "Mat32";
      case MaternOrder::FiveHalves: return "Mat52";
    }
    return "Mat";
  }
  double g(double r2, const double*) const {
    const double r = std::sqrt(r2);
    switch (order) {
      case MaternOrder::Half: return std::exp(-r);
      case MaternOrder::ThreeHalves: {
        const double a = std::sqrt(3.0) * r;
        return (1.0 + a) * std::exp(-a);
      }
      case MaternOrder::FiveHalves: {
        const double a = std::sqrt(5.0) * r;
        return (1.0 + a + 5.0 * r2 / 3.0) * std::exp(-a);
      }
    }
    return 0.0;
  }
  // The 1/2 profile is not differentiable at r = 0; the gradient there is
  // taken as 0 (the symmetric-difference subgradient).
  double h(double r2, const double*) const {
    const double r = std::sqrt(r2);
    switch (order) {
      case MaternOrder::Half: return r > 0.0 ? std::exp(-r) / r : 0.0;
      case MaternOrder::ThreeHalves: return 3.0 * std::exp(-std::sqrt(3.0) * r);
      case MaternOrder::FiveHalves: {
        const double a = std::sqrt(5.0) * r;
        return (5.0 / 3.0) * (1.0 + a) * std::exp(-a);
      }
    }
    return 0.0;
  }
  void dextra(double, const double*, double*) const {}
};

/// g = (1 + r^2 / (2 alpha))^-alpha, extra parameter log alpha.
struct RQProfile {
  static constexpr std::size_t kExtra = 1;
  std::string call() const { return "RQ"; }
  std::string label() const { return "RQ"; }
  double g(double r2, const double* extra) const {
    const double a = std::exp(extra[0]);
    return std::pow(1.0 + 0.5 * r2 / a, -a);
  }
  double h(double r2, const double* extra) const {
    const double a = std::exp(extra[0]);
    return std::pow(1.0 + 0.5 * r2 / a, -a - 1.0);
  }
  void dextra(double r2, const double* extra, double* out) const {
    const double a = std::exp(extra[0]);
    const double s = 0.5 * r2 / a;
    out[0] = std::pow(1.0 + s, -a) * a * (s / (1.0 + s) - std::log1p(s));
  }
};

/// Params: (log l, log sigma, extras...).
template <class Profile>
class RadialIso final : public ParamNode {
 public:
  RadialIso(Profile p, double log_ell, double log_sigma, std::vector<double> extra = {})
      : ParamNode(pack(log_ell, log_sigma, extra)), profile_(p) {
    if (extra.size() != Profile::kExtra) throw ConfigError(profile_.label() + ": wrong parameter count");
  }
  std::unique_ptr<KernelNode> clone() const override { return std::make_unique<RadialIso>(*this); }
  std::string type_name() const override { return profile_.label() + "Iso"; }
  std::vector<std::string> param_names() const override {
    std::vector<std::string> n{profile_.label() + " log length", profile_.label() + " log scale"};
    if (Profile::kExtra) n.push_back(profile_.label() + " log alpha");
    return n;
  }
  const Profile& profile() const { return profile_; }
  double eval(Point x, Point y) const override {
    const double r2 = detail::sqdist(x, y) * std::exp(-2.0 * theta_[0]);
    return std::exp(2.0 * theta_[1]) * profile_.g(r2, theta_.data() + 2);
  }
  double eval_grad(Point x, Point y, double* out) const override {
    const double r2 = detail::sqdist(x, y) * std::exp(-2.0 * theta_[0]);
    const double s2 = std::exp(2.0 * theta_[1]);
    const double k = s2 * profile_.g(r2, theta_.data() + 2);
    out[0] = s2 * profile_.h(r2, theta_.data() + 2) * r2;
    out[1] = 2.0 * k;
    if constexpr (Profile::kExtra > 0) {
      profile_.dextra(r2, theta_.data() + 2, out + 2);
      for (std::size_t j = 0; j < Profile::kExtra; ++j) out[2 + j] *= s2;
    }
    return k;
  }
  std::string render() const override {
    std::string s = profile_.call();
    if (s.back() != ',') s += "(";
    s += format_double(theta_[0]);
    for (std::size_t i = 1; i < theta_.size(); ++i) s += "," + format_double(theta_[i]);
    return s + ")";
  }

 private:
  static std::vector<double> pack(double l, double s, const std::vector<double>& e) {
    std::vector<double> t{l, s};
    t.insert(t.end(), e.begin(), e.end());
    return t;
  }
  Profile profile_;
};

/// Params: (log l_1..log l_d, log sigma, extras...).
template <class Profile>
class RadialArd final : public ParamNode {
 public:
  RadialArd(Profile p, std::vector<double> log_ell, double log_sigma, std::vector<double> extra = {})
      : ParamNode(pack(log_ell, log_sigma, extra)), profile_(p), dim_(log_ell.size()) {
    if (dim_ == 0) throw ConfigError(profile_.label() + "Ard: needs at least one length scale");
    if (extra.size() != Profile::kExtra) throw ConfigError(profile_.label() + ": wrong parameter count");
  }
  std::unique_ptr<KernelNode> clone() const override { return std::make_unique<RadialArd>(*this); }
  std::string type_name() const override { return profile_.label() + "Ard"; }
  std::vector<std::string> param_names() const override {
    std::vector<std::string> n;
    for (std::size_t i = 0; i < dim_; ++i) n.push_back(profile_.label() + " log length " + std::to_string(i + 1));
    n.push_back(profile_.label() + " log scale");
    if (Profile::kExtra) n.push_back(profile_.label() + " log alpha");
    return n;
  }
  void check_dim(std::size_t d) const override {
    if (d != dim_)
      throw ConfigError(type_name() + ": " + std::to_string(dim_) + " length scales for input dimension " +
                        std::to_string(d));
  }
  double eval(Point x, Point y) const override {
    double r2 = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double t = (x[i] - y[i]) * std::exp(-theta_[i]);
      r2 += t * t;
    }
    return std::exp(2.0 * theta_[dim_]) * profile_.g(r2, theta_.data() + dim_ + 1);
  }
  double eval_grad(Point x, Point y, double* out) const override {
    double r2 = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double t = (x[i] - y[i]) * std::exp(-theta_[i]);
      out[i] = t * t;
      r2 += out[i];
    }
    const double* extra = theta_.data() + dim_ + 1;
    const double s2 = std::exp(2.0 * theta_[dim_]);
    const double k = s2 * profile_.g(r2, extra);
    const double sh = s2 * profile_.h(r2, extra);
    for (std::size_t i = 0; i < dim_; ++i) out[i] *= sh;
    out[dim_] = 2.0 * k;
    if constexpr (Profile::kExtra > 0) {
      profile_.dextra(r2, extra, out + dim_ + 1);
      for (std::size_t j = 0; j < Profile::kExtra; ++j) out[dim_ + 1 + j] *= s2;
    }
    return k;
  }
  std::string render() const override {
    std::string s = profile_.call();
    if (s.back() != ',') s += "(";
    s += detail::render_vec(std::vector<double>(theta_.begin(), theta_.begin() + static_cast<long>(dim_)));
    for (std::size_t i = dim_; i < theta_.size(); ++i) s += "," + format_double(theta_[i]);
    return s + ")";
  }

 private:
  static std::vector<double> pack(std::vector<double> l, double s, const std::vector<double>& e) {
    l.push_back(s);
    l.insert(l.end(), e.begin(), e.end());
    return l;
  }
  Profile profile_;
  std::size_t dim_;
};

using SEIso = RadialIso<SEProfile>;
using SEArd = RadialArd<SEProfile>;
using MaternIso = RadialIso<MaternProfile>;
using MaternArd = RadialArd<MaternProfile>;
using RQIso = RadialIso<RQProfile>;
using RQArd = RadialArd<RQProfile>;

// ---------------------------------------------------------------------------
// Structural nodes.

/// Exposes only the parameters whose mask entry is true.
class FixedKernel final : public KernelNode {
 public:
  FixedKernel(std::unique_ptr<KernelNode> child, std::vector<bool> free_mask)
      : child_(std::move(child)), free_(std::move(free_mask)) {
    if (free_.size() != child_->num_params())
      throw ConfigError("fix: mask has " + std::to_string(free_.size()) + " entries, kernel has " +
                        std::to_string(child_->num_params()) + " parameters");
    nfree_ = static_cast<std::size_t>(std::count(free_.begin(), free_.end(), true));
  }
  FixedKernel(const FixedKernel& o) : child_(o.child_->clone()), free_(o.free_), nfree_(o.nfree_) {}
  std::unique_ptr<KernelNode> clone() const override { return std::make_unique<FixedKernel>(*this); }
  std::string type_name() const override { return "FixedKernel"; }
  const KernelNode& child() const { return *child_; }
  const std::vector<bool>& free_mask() const { return free_; }
  std::size_t num_params() const override { return nfree_; }
  void get_params(double* out) const override {
    detail::Scratch all(child_->num_params());
    child_->get_params(all.data());
    for (std::size_t i = 0, j = 0; i < free_.size(); ++i)
      if (free_[i]) out[j++] = all.data()[i];
  }
  void set_params(const double* in) override {
    detail::Scratch all(child_->num_params());
    child_->get_params(all.data());
    for (std::size_t i = 0, j = 0; i < free_.size(); ++i)
      if (free_[i]) all.data()[i] = in[j++];
    child_->set_params(all.data());
  }
  std::vector<std::string> param_names() const override {
    auto names = child_->param_names();
    std::vector<std::string> out;
    for (std::size_t i = 0; i < free_.size(); ++i)
      if (free_[i]) out.push_back(names[i]);
    return out;
  }
  void check_dim(std::size_t d) const override { child_->check_dim(d); }
  double eval(Point x, Point y) const override { return child_->eval(x, y); }
  double eval_grad(Point x, Point y, double* out) const override {
    detail::Scratch all(child_->num_params());
    const double k = child_->eval_grad(x, y, all.data());
    for (std::size_t i = 0, j = 0; i < free_.size(); ++i)
      if (free_[i]) out[j++] = all.data()[i];
    return k;
  }
  std::string render() const override {
    std::string s = "fix(" + child_->render() + ",[";
    bool first = true;
    for (std::size_t i = 0; i < free_.size(); ++i) {
      if (free_[i]) continue;
      if (!first) s += ",";
      s += std::to_string(i + 1);
      first = false;
    }
    return s + "])";
  }

 private:
  std::unique_ptr<KernelNode> child_;
  std::vector<bool> free_;
  std::size_t nfree_ = 0;
};

/// Applies the child to the selected (0-based) input dimensions only.
class MaskedKernel final : public KernelNode {
 public:
  MaskedKernel(std::unique_ptr<KernelNode> child, std::vector<std::size_t> dims)
      : child_(std::move(child)), dims_(std::move(dims)) {
    if (dims_.empty()) throw ConfigError("Masked: empty dimension list");
    child_->check_dim(dims_.size());
  }
  MaskedKernel(const MaskedKernel& o) : child_(o.child_->clone()), dims_(o.dims_) {}
  std::unique_ptr<KernelNode> clone() const override { return std::make_unique<MaskedKernel>(*this); }
  std::string type_name() const override { return "Masked"; }
  const KernelNode& child() const { return *child_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t num_params() const override { return child_->num_params(); }
  void get_params(double* out) const override { child_->get_params(out); }
  void set_params(const double* in) override { child_->set_params(in); }
  std::vector<std::string> param_names() const override { return child_->param_names(); }
  void check_dim(std::size_t d) const override {
    for (auto i : dims_)
      if (i >= d)
        throw ConfigError("Masked: dimension " + std::to_string(i + 1) + " out of range for input dimension " +
                          std::to_string(d));
  }
  double eval(Point x, Point y) const override {
    detail::Scratch bx(dims_.size()), by(dims_.size());
    gather(x, y, bx.data(), by.data());
    return child_->eval(Point(bx.data(), dims_.size()), Point(by.data(), dims_.size()));
  }
  double eval_grad(Point x, Point y, double* out) const override {
    detail::Scratch bx(dims_.size()), by(dims_.size());
    gather(x, y, bx.data(), by.data());
    return child_->eval_grad(Point(bx.data(), dims_.size()), Point(by.data(), dims_.size()), out);
  }
  std::string render() const override {
    std::string s = "Masked(" + child_->render() + ",[";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(dims_[i] + 1);
    }
    return s + "])";
  }

 private:
  void gather(Point x, Point y, double* bx, double* by) const {
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      bx[i] = x[dims_[i]];
      by[i] = y[dims_[i]];
    }
  }
  std::unique_ptr<KernelNode> child_;
  std::vector<std::size_t> dims_;
};

class CompositeKernel : public KernelNode {
 public:
  const std::vector<std::unique_ptr<KernelNode>>& children() const { return children_; }
  std::size_t num_params() const override { return nparams_; }
  void get_params(double* out) const override {
    for (const auto& c : children_) {
      c->get_params(out);
      out += c->num_params();
    }
  }
  void set_params(const double* in) override {
    for (auto& c : children_) {
      c->set_params(in);
      in += c->num_params();
    }
  }
  std::vector<std::string> param_names() const override {
    std::vector<std::string> n;
    for (const auto& c : children_) {
      auto cn = c->param_names();
      n.insert(n.end(), cn.begin(), cn.end());
    }
    return n;
  }
  void check_dim(std::size_t d) const override {
    for (const auto& c : children_) c->check_dim(d);
  }
  std::string render() const override {
    std::string s;
    const char* op = precedence() == 0 ? " + " : " * ";
    for (std::size_t i = 0; i < children_.size(); ++i) {
      if (i) s += op;
      const bool paren = children_[i]->precedence() <= precedence();
      s += paren ? "(" + children_[i]->render() + ")" : children_[i]->render();
    }
    return s;
  }

 protected:
  explicit CompositeKernel(std::vector<std::unique_ptr<KernelNode>> children) : children_(std::move(children)) {
    if (children_.size() < 2) throw ConfigError("composite kernel needs at least two children");
    for (const auto& c : children_) nparams_ += c->num_params();
  }
  CompositeKernel(const CompositeKernel& o) : nparams_(o.nparams_) {
    for (const auto& c : o.children_) children_.push_back(c->clone());
  }
  std::vector<std::unique_ptr<KernelNode>> children_;
  std::size_t nparams_ = 0;
};

class SumKernel final : public CompositeKernel {
 public:
  explicit SumKernel(std::vector<std::unique_ptr<KernelNode>> c) : CompositeKernel(std::move(c)) {}
  std::unique_ptr<KernelNode> clone() const override { return std::make_unique<SumKernel>(*this); }
  std::string type_name() const override { return "SumKernel"; }
  int precedence() const override { return 0; }
  double eval(Point x, Point y) const override {
    double s = 0.0;
    for (const auto& c : children_) s += c->eval(x, y);
    return s;
  }
  double eval_grad(Point x, Point y, double* out) const override {
    double s = 0.0;
    for (const auto& c : children_) {
      s += c->eval_grad(x, y, out);
      out += c->num_params();
    }
    return s;
  }
};

class ProductKernel final : public CompositeKernel {
 public:
  explicit ProductKernel(std::vector<std::unique_ptr<KernelNode>> c) : CompositeKernel(std::move(c)) {}
  std::unique_ptr<KernelNode> clone() const override { return std::make_unique<ProductKernel>(*this); }
  std::string type_name() const override { return "ProductKernel"; }
  int precedence() const override { return 1; }
  double eval(Point x, Point y) const override {
    double p = 1.0;
    for (const auto& c : children_) p *= c->eval(x, y);
    return p;
  }
  double eval_grad(Point x, Point y, double* out) const override {
    const std::size_t m = children_.size();
    detail::Scratch vals(m);
    double* start = out;
    for (std::size_t i = 0; i < m; ++i) {
      vals.data()[i] = children_[i]->eval_grad(x, y, start);
      start += children_[i]->num_params();
    }
    // Product of the other factors via prefix/suffix sweeps; safe with zeros.
    double prefix = 1.0;
    detail::Scratch suffix(m + 1);
    suffix.data()[m] = 1.0;
    for (std::size_t i = m; i-- > 0;) suffix.data()[i] = suffix.data()[i + 1] * vals.data()[i];
    for (std::size_t i = 0; i < m; ++i) {
      const double others = prefix * suffix.data()[i + 1];
      for (std::size_t j = 0; j < children_[i]->num_params(); ++j) out[j] *= others;
      out += children_[i]->num_params();
      prefix *= vals.data()[i];
    }
    return prefix;
  }
};

// ---------------------------------------------------------------------------

/// Value-semantic handle on a kernel expression tree, with optional priors
/// over its flattened parameters.
class Kernel {
 public:
  Kernel() = default;
  explicit Kernel(std::unique_ptr<KernelNode> root) : root_(std::move(root)) {}
  Kernel(const Kernel& o) : root_(o.root_ ? o.root_->clone() : nullptr), priors_(o.priors_) {}
  Kernel(Kernel&&) noexcept = default;
  Kernel& operator=(const Kernel& o) {
    if (this != &o) {
      root_ = o.root_ ? o.root_->clone() : nullptr;
      priors_ = o.priors_;
    }
    return *this;
  }
  Kernel& operator=(Kernel&&) noexcept = default;

  explicit operator bool() const { return root_ != nullptr; }
  const KernelNode& node() const { return *root_; }
  std::unique_ptr<KernelNode> clone_node() const { return root_->clone(); }

  std::size_t num_params() const { return root_->num_params(); }

  VectorXd params() const {
    VectorXd p(static_cast<Eigen::Index>(num_params()));
    root_->get_params(p.data());
    return p;
  }

  void set_params(const VectorXd& p) {
    if (static_cast<std::size_t>(p.size()) != num_params())
      throw ConfigError("kernel set_params: expected " + std::to_string(num_params()) + " values, got " +
                        std::to_string(p.size()));
    root_->set_params(p.data());
  }

  std::vector<std::string> param_names() const { return root_->param_names(); }
  std::string type_name() const { return root_->type_name(); }
  std::string render() const { return root_->render(); }
  void check_dim(std::size_t d) const { root_->check_dim(d); }

  /// Checked evaluation.
  double operator()(Point x, Point y) const {
    check_pair(x, y);
    return root_->eval(x, y);
  }

  VectorXd grad(Point x, Point y) const {
    check_pair(x, y);
    VectorXd g(static_cast<Eigen::Index>(num_params()));
    root_->eval_grad(x, y, g.data());
    return g;
  }

  void set_priors(PriorSet p) {
    p.check_size(num_params(), "kernel priors");
    priors_ = std::move(p);
  }
  const PriorSet& priors() const { return priors_; }

 private:
  void check_pair(Point x, Point y) const {
    if (x.size() != y.size())
      throw InputError("kernel: input dimensions differ (" + std::to_string(x.size()) + " vs " +
                       std::to_string(y.size()) + ")");
    root_->check_dim(x.size());
  }

  std::unique_ptr<KernelNode> root_;
  PriorSet priors_;
};

namespace detail {
template <class Node>
std::vector<std::unique_ptr<KernelNode>> flatten_into(const Kernel& a, const Kernel& b) {
  std::vector<std::unique_ptr<KernelNode>> c;
  for (const Kernel* k : {&a, &b}) {
    if (const auto* same = dynamic_cast<const Node*>(&k->node())) {
      for (const auto& ch : same->children()) c.push_back(ch->clone());
    } else {
      c.push_back(k->clone_node());
    }
  }
  return c;
}
}  // namespace detail

/// Sums and products flatten like-typed operands, so a + b + c has three children.
inline Kernel operator+(const Kernel& a, const Kernel& b) {
  return Kernel(std::make_unique<SumKernel>(detail::flatten_into<SumKernel>(a, b)));
}

inline Kernel operator*(const Kernel& a, const Kernel& b) {
  return Kernel(std::make_unique<ProductKernel>(detail::flatten_into<ProductKernel>(a, b)));
}

namespace kern {

inline Kernel se_iso(double log_ell, double log_sigma) {
  return Kernel(std::make_unique<SEIso>(SEProfile{}, log_ell, log_sigma));
}
inline Kernel se_ard(std::vector<double> log_ell, double log_sigma) {
  return Kernel(std::make_unique<SEArd>(SEProfile{}, std::move(log_ell), log_sigma));
}
inline Kernel matern_iso(MaternOrder o, double log_ell, double log_sigma) {
  return Kernel(std::make_unique<MaternIso>(MaternProfile{o}, log_ell, log_sigma));
}
inline Kernel matern_ard(MaternOrder o, std::vector<double> log_ell, double log_sigma) {
  return Kernel(std::make_unique<MaternArd>(MaternProfile{o}, std::move(log_ell), log_sigma));
}
inline Kernel rq_iso(double log_ell, double log_sigma, double log_alpha) {
  return Kernel(std::make_unique<RQIso>(RQProfile{}, log_ell, log_sigma, std::vector<double>{log_alpha}));
}
inline Kernel rq_ard(std::vector<double> log_ell, double log_sigma, double log_alpha) {
  return Kernel(std::make_unique<RQArd>(RQProfile{}, std::move(log_ell), log_sigma, std::vector<double>{log_alpha}));
}
inline Kernel periodic(double log_ell, double log_sigma, double log_p) {
  return Kernel(std::make_unique<PeriodicKernel>(log_ell, log_sigma, log_p));
}
inline Kernel poly(double log_c, double log_sigma, int degree) {
  return Kernel(std::make_unique<PolyKernel>(log_c, log_sigma, degree));
}
inline Kernel lin_iso(double log_ell) { return Kernel(std::make_unique<LinIsoKernel>(log_ell)); }
inline Kernel lin_ard(std::vector<double> log_ell) { return Kernel(std::make_unique<LinArdKernel>(std::move(log_ell))); }
inline Kernel constant(double log_sigma) { return Kernel(std::make_unique<ConstKernel>(log_sigma)); }
inline Kernel noise(double log_sigma) { return Kernel(std::make_unique<NoiseKernel>(log_sigma)); }

/// Holds the parameters with free_mask[i] == false at their current values.
inline Kernel fix(const Kernel& k, std::vector<bool> free_mask) {
  return Kernel(std::make_unique<FixedKernel>(k.clone_node(), std::move(free_mask)));
}

/// Restricts k to the given 0-based input dimensions.
inline Kernel masked(const Kernel& k, std::vector<std::size_t> dims) {
  return Kernel(std::make_unique<MaskedKernel>(k.clone_node(), std::move(dims)));
}

}  // namespace kern

// ---------------------------------------------------------------------------
// Gram matrices and their parameter derivatives.

struct GramMatrix {
  MatrixXd values;
  double jitter_applied = 0.0;
};

inline void check_inputs(const Kernel& k, const MatrixXd& X) {
  if (X.cols() < 1) throw InputError("gram: need at least one input point");
  k.check_dim(static_cast<std::size_t>(X.rows()));
}

/// Symmetric n x n covariance; the upper triangle is computed once.
inline MatrixXd gram_matrix(const Kernel& k, const MatrixXd& X) {
  check_inputs(k, X);
  const Eigen::Index n = X.cols();
  MatrixXd K(n, n);
  const KernelNode& node = k.node();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double v = node.eval(column(X, i), column(X, j));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

inline GramMatrix gram(const Kernel& k, const MatrixXd& X) { return {gram_matrix(k, X), 0.0}; }

inline MatrixXd cross_gram(const Kernel& k, const MatrixXd& X, const MatrixXd& Y) {
  if (X.rows() != Y.rows())
    throw InputError("cross_gram: input dimensions differ (" + std::to_string(X.rows()) + " vs " +
                     std::to_string(Y.rows()) + ")");
  k.check_dim(static_cast<std::size_t>(X.rows()));
  MatrixXd K(X.cols(), Y.cols());
  const KernelNode& node = k.node();
  for (Eigen::Index j = 0; j < Y.cols(); ++j)
    for (Eigen::Index i = 0; i < X.cols(); ++i) K(i, j) = node.eval(column(X, i), column(Y, j));
  return K;
}

/// k(x_i, x_i) for every column.
inline VectorXd gram_diag(const Kernel& k, const MatrixXd& X) {
  k.check_dim(static_cast<std::size_t>(X.rows()));
  VectorXd d(X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) d[i] = k.node().eval(column(X, i), column(X, i));
  return d;
}

/// sum_ij W_ij dK_ij/dtheta for symmetric W.
inline VectorXd grad_contract(const Kernel& k, const MatrixXd& X, const MatrixXd& W) {
  const auto P = static_cast<Eigen::Index>(k.num_params());
  VectorXd acc = VectorXd::Zero(P);
  VectorXd g(P);
  const KernelNode& node = k.node();
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      node.eval_grad(column(X, i), column(X, j), g.data());
      const double w = (i == j) ? W(i, i) : W(i, j) + W(j, i);
      acc.noalias() += w * g;
    }
  }
  return acc;
}

/// sum_ij W_ij dk(x_i, y_j)/dtheta for a general rows(X) x cols(Y) weight.
inline VectorXd grad_contract_cross(const Kernel& k, const MatrixXd& X, const MatrixXd& Y, const MatrixXd& W) {
  const auto P = static_cast<Eigen::Index>(k.num_params());
  VectorXd acc = VectorXd::Zero(P);
  VectorXd g(P);
  const KernelNode& node = k.node();
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
      node.eval_grad(column(X, i), column(Y, j), g.data());
      acc.noalias() += W(i, j) * g;
    }
  }
  return acc;
}

/// One n x n matrix dK/dtheta_p per parameter.
inline std::vector<MatrixXd> grad_gram(const Kernel& k, const MatrixXd& X) {
  const std::size_t P = k.num_params();
  const Eigen::Index n = X.cols();
  std::vector<MatrixXd> dK(P, MatrixXd(n, n));
  detail::Scratch g(P);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      k.node().eval_grad(column(X, i), column(X, j), g.data());
      for (std::size_t p = 0; p < P; ++p) {
        dK[p](i, j) = g.data()[p];
        dK[p](j, i) = g.data()[p];
      }
    }
  }
  return dK;
}

/// One rows(X) x cols(Y) matrix per parameter.
inline std::vector<MatrixXd> grad_cross_gram(const Kernel& k, const MatrixXd& X, const MatrixXd& Y) {
  const std::size_t P = k.num_params();
  std::vector<MatrixXd> dK(P, MatrixXd(X.cols(), Y.cols()));
  detail::Scratch g(P);
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
      k.node().eval_grad(column(X, i), column(Y, j), g.data());
      for (std::size_t p = 0; p < P; ++p) dK[p](i, j) = g.data()[p];
    }
  }
  return dK;
}

/// P x n matrix of d k(x_i, x_i) / dtheta.
inline MatrixXd grad_diag(const Kernel& k, const MatrixXd& X) {
  const auto P = static_cast<Eigen::Index>(k.num_params());
  MatrixXd D(P, X.cols());
  VectorXd g(P);
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    k.node().eval_grad(column(X, i), column(X, i), g.data());
    D.col(i) = g;
  }
  return D;
}

}  // namespace gpkit
