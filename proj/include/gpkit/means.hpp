#pragma once

// Mean functions m(x). Parameters live on the natural scale.

#include <memory>
#include <string>
#include <vector>

#include "gpkit/core.hpp"
#include "gpkit/priors.hpp"

namespace gpkit {

class MeanNode {
 public:
  virtual ~MeanNode() = default;
  virtual std::unique_ptr<MeanNode> clone() const = 0;
  virtual std::string type_name() const = 0;
  virtual std::string render() const = 0;
  virtual std::size_t num_params() const = 0;
  virtual void get_params(double* out) const = 0;
  virtual void set_params(const double* in) = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual void check_dim(std::size_t d) const { (void)d; }
  virtual double eval(Point x) const = 0;
  /// Writes dm/dtheta into out and returns m(x).
  virtual double eval_grad(Point x, double* out) const = 0;
  virtual int precedence() const { return 2; }
};

class MeanZero final : public MeanNode {
 public:
  std::unique_ptr<MeanNode> clone() const override { return std::make_unique<MeanZero>(*this); }
  std::string type_name() const override { return "MeanZero"; }
  std::string render() const override { return "MeanZero()"; }
  std::size_t num_params() const override { return 0; }
  void get_params(double*) const override {}
  void set_params(const double*) override {}
  std::vector<std::string> param_names() const override { return {}; }
  double eval(Point) const override { return 0.0; }
  double eval_grad(Point, double*) const override { return 0.0; }
};

/// Scalar constant. (The tabulated per-dimension vector reduces to one
/// value for scalar outputs.)
class MeanConst final : public MeanNode {
 public:
  explicit MeanConst(double c) : c_(c) {}
  std::unique_ptr<MeanNode> clone() const override { return std::make_unique<MeanConst>(*this); }
  std::string type_name() const override { return "MeanConst"; }
  std::string render() const override { return "MeanConst(" + format_double(c_) + ")"; }
  std::size_t num_params() const override { return 1; }
  void get_params(double* out) const override { out[0] = c_; }
  void set_params(const double* in) override { c_ = in[0]; }
  std::vector<std::string> param_names() const override { return {"Mean const"}; }
  double eval(Point) const override { return c_; }
  double eval_grad(Point, double* out) const override {
    out[0] = 1.0;
    return c_;
  }

 private:
  double c_;
};

/// m(x) = x' theta
class MeanLin final : public MeanNode {
 public:
  explicit MeanLin(std::vector<double> beta) : beta_(std::move(beta)) {
    if (beta_.empty()) throw ConfigError("MeanLin: empty coefficient vector");
  }
  std::unique_ptr<MeanNode> clone() const override { return std::make_unique<MeanLin>(*this); }
  std::string type_name() const override { return "MeanLin"; }
  std::string render() const override {
    std::string s = "MeanLin([";
    for (std::size_t i = 0; i < beta_.size(); ++i) s += (i ? "," : "") + format_double(beta_[i]);
    return s + "])";
  }
  std::size_t num_params() const override { return beta_.size(); }
  void get_params(double* out) const override { std::copy(beta_.begin(), beta_.end(), out); }
  void set_params(const double* in) override { std::copy(in, in + beta_.size(), beta_.begin()); }
  std::vector<std::string> param_names() const override {
    std::vector<std::string> n;
    for (std::size_t i = 0; i < beta_.size(); ++i) n.push_back("Mean lin " + std::to_string(i + 1));
    return n;
  }
  void check_dim(std::size_t d) const override {
    if (d != beta_.size())
      throw ConfigError("MeanLin: " + std::to_string(beta_.size()) + " coefficients for input dimension " +
                        std::to_string(d));
  }
  double eval(Point x) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < beta_.size(); ++i) s += x[i] * beta_[i];
    return s;
  }
  double eval_grad(Point x, double* out) const override {
    for (std::size_t i = 0; i < beta_.size(); ++i) out[i] = x[i];
    return eval(x);
  }

 private:
  std::vector<double> beta_;
};

/// m(x) = sum_{j=1..D} theta_j' x^j with elementwise powers. theta is d x D,
/// flattened column by column (degree-major).
class MeanPoly final : public MeanNode {
 public:
  explicit MeanPoly(MatrixXd theta) : theta_(std::move(theta)) {
    if (theta_.rows() < 1 || theta_.cols() < 1) throw ConfigError("MeanPoly: empty coefficient matrix");
  }
  std::unique_ptr<MeanNode> clone() const override { return std::make_unique<MeanPoly>(*this); }
  std::string type_name() const override { return "MeanPoly"; }
  std::string render() const override {
    std::string s = "MeanPoly(";
    for (Eigen::Index j = 0; j < theta_.cols(); ++j) {
      s += j ? ",[" : "[";
      for (Eigen::Index i = 0; i < theta_.rows(); ++i) s += (i ? "," : "") + format_double(theta_(i, j));
      s += "]";
    }
    return s + ")";
  }
  Eigen::Index degree() const { return theta_.cols(); }
  std::size_t num_params() const override { return static_cast<std::size_t>(theta_.size()); }
  void get_params(double* out) const override { std::copy(theta_.data(), theta_.data() + theta_.size(), out); }
  void set_params(const double* in) override { std::copy(in, in + theta_.size(), theta_.data()); }
  std::vector<std::string> param_names() const override {
    std::vector<std::string> n;
    for (Eigen::Index j = 0; j < theta_.cols(); ++j)
      for (Eigen::Index i = 0; i < theta_.rows(); ++i)
        n.push_back("Mean poly " + std::to_string(i + 1) + "^" + std::to_string(j + 1));
    return n;
  }
  void check_dim(std::size_t d) const override {
    if (static_cast<Eigen::Index>(d) != theta_.rows())
      throw ConfigError("MeanPoly: coefficient rows " + std::to_string(theta_.rows()) +
                        " for input dimension " + std::to_string(d));
  }
  double eval(Point x) const override {
    double s = 0.0;
    for (Eigen::Index i = 0; i < theta_.rows(); ++i) {
      double p = 1.0;
      for (Eigen::Index j = 0; j < theta_.cols(); ++j) {
        p *= x[static_cast<std::size_t>(i)];
        s += theta_(i, j) * p;
      }
    }
    return s;
  }
  double eval_grad(Point x, double* out) const override {
    const Eigen::Index d = theta_.rows();
    for (Eigen::Index i = 0; i < d; ++i) {
      double p = 1.0;
      for (Eigen::Index j = 0; j < theta_.cols(); ++j) {
        p *= x[static_cast<std::size_t>(i)];
        out[j * d + i] = p;
      }
    }
    return eval(x);
  }

 private:
  MatrixXd theta_;
};

class CompositeMean : public MeanNode {
 public:
  const std::vector<std::unique_ptr<MeanNode>>& children() const { return children_; }
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
    for (std::size_t i = 0; i < children_.size(); ++i) {
      if (i) s += precedence() == 0 ? " + " : " * ";
      const bool paren = children_[i]->precedence() <= precedence();
      s += paren ? "(" + children_[i]->render() + ")" : children_[i]->render();
    }
    return s;
  }

 protected:
  explicit CompositeMean(std::vector<std::unique_ptr<MeanNode>> c) : children_(std::move(c)) {
    if (children_.size() < 2) throw ConfigError("composite mean needs at least two children");
    for (const auto& ch : children_) nparams_ += ch->num_params();
  }
  CompositeMean(const CompositeMean& o) : nparams_(o.nparams_) {
    for (const auto& c : o.children_) children_.push_back(c->clone());
  }
  std::vector<std::unique_ptr<MeanNode>> children_;
  std::size_t nparams_ = 0;
};

class MeanSum final : public CompositeMean {
 public:
  explicit MeanSum(std::vector<std::unique_ptr<MeanNode>> c) : CompositeMean(std::move(c)) {}
  std::unique_ptr<MeanNode> clone() const override { return std::make_unique<MeanSum>(*this); }
  std::string type_name() const override { return "SumMean"; }
  int precedence() const override { return 0; }
  double eval(Point x) const override {
    double s = 0.0;
    for (const auto& c : children_) s += c->eval(x);
    return s;
  }
  double eval_grad(Point x, double* out) const override {
    double s = 0.0;
    for (const auto& c : children_) {
      s += c->eval_grad(x, out);
      out += c->num_params();
    }
    return s;
  }
};

class MeanProduct final : public CompositeMean {
 public:
  explicit MeanProduct(std::vector<std::unique_ptr<MeanNode>> c) : CompositeMean(std::move(c)) {}
  std::unique_ptr<MeanNode> clone() const override { return std::make_unique<MeanProduct>(*this); }
  std::string type_name() const override { return "ProdMean"; }
  int precedence() const override { return 1; }
  double eval(Point x) const override {
    double p = 1.0;
    for (const auto& c : children_) p *= c->eval(x);
    return p;
  }
  double eval_grad(Point x, double* out) const override {
    std::vector<double> vals(children_.size());
    double* start = out;
    for (std::size_t i = 0; i < children_.size(); ++i) {
      vals[i] = children_[i]->eval_grad(x, start);
      start += children_[i]->num_params();
    }
    double total = 1.0;
    for (std::size_t i = 0; i < children_.size(); ++i) {
      double others = 1.0;
      for (std::size_t j = 0; j < children_.size(); ++j)
        if (j != i) others *= vals[j];
      for (std::size_t p = 0; p < children_[i]->num_params(); ++p) out[p] *= others;
      out += children_[i]->num_params();
      total *= vals[i];
    }
    return total;
  }
};

/// Value-semantic mean function handle.
class MeanFunction {
 public:
  MeanFunction() : root_(std::make_unique<MeanZero>()) {}
  explicit MeanFunction(std::unique_ptr<MeanNode> root) : root_(std::move(root)) {}
  MeanFunction(const MeanFunction& o) : root_(o.root_->clone()), priors_(o.priors_) {}
  MeanFunction(MeanFunction&&) noexcept = default;
  MeanFunction& operator=(const MeanFunction& o) {
    if (this != &o) {
      root_ = o.root_->clone();
      priors_ = o.priors_;
    }
    return *this;
  }
  MeanFunction& operator=(MeanFunction&&) noexcept = default;

  const MeanNode& node() const { return *root_; }
  std::unique_ptr<MeanNode> clone_node() const { return root_->clone(); }
  std::size_t num_params() const { return root_->num_params(); }
  std::string type_name() const { return root_->type_name(); }
  std::string render() const { return root_->render(); }
  std::vector<std::string> param_names() const { return root_->param_names(); }
  void check_dim(std::size_t d) const { root_->check_dim(d); }

  VectorXd params() const {
    VectorXd p(static_cast<Eigen::Index>(num_params()));
    root_->get_params(p.data());
    return p;
  }
  void set_params(const VectorXd& p) {
    if (static_cast<std::size_t>(p.size()) != num_params())
      throw ConfigError("mean set_params: expected " + std::to_string(num_params()) + " values, got " +
                        std::to_string(p.size()));
    root_->set_params(p.data());
  }

  void set_priors(PriorSet p) {
    p.check_size(num_params(), "mean priors");
    priors_ = std::move(p);
  }
  const PriorSet& priors() const { return priors_; }

 private:
  std::unique_ptr<MeanNode> root_;
  PriorSet priors_;
};

namespace detail {
template <class Node>
std::vector<std::unique_ptr<MeanNode>> flatten_means(const MeanFunction& a, const MeanFunction& b) {
  std::vector<std::unique_ptr<MeanNode>> c;
  for (const MeanFunction* m : {&a, &b}) {
    if (const auto* same = dynamic_cast<const Node*>(&m->node())) {
      for (const auto& ch : same->children()) c.push_back(ch->clone());
    } else {
      c.push_back(m->clone_node());
    }
  }
  return c;
}
}  // namespace detail

inline MeanFunction operator+(const MeanFunction& a, const MeanFunction& b) {
  return MeanFunction(std::make_unique<MeanSum>(detail::flatten_means<MeanSum>(a, b)));
}
inline MeanFunction operator*(const MeanFunction& a, const MeanFunction& b) {
  return MeanFunction(std::make_unique<MeanProduct>(detail::flatten_means<MeanProduct>(a, b)));
}

namespace mean {
inline MeanFunction zero() { return MeanFunction(std::make_unique<MeanZero>()); }
inline MeanFunction constant(double c) { return MeanFunction(std::make_unique<MeanConst>(c)); }
inline MeanFunction linear(std::vector<double> beta) { return MeanFunction(std::make_unique<MeanLin>(std::move(beta))); }
inline MeanFunction poly(MatrixXd theta) { return MeanFunction(std::make_unique<MeanPoly>(std::move(theta))); }
}  // namespace mean

/// Per-column evaluation of m over X (d x n).
inline VectorXd mean_eval(const MeanFunction& m, const MatrixXd& X) {
  m.check_dim(static_cast<std::size_t>(X.rows()));
  VectorXd out(X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) out[i] = m.node().eval(column(X, i));
  return out;
}

/// num_params x n matrix of partial derivatives.
inline MatrixXd mean_grad_params(const MeanFunction& m, const MatrixXd& X) {
  m.check_dim(static_cast<std::size_t>(X.rows()));
  const auto P = static_cast<Eigen::Index>(m.num_params());
  MatrixXd G(P, X.cols());
  VectorXd g(P);
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    m.node().eval_grad(column(X, i), g.data());
    G.col(i) = g;
  }
  return G;
}

}  // namespace gpkit
