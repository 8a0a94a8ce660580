#ifndef FC2_MODEL_AUTOGRAD_HPP_
#define FC2_MODEL_AUTOGRAD_HPP_

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "fc2/rng.hpp"

// Minimal reverse-mode autodiff over dense double matrices. Values are
// computed eagerly at node construction; backward() runs the tape in
// reverse topological order. Graphs are built per forward pass and dropped
// afterwards.

namespace fc2::ag {

using Mat = Eigen::MatrixXd;

struct Node {
  Mat value;
  Mat grad;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backprop;  // accumulate into inputs (or a sink)
  bool needs_grad = false;

  void ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols())
      grad = Mat::Zero(value.rows(), value.cols());
  }
};

using NodePtr = std::shared_ptr<Node>;

inline NodePtr constant(Mat v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return n;
}

// Leaf whose gradient is accumulated into an external sink (a parameter's
// grad buffer).
inline NodePtr leaf(const Mat& v, Mat* grad_sink) {
  auto n = std::make_shared<Node>();
  n->value = v;
  n->needs_grad = true;
  if (grad_sink) {
    n->backprop = [grad_sink](Node& self) { *grad_sink += self.grad; };
  }
  return n;
}

namespace detail {

inline NodePtr make(Mat v, std::vector<NodePtr> inputs,
                    std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->inputs = std::move(inputs);
  for (const auto& in : n->inputs) n->needs_grad = n->needs_grad || in->needs_grad;
  if (n->needs_grad) n->backprop = std::move(backprop);
  return n;
}

}  // namespace detail

inline NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  return detail::make(a->value * b->value, {a, b}, [](Node& n) {
    auto &a = *n.inputs[0], &b = *n.inputs[1];
    if (a.needs_grad) { a.ensure_grad(); a.grad.noalias() += n.grad * b.value.transpose(); }
    if (b.needs_grad) { b.ensure_grad(); b.grad.noalias() += a.value.transpose() * n.grad; }
  });
}

// a * b^T
inline NodePtr matmul_nt(const NodePtr& a, const NodePtr& b) {
  return detail::make(a->value * b->value.transpose(), {a, b}, [](Node& n) {
    auto &a = *n.inputs[0], &b = *n.inputs[1];
    if (a.needs_grad) { a.ensure_grad(); a.grad.noalias() += n.grad * b.value; }
    if (b.needs_grad) { b.ensure_grad(); b.grad.noalias() += n.grad.transpose() * a.value; }
  });
}

inline NodePtr add(const NodePtr& a, const NodePtr& b) {
  return detail::make(a->value + b->value, {a, b}, [](Node& n) {
    for (auto& in : n.inputs)
      if (in->needs_grad) { in->ensure_grad(); in->grad += n.grad; }
  });
}

// Broadcast a 1xC row vector over every row of a.
inline NodePtr add_rowvec(const NodePtr& a, const NodePtr& r) {
  Mat v = a->value;
  v.rowwise() += Eigen::RowVectorXd(r->value.row(0));
  return detail::make(std::move(v), {a, r}, [](Node& n) {
    auto &a = *n.inputs[0], &r = *n.inputs[1];
    if (a.needs_grad) { a.ensure_grad(); a.grad += n.grad; }
    if (r.needs_grad) { r.ensure_grad(); r.grad += n.grad.colwise().sum(); }
  });
}

inline NodePtr scale(const NodePtr& a, double s) {
  return detail::make(a->value * s, {a}, [s](Node& n) {
    auto& a = *n.inputs[0];
    if (a.needs_grad) { a.ensure_grad(); a.grad += n.grad * s; }
  });
}

inline NodePtr relu(const NodePtr& a) {
  return detail::make(a->value.cwiseMax(0.0), {a}, [](Node& n) {
    auto& a = *n.inputs[0];
    if (!a.needs_grad) return;
    a.ensure_grad();
    a.grad += (a.value.array() > 0.0).cast<double>().matrix().cwiseProduct(n.grad);
  });
}

inline NodePtr softmax_rows(const NodePtr& a) {
  Mat v = a->value;
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    Eigen::RowVectorXd row = v.row(i);
    double m = row.maxCoeff();
    row = (row.array() - m).exp();
    v.row(i) = row / row.sum();
  }
  return detail::make(std::move(v), {a}, [](Node& n) {
    auto& a = *n.inputs[0];
    if (!a.needs_grad) return;
    a.ensure_grad();
    for (Eigen::Index i = 0; i < n.value.rows(); ++i) {
      double dot = n.grad.row(i).dot(n.value.row(i));
      a.grad.row(i) += (n.grad.row(i).array() - dot).matrix().cwiseProduct(n.value.row(i));
    }
  });
}

// Row-wise layer norm with learned 1xC gain/bias.
inline NodePtr layernorm_rows(const NodePtr& a, const NodePtr& gamma, const NodePtr& beta,
                              double eps = 1e-5) {
  const Eigen::Index R = a->value.rows(), C = a->value.cols();
  Mat xhat(R, C);
  Eigen::VectorXd inv_std(R);
  for (Eigen::Index i = 0; i < R; ++i) {
    double mu = a->value.row(i).mean();
    Eigen::RowVectorXd centered = a->value.row(i).array() - mu;
    double var = centered.squaredNorm() / static_cast<double>(C);
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = centered * inv_std(i);
  }
  Mat v = xhat;
  for (Eigen::Index i = 0; i < R; ++i)
    v.row(i) = v.row(i).cwiseProduct(gamma->value.row(0)) + beta->value.row(0);
  auto xhat_s = std::make_shared<Mat>(std::move(xhat));
  auto inv_s = std::make_shared<Eigen::VectorXd>(std::move(inv_std));
  return detail::make(std::move(v), {a, gamma, beta}, [xhat_s, inv_s](Node& n) {
    auto &a = *n.inputs[0], &gamma = *n.inputs[1], &beta = *n.inputs[2];
    const Mat& xhat = *xhat_s;
    const Eigen::Index C = xhat.cols();
    if (gamma.needs_grad) {
      gamma.ensure_grad();
      gamma.grad += n.grad.cwiseProduct(xhat).colwise().sum();
    }
    if (beta.needs_grad) {
      beta.ensure_grad();
      beta.grad += n.grad.colwise().sum();
    }
    if (a.needs_grad) {
      a.ensure_grad();
      for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
        Eigen::RowVectorXd dxhat =
            n.grad.row(i).cwiseProduct(gamma.value.row(0));
        double mean_dxhat = dxhat.mean();
        double mean_dxhat_xhat = dxhat.cwiseProduct(xhat.row(i)).sum() / static_cast<double>(C);
        a.grad.row(i) += ((dxhat.array() - mean_dxhat -
                           xhat.row(i).array() * mean_dxhat_xhat) *
                          (*inv_s)(i)).matrix();
      }
    }
  });
}

inline NodePtr concat_cols(const std::vector<NodePtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  Eigen::Index R = parts[0]->value.rows(), C = 0;
  for (const auto& p : parts) C += p->value.cols();
  Mat v(R, C);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    v.middleCols(off, p->value.cols()) = p->value;
    off += p->value.cols();
  }
  return detail::make(std::move(v), parts, [](Node& n) {
    Eigen::Index off = 0;
    for (auto& in : n.inputs) {
      if (in->needs_grad) {
        in->ensure_grad();
        in->grad += n.grad.middleCols(off, in->value.cols());
      }
      off += in->value.cols();
    }
  });
}

inline NodePtr concat_cols(const NodePtr& a, const NodePtr& b) {
  return concat_cols(std::vector<NodePtr>{a, b});
}

inline NodePtr slice_cols(const NodePtr& a, Eigen::Index start, Eigen::Index count) {
  return detail::make(a->value.middleCols(start, count), {a}, [start, count](Node& n) {
    auto& a = *n.inputs[0];
    if (!a.needs_grad) return;
    a.ensure_grad();
    a.grad.middleCols(start, count) += n.grad;
  });
}

// Rows shifted down by s (row i takes input row i-s); out-of-range rows are
// zero. Backbone of kernel-k 1D convolutions expressed as shifted matmuls.
inline NodePtr shift_rows(const NodePtr& a, Eigen::Index s) {
  const Eigen::Index R = a->value.rows();
  Mat v = Mat::Zero(R, a->value.cols());
  for (Eigen::Index i = 0; i < R; ++i) {
    Eigen::Index src = i - s;
    if (src >= 0 && src < R) v.row(i) = a->value.row(src);
  }
  return detail::make(std::move(v), {a}, [s, R](Node& n) {
    auto& a = *n.inputs[0];
    if (!a.needs_grad) return;
    a.ensure_grad();
    for (Eigen::Index i = 0; i < R; ++i) {
      Eigen::Index src = i - s;
      if (src >= 0 && src < R) a.grad.row(src) += n.grad.row(i);
    }
  });
}

// 1xC mean over rows.
inline NodePtr mean_rows(const NodePtr& a) {
  const double R = static_cast<double>(a->value.rows());
  return detail::make(a->value.colwise().mean(), {a}, [R](Node& n) {
    auto& a = *n.inputs[0];
    if (!a.needs_grad) return;
    a.ensure_grad();
    for (Eigen::Index i = 0; i < a.value.rows(); ++i) a.grad.row(i) += n.grad.row(0) / R;
  });
}

// Gather rows of an embedding table by id; backward scatter-adds.
inline NodePtr embedding_rows(const NodePtr& table, const std::vector<int>& ids) {
  Mat v(static_cast<Eigen::Index>(ids.size()), table->value.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table->value.rows())
      throw std::out_of_range("embedding_rows: id out of range");
    v.row(static_cast<Eigen::Index>(i)) = table->value.row(ids[i]);
  }
  auto ids_s = std::make_shared<std::vector<int>>(ids);
  return detail::make(std::move(v), {table}, [ids_s](Node& n) {
    auto& t = *n.inputs[0];
    if (!t.needs_grad) return;
    t.ensure_grad();
    for (std::size_t i = 0; i < ids_s->size(); ++i)
      t.grad.row((*ids_s)[i]) += n.grad.row(static_cast<Eigen::Index>(i));
  });
}

// Inverted dropout; identity when keep_prob == 1.
inline NodePtr dropout(const NodePtr& a, double drop_prob, RngStream& rng) {
  if (drop_prob <= 0.0) return a;
  const double keep = 1.0 - drop_prob;
  Mat mask(a->value.rows(), a->value.cols());
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      mask(i, j) = rng.next_double() < drop_prob ? 0.0 : 1.0 / keep;
  auto mask_s = std::make_shared<Mat>(std::move(mask));
  return detail::make(a->value.cwiseProduct(*mask_s), {a}, [mask_s](Node& n) {
    auto& a = *n.inputs[0];
    if (!a.needs_grad) return;
    a.ensure_grad();
    a.grad += n.grad.cwiseProduct(*mask_s);
  });
}

// Mean token-level cross entropy of row-wise logits against target ids;
// returns a 1x1 node.
inline NodePtr cross_entropy_mean(const NodePtr& logits, const std::vector<int>& targets) {
  const Eigen::Index R = logits->value.rows();
  if (static_cast<Eigen::Index>(targets.size()) != R)
    throw std::invalid_argument("cross_entropy_mean: target length mismatch");
  if (R == 0) throw std::invalid_argument("cross_entropy_mean: empty logits");
  Mat probs(R, logits->value.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < R; ++i) {
    Eigen::RowVectorXd row = logits->value.row(i);
    double m = row.maxCoeff();
    row = (row.array() - m).exp();
    probs.row(i) = row / row.sum();
    loss -= std::log(std::max(probs(i, targets[i]), 1e-300));
  }
  loss /= static_cast<double>(R);
  auto probs_s = std::make_shared<Mat>(std::move(probs));
  auto tgt_s = std::make_shared<std::vector<int>>(targets);
  Mat v(1, 1);
  v(0, 0) = loss;
  return detail::make(std::move(v), {logits}, [probs_s, tgt_s, R](Node& n) {
    auto& l = *n.inputs[0];
    if (!l.needs_grad) return;
    l.ensure_grad();
    double g = n.grad(0, 0) / static_cast<double>(R);
    Mat d = *probs_s;
    for (Eigen::Index i = 0; i < R; ++i) d(i, (*tgt_s)[i]) -= 1.0;
    l.grad += d * g;
  });
}

// Mean squared error against a constant target; 1x1 node.
inline NodePtr mse_const(const NodePtr& a, const Mat& target) {
  if (a->value.rows() != target.rows() || a->value.cols() != target.cols())
    throw std::invalid_argument("mse_const: shape mismatch");
  Mat diff = a->value - target;
  Mat v(1, 1);
  const double n_elems = static_cast<double>(diff.size());
  v(0, 0) = diff.squaredNorm() / n_elems;
  auto diff_s = std::make_shared<Mat>(std::move(diff));
  return detail::make(std::move(v), {a}, [diff_s, n_elems](Node& n) {
    auto& a = *n.inputs[0];
    if (!a.needs_grad) return;
    a.ensure_grad();
    a.grad += (2.0 / n_elems) * n.grad(0, 0) * (*diff_s);
  });
}

// Reverse-mode sweep from a 1x1 root.
inline void backward(const NodePtr& root) {
  if (root->value.size() != 1)
    throw std::invalid_argument("backward: root must be a scalar node");
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<NodePtr> keepalive;
  std::function<void(const NodePtr&)> visit = [&](const NodePtr& n) {
    if (!n->needs_grad || seen.count(n.get())) return;
    seen.insert(n.get());
    for (const auto& in : n->inputs) visit(in);
    order.push_back(n.get());
    keepalive.push_back(n);
  };
  visit(root);
  root->ensure_grad();
  root->grad(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    n->ensure_grad();
    if (n->backprop) n->backprop(*n);
  }
}

}  // namespace fc2::ag

#endif  // FC2_MODEL_AUTOGRAD_HPP_
