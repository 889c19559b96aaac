#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "seglab/error.hpp"
#include "seglab/kernels.hpp"
#include "seglab/loss.hpp"
#include "seglab/tensor.hpp"

namespace seglab {

enum class Op {
  Placeholder,
  Parameter,
  Add,
  Sub,
  Mul,
  Scale,
  SumAll,
  Relu,
  Sigmoid,
  Conv2d,
  MaxPool2,
  UpConv2,
  ConcatCh,
  HybridLoss,
  WeightedSum,
};

struct Node {
  std::string id;
  Op op = Op::Placeholder;
  std::vector<int> inputs;
  double scalar = 1.0;                // Scale factor
  std::vector<double> weights;        // WeightedSum coefficients
  LossConfig loss;                    // HybridLoss settings
  Shape decl;                         // Placeholder shape; 0 extent = any
  Tensor value;
  Tensor grad;
  bool trainable = false;
};

// Static computation DAG. Nodes are appended in dependency order, so the
// construction sequence doubles as a topological order: forward walks it
// ascending, backward descending. Gradient contributions therefore reach a
// node in the fixed reverse construction order of its consumers, which keeps
// accumulation bitwise reproducible.
class Graph {
 public:
  int placeholder(const std::string& id, Shape decl) {
    Node n;
    n.id = id;
    n.op = Op::Placeholder;
    n.decl = std::move(decl);
    return append(std::move(n));
  }

  int parameter(const std::string& id, Tensor init) {
    Node n;
    n.id = id;
    n.op = Op::Parameter;
    n.value = std::move(init);
    n.trainable = true;
    return append(std::move(n));
  }

  int add(const std::string& id, int a, int b) { return simple(id, Op::Add, {a, b}); }
  int sub(const std::string& id, int a, int b) { return simple(id, Op::Sub, {a, b}); }
  int mul(const std::string& id, int a, int b) { return simple(id, Op::Mul, {a, b}); }

  int scale(const std::string& id, int x, double factor) {
    Node n;
    n.id = id;
    n.op = Op::Scale;
    n.inputs = {check_input(x)};
    n.scalar = factor;
    return append(std::move(n));
  }

  int sum_all(const std::string& id, int x) { return simple(id, Op::SumAll, {x}); }
  int relu(const std::string& id, int x) { return simple(id, Op::Relu, {x}); }
  int sigmoid(const std::string& id, int x) { return simple(id, Op::Sigmoid, {x}); }

  int conv2d(const std::string& id, int x, int kernel, int bias) {
    return simple(id, Op::Conv2d, {x, kernel, bias});
  }
  int maxpool2(const std::string& id, int x) { return simple(id, Op::MaxPool2, {x}); }
  int upconv2(const std::string& id, int x, int kernel, int bias) {
    return simple(id, Op::UpConv2, {x, kernel, bias});
  }

  int concat(const std::string& id, const std::vector<int>& parts) {
    require(!parts.empty(), ErrorKind::Shape, id + ": concat of zero inputs");
    return simple(id, Op::ConcatCh, parts);
  }

  int hybrid_loss_node(const std::string& id, int label, int pred,
                       const LossConfig& cfg) {
    cfg.validate();
    Node n;
    n.id = id;
    n.op = Op::HybridLoss;
    n.inputs = {check_input(label), check_input(pred)};
    n.loss = cfg;
    return append(std::move(n));
  }

  int weighted_sum(const std::string& id, const std::vector<int>& terms,
                   std::vector<double> weights) {
    require(terms.size() == weights.size(), ErrorKind::Config,
            id + ": " + std::to_string(weights.size()) + " weights for " +
                std::to_string(terms.size()) + " terms");
    Node n;
    n.id = id;
    n.op = Op::WeightedSum;
    for (int t : terms) n.inputs.push_back(check_input(t));
    n.weights = std::move(weights);
    return append(std::move(n));
  }

  void mark_output(int node) {
    check_input(node);
    outputs_.push_back(node);
  }

  int find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? -1 : it->second;
  }

  int must_find(const std::string& id) const {
    int i = find(id);
    require(i >= 0, ErrorKind::Contract, "no node named " + id);
    return i;
  }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(int i) const { return nodes_[std::size_t(i)]; }
  const std::vector<int>& outputs() const { return outputs_; }
  const std::vector<int>& params() const { return params_; }
  const std::vector<int>& placeholders() const { return placeholders_; }

  const Tensor& value(int i) const { return nodes_[std::size_t(i)].value; }
  const Tensor& value(const std::string& id) const { return value(must_find(id)); }
  const Tensor& grad(int i) const { return nodes_[std::size_t(i)].grad; }
  const Tensor& grad(const std::string& id) const { return grad(must_find(id)); }

  Tensor& param_value(int i) {
    require(nodes_[std::size_t(i)].trainable, ErrorKind::Contract,
            nodes_[std::size_t(i)].id + " is not a parameter");
    return nodes_[std::size_t(i)].value;
  }
  Tensor& param_value(const std::string& id) { return param_value(must_find(id)); }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (int p : params_) n += nodes_[std::size_t(p)].value.numel();
    return n;
  }

  void forward(const std::map<std::string, Tensor>& feeds) {
    for (const auto& [name, t] : feeds) {
      int i = find(name);
      require(i >= 0 && nodes_[std::size_t(i)].op == Op::Placeholder,
              ErrorKind::Feed, "feed for unknown placeholder " + name);
      const Shape& decl = nodes_[std::size_t(i)].decl;
      require(t.rank() == decl.size(), ErrorKind::Shape,
              name + ": feed rank " + std::to_string(t.rank()) +
                  " does not match declared " + std::to_string(decl.size()));
      for (std::size_t d = 0; d < decl.size(); ++d)
        require(decl[d] == 0 || decl[d] == t.shape()[d], ErrorKind::Shape,
                name + ": feed shape " + shape_str(t.shape()) +
                    " does not match declared " + shape_str(decl));
      nodes_[std::size_t(i)].value = t;
    }
    for (int p : placeholders_)
      require(feeds.count(nodes_[std::size_t(p)].id) == 1, ErrorKind::Feed,
              "placeholder " + nodes_[std::size_t(p)].id + " was not fed");
    for (Node& n : nodes_) compute(n);
    ran_forward_ = true;
  }

  void backward(int loss_node) {
    require(ran_forward_, ErrorKind::Contract, "backward before forward");
    Node& loss = nodes_[std::size_t(check_input(loss_node))];
    require(loss.value.numel() == 1, ErrorKind::Contract,
            loss.id + " is not scalar; cannot start backward from shape " +
                shape_str(loss.value.shape()));
    for (Node& n : nodes_) {
      n.grad = Tensor(n.value.shape(), 0.0);
    }
    loss.grad[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) propagate(nodes_[i]);
  }

  void backward(const std::string& loss_id) { backward(must_find(loss_id)); }

 private:
  int check_input(int i) const {
    require(i >= 0 && std::size_t(i) < nodes_.size(), ErrorKind::Contract,
            "node index " + std::to_string(i) + " out of range");
    return i;
  }

  int simple(const std::string& id, Op op, const std::vector<int>& inputs) {
    Node n;
    n.id = id;
    n.op = op;
    for (int i : inputs) n.inputs.push_back(check_input(i));
    return append(std::move(n));
  }

  int append(Node n) {
    require(index_.count(n.id) == 0, ErrorKind::Contract,
            "duplicate node id " + n.id);
    int idx = int(nodes_.size());
    index_[n.id] = idx;
    if (n.op == Op::Parameter) params_.push_back(idx);
    if (n.op == Op::Placeholder) placeholders_.push_back(idx);
    nodes_.push_back(std::move(n));
    return idx;
  }

  const Tensor& in(const Node& n, std::size_t i) const {
    return nodes_[std::size_t(n.inputs[i])].value;
  }

  void compute(Node& n) {
    switch (n.op) {
      case Op::Placeholder:
      case Op::Parameter:
        return;
      case Op::Add:
        n.value = seglab::add(in(n, 0), in(n, 1));
        return;
      case Op::Sub:
        n.value = seglab::sub(in(n, 0), in(n, 1));
        return;
      case Op::Mul:
        n.value = seglab::mul(in(n, 0), in(n, 1));
        return;
      case Op::Scale:
        n.value = seglab::scale(in(n, 0), n.scalar);
        return;
      case Op::SumAll:
        n.value = Tensor::scalar(seglab::sum_all(in(n, 0)));
        return;
      case Op::Relu:
        n.value = relu_forward(in(n, 0));
        return;
      case Op::Sigmoid:
        n.value = sigmoid_forward(in(n, 0));
        return;
      case Op::Conv2d:
        n.value = conv2d_forward(in(n, 0), in(n, 1), in(n, 2));
        return;
      case Op::MaxPool2:
        n.value = maxpool2_forward(in(n, 0));
        return;
      case Op::UpConv2:
        n.value = upconv2_forward(in(n, 0), in(n, 1), in(n, 2));
        return;
      case Op::ConcatCh: {
        std::vector<Tensor> parts;
        parts.reserve(n.inputs.size());
        for (int i : n.inputs) parts.push_back(nodes_[std::size_t(i)].value);
        n.value = concat_channels(parts);
        return;
      }
      case Op::HybridLoss:
        n.value = Tensor::scalar(hybrid_loss(in(n, 0), in(n, 1), n.loss));
        return;
      case Op::WeightedSum: {
        double acc = 0.0;
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
          const Tensor& t = in(n, i);
          require(t.numel() == 1, ErrorKind::Shape,
                  n.id + ": weighted term " + std::to_string(i) + " is not scalar");
          acc += n.weights[i] * t[0];
        }
        n.value = Tensor::scalar(acc);
        return;
      }
    }
  }

  Tensor& gin(Node& n, std::size_t i) {
    return nodes_[std::size_t(n.inputs[i])].grad;
  }

  static void acc(Tensor& dst, const Tensor& src) {
    for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
  }

  void propagate(Node& n) {
    switch (n.op) {
      case Op::Placeholder:
      case Op::Parameter:
        return;
      case Op::Add:
        acc(gin(n, 0), n.grad);
        acc(gin(n, 1), n.grad);
        return;
      case Op::Sub: {
        acc(gin(n, 0), n.grad);
        Tensor& g1 = gin(n, 1);
        for (std::size_t i = 0; i < g1.numel(); ++i) g1[i] -= n.grad[i];
        return;
      }
      case Op::Mul: {
        Tensor& g0 = gin(n, 0);
        Tensor& g1 = gin(n, 1);
        const Tensor& a = in(n, 0);
        const Tensor& b = in(n, 1);
        for (std::size_t i = 0; i < g0.numel(); ++i) {
          g0[i] += n.grad[i] * b[i];
          g1[i] += n.grad[i] * a[i];
        }
        return;
      }
      case Op::Scale: {
        Tensor& g0 = gin(n, 0);
        for (std::size_t i = 0; i < g0.numel(); ++i)
          g0[i] += n.grad[i] * n.scalar;
        return;
      }
      case Op::SumAll: {
        Tensor& g0 = gin(n, 0);
        for (std::size_t i = 0; i < g0.numel(); ++i) g0[i] += n.grad[0];
        return;
      }
      case Op::Relu:
        acc(gin(n, 0), relu_backward(in(n, 0), n.grad));
        return;
      case Op::Sigmoid:
        acc(gin(n, 0), sigmoid_backward(n.value, n.grad));
        return;
      case Op::Conv2d: {
        ConvGrads g = conv2d_backward(in(n, 0), in(n, 1), n.grad);
        acc(gin(n, 0), g.dx);
        acc(gin(n, 1), g.dk);
        acc(gin(n, 2), g.db);
        return;
      }
      case Op::MaxPool2:
        acc(gin(n, 0), maxpool2_backward(in(n, 0), n.grad));
        return;
      case Op::UpConv2: {
        ConvGrads g = upconv2_backward(in(n, 0), in(n, 1), n.grad);
        acc(gin(n, 0), g.dx);
        acc(gin(n, 1), g.dk);
        acc(gin(n, 2), g.db);
        return;
      }
      case Op::ConcatCh: {
        const Shape& os = n.value.shape();
        const std::size_t hw = os[2] * os[3];
        std::size_t c_off = 0;
        for (std::size_t part = 0; part < n.inputs.size(); ++part) {
          Tensor& gp = gin(n, part);
          const std::size_t pc = gp.shape()[1];
          for (std::size_t b = 0; b < os[0]; ++b) {
            const double* src = n.grad.data() + (b * os[1] + c_off) * hw;
            double* dst = gp.data() + b * pc * hw;
            for (std::size_t i = 0; i < pc * hw; ++i) dst[i] += src[i];
          }
          c_off += pc;
        }
        return;
      }
      case Op::HybridLoss: {
        // Labels are targets, not differentiated through.
        const Tensor& label = in(n, 0);
        const Tensor& pred = in(n, 1);
        Tensor& gp = gin(n, 1);
        const double scale_out =
            -n.grad[0] / double(label.extent(0) * label.extent(2) * label.extent(3));
        for (std::size_t i = 0; i < pred.numel(); ++i)
          gp[i] += scale_out * lossmath::point_dterm_dp(label[i], pred[i], n.loss);
        return;
      }
      case Op::WeightedSum: {
        for (std::size_t i = 0; i < n.inputs.size(); ++i)
          gin(n, i)[0] += n.grad[0] * n.weights[i];
        return;
      }
    }
  }

  std::vector<Node> nodes_;
  std::map<std::string, int> index_;
  std::vector<int> params_;
  std::vector<int> placeholders_;
  std::vector<int> outputs_;
  bool ran_forward_ = false;
};

}  // namespace seglab
