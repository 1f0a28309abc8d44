#pragma once

#include <memory>
#include <string>
#include <vector>

#include "jcapt/diff/params.hpp"

namespace jcapt::training {

using diff::GradientSet;
using diff::ParamStore;

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ParamStore& store, const GradientSet& grads) = 0;
  virtual void set_lr(double lr) = 0;
};

class Sgd : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(ParamStore& store, const GradientSet& grads) override;
  void set_lr(double lr) override { lr_ = lr; }

 private:
  double lr_;
};

// Bias-corrected Adam.
class Adam : public Optimizer {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ParamStore& store, const GradientSet& grads) override;
  void set_lr(double lr) override { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long steps_ = 0;
  std::vector<diff::Tensor> m_, v_;
};

enum class OptimizerKind { adam, sgd };
OptimizerKind parse_optimizer(const std::string& name);
std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double lr);

}  // namespace jcapt::training
