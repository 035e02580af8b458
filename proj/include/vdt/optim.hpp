#pragma once

#include "vdt/tensor.hpp"

namespace vdt {

struct AdamOptions {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adaptive moment estimation with bias correction. Updates run in parameter
// order, so steps are deterministic.
class Adam {
  public:
    Adam(std::vector<Tensor> params, AdamOptions opts = {});

    void zero_grad();
    void step();  // skips parameters without a populated gradient

    const AdamOptions& options() const { return opts_; }

  private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    AdamOptions opts_;
    int64_t t_ = 0;
};

}  // namespace vdt
