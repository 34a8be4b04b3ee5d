#ifndef COOLKWS_TESTS_GRADCHECK_HPP
#define COOLKWS_TESTS_GRADCHECK_HPP

// Central finite differences over every parameter of a double-precision
// model. A probe whose +-h perturbation flips a ReLU straddles a kink, so it
// is repeated with h shrunk tenfold until both sides keep the activation
// pattern; components still straddling at 1e-9 are counted as unresolved.

#include "coolkws/model.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gradcheck {

struct Report {
  double worst_relative = 0.0;
  std::size_t checked = 0;
  std::size_t refined = 0;     // checked with a step smaller than h
  std::size_t unresolved = 0;  // never off the kink
};

inline double loss_of(const coolkws::ModelParams<double>& p, const Eigen::MatrixXd& x, int target,
                      std::vector<bool>* mask) {
  const auto fwd = coolkws::forward(p, x);
  if (mask) {
    mask->clear();
    for (Eigen::Index i = 0; i < fwd.trace.conv_pre.size(); ++i) mask->push_back(fwd.trace.conv_pre.data()[i] > 0);
    for (Eigen::Index i = 0; i < fwd.trace.dense_pre.size(); ++i) mask->push_back(fwd.trace.dense_pre[i] > 0);
  }
  return -std::log(fwd.probs[target]);
}

/// Relative error |a - n| / max(|a|, |n|); two exact zeros agree.
inline Report check(const coolkws::ModelParams<double>& params, const Eigen::MatrixXd& x, int target,
                    double h = 1e-4) {
  const auto fwd = coolkws::forward(params, x);
  const auto analytic = coolkws::backward(params, fwd.trace, target, fwd.probs).grads;
  std::vector<bool> base_mask;
  loss_of(params, x, target, &base_mask);

  Report r;
  coolkws::ModelParams<double> probe = params;
  std::vector<double*> slots;
  std::vector<double> grads;
  probe.for_each([&](auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) slots.push_back(t.data() + i);
  });
  analytic.for_each([&](const auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) grads.push_back(t.data()[i]);
  });

  std::vector<bool> mask;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double saved = *slots[i];
    double step = h;
    double numeric = 0.0;
    bool smooth = false;
    for (; step >= 1e-9; step /= 10.0) {
      *slots[i] = saved + step;
      const double up = loss_of(probe, x, target, &mask);
      smooth = mask == base_mask;
      *slots[i] = saved - step;
      const double down = loss_of(probe, x, target, &mask);
      smooth = smooth && mask == base_mask;
      *slots[i] = saved;
      if (smooth) {
        numeric = (up - down) / (2.0 * step);
        break;
      }
    }
    if (!smooth) {
      ++r.unresolved;
      continue;
    }
    if (step < h) ++r.refined;
    const double denom = std::max(std::abs(grads[i]), std::abs(numeric));
    if (denom > 0.0) r.worst_relative = std::max(r.worst_relative, std::abs(grads[i] - numeric) / denom);
    ++r.checked;
  }
  return r;
}

}  // namespace gradcheck

#endif
