#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "hybridflow/autodiff.hpp"
#include "hybridflow/dataset.hpp"

namespace hybridflow::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = dist(rng);
  return t;
}

/// |a - n| / max(|a|, |n|, floor). Below the floor the comparison is absolute.
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Worst relative error between the gradient written into each parameter by
/// `run` and central finite differences of the loss it returns. `run` builds a
/// fresh graph, binds the parameters, and returns the scalar loss value after
/// calling backward.
inline double max_param_gradient_error(const std::vector<ad::Parameter*>& params,
                                       const std::function<double()>& run, double step = 1e-5,
                                       std::size_t max_entries_per_param = 0) {
  run();
  std::vector<Tensor> analytic;
  for (const auto* p : params) analytic.push_back(p->grad);
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    ad::Parameter& p = *params[k];
    const std::size_t n = p.value.size();
    const std::size_t stride =
        max_entries_per_param && n > max_entries_per_param ? n / max_entries_per_param : 1;
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = p.value[i];
      p.value[i] = saved + step;
      const double up = run();
      p.value[i] = saved - step;
      const double down = run();
      p.value[i] = saved;
      worst = std::max(worst, relative_error(analytic[k][i], (up - down) / (2.0 * step)));
    }
  }
  run();
  return worst;
}

/// Same check for graph inputs: `f` maps leaf Vars to a scalar Var.
inline double max_input_gradient_error(
    std::vector<Tensor> inputs,
    const std::function<ad::Var(ad::Graph&, const std::vector<ad::Var>&)>& f,
    double step = 1e-5) {
  auto eval = [&](bool want_grad, std::vector<Tensor>* grads) {
    ad::Graph g;
    std::vector<ad::Var> vars;
    for (const auto& t : inputs) vars.push_back(g.variable(t));
    ad::Var loss = f(g, vars);
    if (want_grad) {
      g.backward(loss);
      for (auto& v : vars) {
        Tensor grad(v.shape());
        std::copy(v.grad().begin(), v.grad().end(), grad.storage().begin());
        grads->push_back(grad);
      }
    }
    return loss.value()[0];
  };
  std::vector<Tensor> analytic;
  eval(true, &analytic);
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k][i];
      inputs[k][i] = saved + step;
      const double up = eval(false, nullptr);
      inputs[k][i] = saved - step;
      const double down = eval(false, nullptr);
      inputs[k][i] = saved;
      worst = std::max(worst, relative_error(analytic[k][i], (up - down) / (2.0 * step)));
    }
  }
  return worst;
}

/// Dataset with the given values; NaN entries become missing.
inline data::FlowDataset make_dataset(std::size_t p, std::size_t days,
                                      const std::function<double(std::size_t, std::size_t)>& value) {
  data::FlowDataset ds;
  for (std::size_t s = 0; s < p; ++s) ds.stations.push_back({std::to_string(1000 + s), "ML"});
  ds.start_date = std::chrono::sys_days{std::chrono::year{2019} / std::chrono::January / 7};
  const std::size_t T = days * data::kPointsPerDay;
  ds.flows = Tensor({p, T});
  ds.mask.assign(p * T, 1);
  for (std::size_t s = 0; s < p; ++s) {
    for (std::size_t t = 0; t < T; ++t) {
      const double v = value(s, t);
      if (std::isnan(v)) {
        ds.set_missing(s, t);
      } else {
        ds.flows.at(s, t) = v;
      }
    }
  }
  return ds;
}

}  // namespace hybridflow::testing
