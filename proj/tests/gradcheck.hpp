#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "hybridgan/network.hpp"

namespace hybridgan::testing {

/// Norm-wise relative error between analytic and central-difference
/// gradients over `samples` randomly chosen parameter coordinates.
inline double parameter_gradient_error(NetworkParameters<double>& net, const std::function<double()>& loss,
                                       const ParameterGrads<double>& analytic, std::mt19937_64& rng,
                                       int samples = 48, double h = 1e-6) {
  std::vector<std::pair<std::size_t, Index>> coords;
  const Index total = net.param_count();
  std::uniform_int_distribution<Index> pick(0, total - 1);
  for (int s = 0; s < samples; ++s) {
    Index flat = pick(rng);
    std::size_t w = 0;
    while (flat >= net.weights[w].values.size()) flat -= net.weights[w++].values.size();
    coords.emplace_back(w, flat);
  }
  double diff2 = 0, fd2 = 0, an2 = 0;
  for (const auto& [w, i] : coords) {
    double& p = net.weights[w].values[i];
    const double saved = p;
    p = saved + h;
    const double up = loss();
    p = saved - h;
    const double down = loss();
    p = saved;
    const double fd = (up - down) / (2 * h);
    const double an = analytic[w][i];
    diff2 += (fd - an) * (fd - an);
    fd2 += fd * fd;
    an2 += an * an;
  }
  const double scale = std::max(std::sqrt(std::max(fd2, an2)), 1e-12);
  return std::sqrt(diff2) / scale;
}

/// Same check for the gradient with respect to an input tensor.
inline double input_gradient_error(Tensor<double>& input, const std::function<double()>& loss,
                                   const Tensor<double>& analytic, std::mt19937_64& rng, int samples = 48,
                                   double h = 1e-6) {
  std::uniform_int_distribution<Index> pick(0, input.size() - 1);
  double diff2 = 0, fd2 = 0, an2 = 0;
  for (int s = 0; s < samples; ++s) {
    const Index i = pick(rng);
    double& p = input.values()[i];
    const double saved = p;
    p = saved + h;
    const double up = loss();
    p = saved - h;
    const double down = loss();
    p = saved;
    const double fd = (up - down) / (2 * h);
    const double an = analytic.values()[i];
    diff2 += (fd - an) * (fd - an);
    fd2 += fd * fd;
    an2 += an * an;
  }
  const double scale = std::max(std::sqrt(std::max(fd2, an2)), 1e-12);
  return std::sqrt(diff2) / scale;
}

inline Tensor<double> random_tensor(const Shape4& shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor<double> t(shape);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (Index i = 0; i < t.size(); ++i) t.values()[i] = u(rng);
  return t;
}

}  // namespace hybridgan::testing
