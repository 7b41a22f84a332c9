#pragma once
#include <random>
#include <string>
#include <vector>

namespace eecsim {

// Fully-connected net, ReLU hidden layers, identity output. Weights are
// row-major (out x in) per layer. Self-contained on purpose: the training
// stack must not pull in an autodiff framework.
struct NetworkParams {
  std::vector<int> sizes;
  std::vector<std::vector<double>> W;
  std::vector<std::vector<double>> b;

  static NetworkParams zeros(const std::vector<int>& sizes);
  // Kaiming-uniform hidden layers; the output layer starts at zero so an
  // untrained net scores every action identically.
  static NetworkParams init(const std::vector<int>& sizes, std::mt19937_64& rng);

  size_t layers() const { return W.size(); }
  void save(const std::string& path) const;
  static NetworkParams load(const std::string& path);
};

std::vector<double> forward(const NetworkParams& net, const std::vector<double>& x);

struct Gradients {
  std::vector<std::vector<double>> W;
  std::vector<std::vector<double>> b;

  static Gradients like(const NetworkParams& net);
  void zero();
};

// Weighted squared-error loss over a batch:
//   L = (1/B) * sum_i w_i * ||y_i - t_i||^2
// Returns L and writes dL/dtheta into `out` (overwritten, not accumulated).
double backward_batch(const NetworkParams& net, const std::vector<std::vector<double>>& xs,
                      const std::vector<std::vector<double>>& targets,
                      const std::vector<double>& weights, Gradients& out);

struct AdamState {
  double lr{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
  long t{0};
  std::vector<std::vector<double>> mW, vW, mb, vb;

  static AdamState like(const NetworkParams& net, double lr);
};

// Bias-corrected update: theta -= lr * mhat / sqrt(vhat + eps).
// Throws on non-finite gradients; training must halt rather than corrupt.
void adam_update(NetworkParams& net, const Gradients& g, AdamState& state);

}  // namespace eecsim
