#include "eecsim/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "eecsim/rng.hpp"

namespace eecsim {

static void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("net needs at least input and output sizes");
  for (int s : sizes)
    if (s <= 0) throw std::invalid_argument("net layer sizes must be positive");
}

NetworkParams NetworkParams::zeros(const std::vector<int>& sizes) {
  check_sizes(sizes);
  NetworkParams net;
  net.sizes = sizes;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    net.W.emplace_back(static_cast<size_t>(sizes[l + 1]) * sizes[l], 0.0);
    net.b.emplace_back(static_cast<size_t>(sizes[l + 1]), 0.0);
  }
  return net;
}

NetworkParams NetworkParams::init(const std::vector<int>& sizes, std::mt19937_64& rng) {
  NetworkParams net = zeros(sizes);
  for (size_t l = 0; l + 1 < net.W.size(); ++l) {  // final layer stays zero
    const double limit = std::sqrt(6.0 / sizes[l]);
    for (double& w : net.W[l]) w = (2.0 * rand_unit(rng) - 1.0) * limit;
  }
  return net;
}

void NetworkParams::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write parameters: " + path);
  out << std::setprecision(17);
  for (size_t i = 0; i < sizes.size(); ++i) out << (i ? " " : "") << sizes[i];
  out << "\n";
  for (size_t l = 0; l < W.size(); ++l) {
    for (size_t i = 0; i < W[l].size(); ++i) out << (i ? " " : "") << W[l][i];
    out << "\n";
    for (size_t i = 0; i < b[l].size(); ++i) out << (i ? " " : "") << b[l][i];
    out << "\n";
  }
}

NetworkParams NetworkParams::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read parameters: " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("parameter file empty: " + path);
  std::vector<int> sizes;
  {
    std::istringstream hs(header);
    int s;
    while (hs >> s) sizes.push_back(s);
  }
  NetworkParams net = zeros(sizes);
  for (size_t l = 0; l < net.W.size(); ++l) {
    for (double& w : net.W[l])
      if (!(in >> w)) throw std::runtime_error("parameter file truncated: " + path);
    for (double& v : net.b[l])
      if (!(in >> v)) throw std::runtime_error("parameter file truncated: " + path);
  }
  return net;
}

std::vector<double> forward(const NetworkParams& net, const std::vector<double>& x) {
  if (x.size() != static_cast<size_t>(net.sizes.front()))
    throw std::invalid_argument("forward: input size mismatch");
  std::vector<double> cur = x, next;
  for (size_t l = 0; l < net.layers(); ++l) {
    const int in = net.sizes[l], out = net.sizes[l + 1];
    next.assign(static_cast<size_t>(out), 0.0);
    const double* w = net.W[l].data();
    for (int o = 0; o < out; ++o) {
      double acc = net.b[l][static_cast<size_t>(o)];
      const double* row = w + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * cur[static_cast<size_t>(i)];
      next[static_cast<size_t>(o)] = acc;
    }
    if (l + 1 < net.layers())
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    cur.swap(next);
  }
  return cur;
}

Gradients Gradients::like(const NetworkParams& net) {
  Gradients g;
  for (size_t l = 0; l < net.layers(); ++l) {
    g.W.emplace_back(net.W[l].size(), 0.0);
    g.b.emplace_back(net.b[l].size(), 0.0);
  }
  return g;
}

void Gradients::zero() {
  for (auto& layer : W) std::fill(layer.begin(), layer.end(), 0.0);
  for (auto& layer : b) std::fill(layer.begin(), layer.end(), 0.0);
}

double backward_batch(const NetworkParams& net, const std::vector<std::vector<double>>& xs,
                      const std::vector<std::vector<double>>& targets,
                      const std::vector<double>& weights, Gradients& out) {
  const size_t batch = xs.size();
  if (batch == 0) throw std::invalid_argument("backward_batch: empty batch");
  if (targets.size() != batch || weights.size() != batch)
    throw std::invalid_argument("backward_batch: batch size mismatch");
  if (out.W.size() != net.layers()) throw std::invalid_argument("backward_batch: gradient shape");

  out.zero();
  const size_t L = net.layers();
  std::vector<std::vector<double>> acts(L + 1);   // acts[0] = x, acts[L] = y
  std::vector<std::vector<double>> delta(L + 1);  // dL/d(pre-activation), reused

  double loss = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (size_t s = 0; s < batch; ++s) {
    const auto& x = xs[s];
    if (x.size() != static_cast<size_t>(net.sizes.front()))
      throw std::invalid_argument("backward_batch: input size mismatch");
    if (targets[s].size() != static_cast<size_t>(net.sizes.back()))
      throw std::invalid_argument("backward_batch: target size mismatch");

    acts[0] = x;
    for (size_t l = 0; l < L; ++l) {
      const int in = net.sizes[l], outn = net.sizes[l + 1];
      acts[l + 1].assign(static_cast<size_t>(outn), 0.0);
      const double* w = net.W[l].data();
      for (int o = 0; o < outn; ++o) {
        double acc = net.b[l][static_cast<size_t>(o)];
        const double* row = w + static_cast<size_t>(o) * in;
        for (int i = 0; i < in; ++i) acc += row[i] * acts[l][static_cast<size_t>(i)];
        acts[l + 1][static_cast<size_t>(o)] = acc;
      }
      if (l + 1 < L)
        for (double& v : acts[l + 1]) v = v > 0.0 ? v : 0.0;
    }

    const double w_s = weights[s];
    delta[L].assign(acts[L].size(), 0.0);
    for (size_t j = 0; j < acts[L].size(); ++j) {
      const double diff = acts[L][j] - targets[s][j];
      loss += w_s * diff * diff * inv_batch;
      delta[L][j] = 2.0 * w_s * diff * inv_batch;
    }

    for (size_t l = L; l-- > 0;) {
      const int in = net.sizes[l], outn = net.sizes[l + 1];
      double* gw = out.W[l].data();
      for (int o = 0; o < outn; ++o) {
        const double d = delta[l + 1][static_cast<size_t>(o)];
        out.b[l][static_cast<size_t>(o)] += d;
        double* row = gw + static_cast<size_t>(o) * in;
        for (int i = 0; i < in; ++i) row[i] += d * acts[l][static_cast<size_t>(i)];
      }
      if (l == 0) break;
      delta[l].assign(static_cast<size_t>(in), 0.0);
      const double* w = net.W[l].data();
      for (int o = 0; o < outn; ++o) {
        const double d = delta[l + 1][static_cast<size_t>(o)];
        const double* row = w + static_cast<size_t>(o) * in;
        for (int i = 0; i < in; ++i) delta[l][static_cast<size_t>(i)] += d * row[i];
      }
      // ReLU mask of the forward pass.
      for (int i = 0; i < in; ++i)
        if (acts[l][static_cast<size_t>(i)] <= 0.0) delta[l][static_cast<size_t>(i)] = 0.0;
    }
  }
  return loss;
}

AdamState AdamState::like(const NetworkParams& net, double lr) {
  AdamState s;
  s.lr = lr;
  for (size_t l = 0; l < net.layers(); ++l) {
    s.mW.emplace_back(net.W[l].size(), 0.0);
    s.vW.emplace_back(net.W[l].size(), 0.0);
    s.mb.emplace_back(net.b[l].size(), 0.0);
    s.vb.emplace_back(net.b[l].size(), 0.0);
  }
  return s;
}

void adam_update(NetworkParams& net, const Gradients& g, AdamState& state) {
  if (g.W.size() != net.layers()) throw std::invalid_argument("adam_update: gradient shape");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  auto apply = [&](std::vector<double>& theta, const std::vector<double>& grad,
                   std::vector<double>& m, std::vector<double>& v) {
    if (grad.size() != theta.size()) throw std::invalid_argument("adam_update: gradient shape");
    for (size_t i = 0; i < theta.size(); ++i) {
      const double gi = grad[i];
      if (!std::isfinite(gi)) throw std::runtime_error("adam_update: non-finite gradient");
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      theta[i] -= state.lr * mhat / std::sqrt(vhat + state.eps);
    }
  };
  for (size_t l = 0; l < net.layers(); ++l) {
    apply(net.W[l], g.W[l], state.mW[l], state.vW[l]);
    apply(net.b[l], g.b[l], state.mb[l], state.vb[l]);
  }
}

}  // namespace eecsim
