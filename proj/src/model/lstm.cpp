// Per-example forward pass and backpropagation through time.
//
// Recurrent cell (per step, gates packed [i, f, g, o]):
//   z = x W + h_prev U + b
//   i = σ(z_i)  f = σ(z_f)  g = relu(z_g)  o = σ(z_o)
//   c = f ⊙ c_prev + i ⊙ g
//   h = o ⊙ relu(c)

#include <algorithm>
#include <cmath>
#include <string>

#include "fedgest/error.hpp"
#include "fedgest/model.hpp"

namespace fedgest::model {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

struct LstmRef {
  const double* kernel;
  const double* recurrent;
  const double* bias;
  int in;
  int units;
};

struct LstmGrad {
  double* kernel;
  double* recurrent;
  double* bias;
};

LstmRef lstm_ref(const ModelParams& p, int layer) {
  const auto base = layer == 0 ? Tensor::lstm1_kernel : Tensor::lstm2_kernel;
  const auto k = p.tensor(base);
  const auto r = p.tensor(static_cast<Tensor>(static_cast<int>(base) + 1));
  const auto b = p.tensor(static_cast<Tensor>(static_cast<int>(base) + 2));
  const Slot& s = p.layout()[base];
  return {k.data(), r.data(), b.data(), s.rows, s.cols / 4};
}

LstmGrad lstm_grad(const ModelParams& p, std::span<double> g, int layer) {
  const auto base = layer == 0 ? Tensor::lstm1_kernel : Tensor::lstm2_kernel;
  const auto& l = p.layout();
  return {g.data() + l[base].offset,
          g.data() + l[static_cast<Tensor>(static_cast<int>(base) + 1)].offset,
          g.data() + l[static_cast<Tensor>(static_cast<int>(base) + 2)].offset};
}

void lstm_forward(const LstmRef& w, const double* input, int steps, LstmTrace& tr) {
  const int h = w.units;
  const int g4 = 4 * h;
  tr.steps = steps;
  tr.units = h;
  tr.gates.assign(static_cast<std::size_t>(steps) * g4, 0.0);
  tr.cell.assign(static_cast<std::size_t>(steps) * h, 0.0);
  tr.hidden.assign(static_cast<std::size_t>(steps) * h, 0.0);
  std::vector<double> z(g4);

  for (int t = 0; t < steps; ++t) {
    const double* x = input + static_cast<std::size_t>(t) * w.in;
    std::copy(w.bias, w.bias + g4, z.begin());
    for (int i = 0; i < w.in; ++i) {
      const double xi = x[i];
      const double* row = w.kernel + static_cast<std::size_t>(i) * g4;
      for (int j = 0; j < g4; ++j) z[j] += xi * row[j];
    }
    if (t > 0) {
      const double* hp = tr.hidden.data() + static_cast<std::size_t>(t - 1) * h;
      for (int k = 0; k < h; ++k) {
        const double hk = hp[k];
        const double* row = w.recurrent + static_cast<std::size_t>(k) * g4;
        for (int j = 0; j < g4; ++j) z[j] += hk * row[j];
      }
    }
    double* gates = tr.gates.data() + static_cast<std::size_t>(t) * g4;
    double* c = tr.cell.data() + static_cast<std::size_t>(t) * h;
    double* hid = tr.hidden.data() + static_cast<std::size_t>(t) * h;
    const double* cp = t > 0 ? c - h : nullptr;
    for (int u = 0; u < h; ++u) {
      const double ig = sigmoid(z[u]);
      const double fg = sigmoid(z[h + u]);
      const double gg = relu(z[2 * h + u]);
      const double og = sigmoid(z[3 * h + u]);
      gates[u] = ig;
      gates[h + u] = fg;
      gates[2 * h + u] = gg;
      gates[3 * h + u] = og;
      c[u] = (cp ? fg * cp[u] : 0.0) + ig * gg;
      hid[u] = og * relu(c[u]);
    }
  }
}

// dh_ext: gradient arriving at each step's hidden output (steps x H).
// dx (optional): gradient w.r.t. each step's input (steps x in).
void lstm_backward(const LstmRef& w, const LstmTrace& tr, const double* input,
                   const std::vector<double>& dh_ext, const LstmGrad& g,
                   std::vector<double>* dx) {
  const int h = w.units;
  const int g4 = 4 * h;
  std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0), dz(g4);
  if (dx) dx->assign(static_cast<std::size_t>(tr.steps) * w.in, 0.0);

  for (int t = tr.steps - 1; t >= 0; --t) {
    const double* gates = tr.gates.data() + static_cast<std::size_t>(t) * g4;
    const double* c = tr.cell.data() + static_cast<std::size_t>(t) * h;
    const double* cp = t > 0 ? c - h : nullptr;
    const double* ext = dh_ext.data() + static_cast<std::size_t>(t) * h;
    for (int u = 0; u < h; ++u) {
      const double ig = gates[u], fg = gates[h + u], gg = gates[2 * h + u],
                   og = gates[3 * h + u];
      const double dh = dh_next[u] + ext[u];
      const double dc = dc_next[u] + (c[u] > 0.0 ? dh * og : 0.0);
      dz[u] = dc * gg * ig * (1.0 - ig);
      dz[h + u] = cp ? dc * cp[u] * fg * (1.0 - fg) : 0.0;
      dz[2 * h + u] = gg > 0.0 ? dc * ig : 0.0;
      dz[3 * h + u] = dh * relu(c[u]) * og * (1.0 - og);
      dc_next[u] = dc * fg;
    }
    for (int j = 0; j < g4; ++j) g.bias[j] += dz[j];

    const double* x = input + static_cast<std::size_t>(t) * w.in;
    for (int i = 0; i < w.in; ++i) {
      const double xi = x[i];
      double* gk = g.kernel + static_cast<std::size_t>(i) * g4;
      for (int j = 0; j < g4; ++j) gk[j] += xi * dz[j];
      if (dx) {
        const double* row = w.kernel + static_cast<std::size_t>(i) * g4;
        double s = 0.0;
        for (int j = 0; j < g4; ++j) s += row[j] * dz[j];
        (*dx)[static_cast<std::size_t>(t) * w.in + i] = s;
      }
    }
    if (t > 0) {
      const double* hp = tr.hidden.data() + static_cast<std::size_t>(t - 1) * h;
      for (int k = 0; k < h; ++k) {
        const double hk = hp[k];
        double* gr = g.recurrent + static_cast<std::size_t>(k) * g4;
        const double* row = w.recurrent + static_cast<std::size_t>(k) * g4;
        double s = 0.0;
        for (int j = 0; j < g4; ++j) {
          gr[j] += hk * dz[j];
          s += row[j] * dz[j];
        }
        dh_next[k] = s;
      }
    }
  }
}

// out = in · W + b
void dense_forward(std::span<const double> kernel, std::span<const double> bias,
                   const double* in, int n_in, std::vector<double>& out) {
  const auto n_out = bias.size();
  out.assign(bias.begin(), bias.end());
  for (int i = 0; i < n_in; ++i) {
    const double v = in[i];
    const double* row = kernel.data() + static_cast<std::size_t>(i) * n_out;
    for (std::size_t o = 0; o < n_out; ++o) out[o] += v * row[o];
  }
}

// Accumulates kernel/bias gradients; returns d(in) when requested.
void dense_backward(std::span<const double> kernel, const double* in, int n_in,
                    const std::vector<double>& dout, double* gkernel, double* gbias,
                    std::vector<double>* din) {
  const auto n_out = dout.size();
  for (std::size_t o = 0; o < n_out; ++o) gbias[o] += dout[o];
  if (din) din->assign(static_cast<std::size_t>(n_in), 0.0);
  for (int i = 0; i < n_in; ++i) {
    const double v = in[i];
    double* gk = gkernel + static_cast<std::size_t>(i) * n_out;
    const double* row = kernel.data() + static_cast<std::size_t>(i) * n_out;
    double s = 0.0;
    for (std::size_t o = 0; o < n_out; ++o) {
      gk[o] += v * dout[o];
      s += row[o] * dout[o];
    }
    if (din) (*din)[i] = s;
  }
}

void softmax(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (auto& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (auto& x : v) x /= sum;
}

}  // namespace

void check_input(const ModelConfig& cfg, std::span<const float> clip) {
  const auto expected = static_cast<std::size_t>(cfg.window) * cfg.input_width;
  if (clip.size() != expected) {
    throw Error(Errc::dimension, "model expects a " + std::to_string(cfg.window) +
                                     " x " + std::to_string(cfg.input_width) +
                                     " input, got " + std::to_string(clip.size()) +
                                     " values");
  }
  for (float v : clip) {
    if (!std::isfinite(v)) throw Error(Errc::domain, "non-finite model input");
  }
}

ForwardResult forward(const ModelParams& params, std::span<const float> clip,
                      Mode mode, Rng* rng) {
  const ModelConfig& cfg = params.config();
  check_input(cfg, clip);
  if (mode == Mode::train && !rng) {
    throw Error(Errc::domain, "train-mode forward needs a dropout rng");
  }

  ForwardTrace tr;
  tr.input.assign(clip.begin(), clip.end());
  lstm_forward(lstm_ref(params, 0), tr.input.data(), cfg.window, tr.lstm1);
  lstm_forward(lstm_ref(params, 1), tr.lstm1.hidden.data(), cfg.window, tr.lstm2);
  const double* last = tr.lstm2.hidden.data() +
                       static_cast<std::size_t>(cfg.window - 1) * cfg.lstm2_units;

  dense_forward(params.tensor(Tensor::dense1_kernel), params.tensor(Tensor::dense1_bias),
                last, cfg.lstm2_units, tr.dense1);
  for (auto& v : tr.dense1) v = relu(v);

  tr.mask.assign(tr.dense1.size(), 1.0);
  if (mode == Mode::train) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - cfg.dropout_rate);
    for (auto& m : tr.mask) m = u(*rng) < cfg.dropout_rate ? 0.0 : keep_scale;
  }
  tr.dropped.resize(tr.dense1.size());
  for (std::size_t i = 0; i < tr.dense1.size(); ++i) tr.dropped[i] = tr.dense1[i] * tr.mask[i];

  dense_forward(params.tensor(Tensor::dense2_kernel), params.tensor(Tensor::dense2_bias),
                tr.dropped.data(), cfg.dense1_units, tr.dense2);
  for (auto& v : tr.dense2) v = relu(v);

  std::vector<double> logits;
  dense_forward(params.tensor(Tensor::dense3_kernel), params.tensor(Tensor::dense3_bias),
                tr.dense2.data(), cfg.dense2_units, logits);
  softmax(logits);
  tr.probabilities = logits;

  ForwardResult res;
  res.probabilities = std::move(logits);
  if (mode == Mode::train) res.trace = std::move(tr);
  return res;
}

std::vector<double> predict(const ModelParams& params, std::span<const float> clip) {
  return forward(params, clip, Mode::infer).probabilities;
}

double loss(std::span<const double> probabilities, int label) {
  return -std::log(std::max(probabilities[static_cast<std::size_t>(label)],
                            kProbabilityFloor));
}

ExampleOutcome accumulate_example_gradient(const ModelParams& params, const Example& ex,
                                           Rng& rng, std::span<double> grad_out) {
  const ModelConfig& cfg = params.config();
  if (ex.label < 0 || ex.label >= cfg.classes) {
    throw Error(Errc::domain, "label " + std::to_string(ex.label) + " outside [0, " +
                                  std::to_string(cfg.classes) + ")");
  }
  if (grad_out.size() != params.size()) {
    throw Error(Errc::dimension, "gradient buffer does not match the model");
  }
  const ForwardResult fwd = forward(params, ex.input, Mode::train, &rng);
  const ForwardTrace& tr = *fwd.trace;
  const auto& p = tr.probabilities;
  const double l = loss(p, ex.label);

  std::vector<double> dlogits(p);
  dlogits[static_cast<std::size_t>(ex.label)] -= 1.0;
  // The floor only guards the reported loss value. Differentiating through it
  // would zero the gradient of a saturated wrong prediction and freeze the
  // network, so the unclamped softmax cross-entropy gradient is used.

  const auto& lay = params.layout();
  auto at = [&](Tensor t) { return grad_out.data() + lay[t].offset; };

  std::vector<double> d2, d1, dlast;
  dense_backward(params.tensor(Tensor::dense3_kernel), tr.dense2.data(), cfg.dense2_units,
                 dlogits, at(Tensor::dense3_kernel), at(Tensor::dense3_bias), &d2);
  for (std::size_t i = 0; i < d2.size(); ++i) {
    if (!(tr.dense2[i] > 0.0)) d2[i] = 0.0;
  }
  dense_backward(params.tensor(Tensor::dense2_kernel), tr.dropped.data(), cfg.dense1_units,
                 d2, at(Tensor::dense2_kernel), at(Tensor::dense2_bias), &d1);
  for (std::size_t i = 0; i < d1.size(); ++i) {
    d1[i] = tr.dense1[i] > 0.0 ? d1[i] * tr.mask[i] : 0.0;
  }
  const double* last = tr.lstm2.hidden.data() +
                       static_cast<std::size_t>(cfg.window - 1) * cfg.lstm2_units;
  dense_backward(params.tensor(Tensor::dense1_kernel), last, cfg.lstm2_units, d1,
                 at(Tensor::dense1_kernel), at(Tensor::dense1_bias), &dlast);

  std::vector<double> dh2(static_cast<std::size_t>(cfg.window) * cfg.lstm2_units, 0.0);
  std::copy(dlast.begin(), dlast.end(),
            dh2.begin() + static_cast<std::ptrdiff_t>(cfg.window - 1) * cfg.lstm2_units);
  std::vector<double> dh1;
  lstm_backward(lstm_ref(params, 1), tr.lstm2, tr.lstm1.hidden.data(), dh2,
                lstm_grad(params, grad_out, 1), &dh1);
  lstm_backward(lstm_ref(params, 0), tr.lstm1, tr.input.data(), dh1,
                lstm_grad(params, grad_out, 0), nullptr);
  const auto best = std::max_element(p.begin(), p.end()) - p.begin();
  return {l, static_cast<int>(best)};
}

}  // namespace fedgest::model
