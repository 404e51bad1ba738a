#include "tscm/ploss.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "tscm/rng.hpp"

namespace tscm {

PLossContext::PLossContext(FrequencyVector pi, PopulationTable populations)
    : pi_(std::move(pi)), populations_(std::move(populations)) {
  validate(pi_);
  validate(populations_);
  K_ = pi_.K();
  if (populations_.K() != K_) {
    throw validation_error("population table K does not match frequency vector");
  }
  weights_.assign(K_, std::vector<double>(K_, 1.0));
  log_weights_.assign(K_, std::vector<double>(K_, 0.0));
  for (int y = 0; y < K_; ++y) {
    for (int member : populations_.populations[y]) {
      const double w = pi_.pi[member] / pi_.pi[y];
      weights_[y][member] = w;
      log_weights_[y][member] = std::log(w);
    }
  }
}

PLossContext PLossContext::uniform(int K) {
  if (K < 2) throw validation_error("K must be >= 2");
  PLossContext ctx;
  ctx.K_ = K;
  ctx.pi_.pi.assign(K, 1.0 / K);
  ctx.populations_.alpha = 1;
  ctx.populations_.populations.assign(K, {});
  ctx.weights_.assign(K, std::vector<double>(K, 1.0));
  ctx.log_weights_.assign(K, std::vector<double>(K, 0.0));
  return ctx;
}

namespace {

void check_inputs(const PLossContext& ctx, int y, std::span<const double> logits) {
  if (y < 0 || y >= ctx.K()) throw validation_error("label out of range");
  if (static_cast<int>(logits.size()) != ctx.K()) {
    throw validation_error("logit arity mismatch");
  }
  for (double f : logits) {
    if (!std::isfinite(f)) throw validation_error("non-finite logit");
  }
}

// Shifted logits t_{y'} = f_{y'} + ln w[y][y'] (t_y = f_y since w[y][y] = 1).
// Both the loss and its gradient are functions of softmax(t).
std::vector<double> shifted_logits(const PLossContext& ctx, int y,
                                   std::span<const double> logits) {
  std::vector<double> t(logits.begin(), logits.end());
  for (int c = 0; c < ctx.K(); ++c) {
    if (c != y) t[c] += ctx.log_weight(y, c);
  }
  return t;
}

}  // namespace

double p_loss(const PLossContext& ctx, int y, std::span<const double> logits) {
  check_inputs(ctx, y, logits);
  const std::vector<double> t = shifted_logits(ctx, y, logits);
  const double m = *std::max_element(t.begin(), t.end());
  double sum = 0.0;
  for (double v : t) sum += std::exp(v - m);
  // log-sum-exp(t) - f_y
  const double loss = m + std::log(sum) - logits[y];
  return std::max(loss, 0.0);
}

std::vector<double> p_loss_gradient(const PLossContext& ctx, int y,
                                    std::span<const double> logits) {
  check_inputs(ctx, y, logits);
  const std::vector<double> t = shifted_logits(ctx, y, logits);
  const double m = *std::max_element(t.begin(), t.end());
  double sum = 0.0;
  std::vector<double> grad(t.size());
  for (std::size_t c = 0; c < t.size(); ++c) {
    grad[c] = std::exp(t[c] - m);
    sum += grad[c];
  }
  for (double& g : grad) g /= sum;
  grad[y] -= 1.0;
  return grad;
}

std::vector<double> LinearModel::logits(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != d()) throw validation_error("feature arity mismatch");
  std::vector<double> f(bias);
  for (int k = 0; k < K(); ++k) {
    double acc = 0.0;
    const std::vector<double>& row = weights[k];
    for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * x[i];
    f[k] += acc;
  }
  return f;
}

TrainResult train_linear(const FeatureSet& data, const PLossContext& ctx,
                         const TrainConfig& config) {
  validate(data);
  if (data.n() < 1) throw validation_error("training set is empty");
  if (config.lr <= 0.0 || config.batch < 1 || config.epochs < 0 || config.l2 < 0.0) {
    throw validation_error("train config values must be positive");
  }
  for (int label : data.labels) {
    if (label >= ctx.K()) throw validation_error("label out of range for context K");
  }

  const int K = ctx.K();
  const int d = data.d;
  const int n = data.n();

  TrainResult result;
  result.model.weights.assign(K, std::vector<double>(d, 0.0));
  result.model.bias.assign(K, 0.0);

  std::vector<std::size_t> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(config.seed);

  std::vector<std::vector<double>> grad_w(K, std::vector<double>(d, 0.0));
  std::vector<double> grad_b(K, 0.0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += config.batch) {
      const int end = std::min(start + config.batch, n);
      const int bsz = end - start;
      for (auto& row : grad_w) std::fill(row.begin(), row.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);

      for (int b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const std::vector<double>& x = data.x[i];
        const int y = data.labels[i];
        const std::vector<double> f = result.model.logits(x);
        epoch_loss += p_loss(ctx, y, f);
        const std::vector<double> g = p_loss_gradient(ctx, y, f);
        for (int k = 0; k < K; ++k) {
          const double gk = g[k];
          if (gk == 0.0) continue;
          grad_b[k] += gk;
          std::vector<double>& row = grad_w[k];
          for (int j = 0; j < d; ++j) row[j] += gk * x[j];
        }
      }

      const double scale = config.lr / static_cast<double>(bsz);
      for (int k = 0; k < K; ++k) {
        std::vector<double>& w = result.model.weights[k];
        for (int j = 0; j < d; ++j) {
          w[j] -= scale * grad_w[k][j] + config.lr * config.l2 * w[j];
        }
        result.model.bias[k] -= scale * grad_b[k];
      }
    }
    const double mean_loss = epoch_loss / static_cast<double>(n);
    if (!std::isfinite(mean_loss)) {
      throw validation_error("non-finite loss at epoch " + std::to_string(epoch));
    }
    result.epoch_mean_loss.push_back(mean_loss);
  }
  return result;
}

TrainConfig train_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("train config: parse error: ") + e.what());
  }
  TrainConfig c;
  c.lr = j.value("lr", c.lr);
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.seed = j.value("seed", c.seed);
  c.l2 = j.value("l2", c.l2);
  return c;
}

LinearModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw validation_error(path + ": empty model file");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(path + ":1: parse error: " + e.what());
  }
  if (h.value("format", "") != "tscm-model" || h.value("version", 0) != 1) {
    throw validation_error(path + ":1: expected tscm-model header");
  }
  const int K = h.at("K").get<int>();
  const int d = h.at("d").get<int>();
  LinearModel model;
  model.weights.assign(K, std::vector<double>(d, 0.0));
  model.bias.assign(K, 0.0);
  std::size_t lineno = 1;
  std::vector<bool> seen(K, false);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": parse error: " + e.what());
    }
    const int k = j.at("class").get<int>();
    if (k < 0 || k >= K) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": class out of range");
    }
    seen[k] = true;
    auto w = j.at("w").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != d) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": weight arity mismatch");
    }
    model.weights[k] = std::move(w);
    model.bias[k] = j.at("b").get<double>();
  }
  for (int k = 0; k < K; ++k) {
    if (!seen[k]) throw validation_error(path + ": missing row for class " + std::to_string(k));
  }
  return model;
}

void save_model(const LinearModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  nlohmann::ordered_json h;
  h["format"] = "tscm-model";
  h["version"] = 1;
  h["K"] = model.K();
  h["d"] = model.d();
  out << h.dump() << '\n';
  for (int k = 0; k < model.K(); ++k) {
    nlohmann::ordered_json j;
    j["class"] = k;
    j["w"] = model.weights[k];
    j["b"] = model.bias[k];
    out << j.dump() << '\n';
  }
  if (!out.flush()) throw io_error("write failed for '" + path + "'");
}

}  // namespace tscm
