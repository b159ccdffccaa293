#include "ebu/approximator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ebu/error.hpp"

namespace ebu {

std::string to_string(ApproximatorKind kind) {
  switch (kind) {
    case ApproximatorKind::kTabular: return "tabular";
    case ApproximatorKind::kLinear: return "linear";
    case ApproximatorKind::kDense: return "dense";
  }
  return "unknown";
}

ApproximatorKind parse_approximator_kind(const std::string& name) {
  if (name == "tabular") return ApproximatorKind::kTabular;
  if (name == "linear") return ApproximatorKind::kLinear;
  if (name == "dense") return ApproximatorKind::kDense;
  throw InvalidArgument("unknown approximator kind '" + name + "'");
}

std::size_t QFunctionShape::parameter_count() const {
  if (layers.size() < 2) throw InvalidArgument("QFunctionShape: need at least input and output sizes");
  switch (kind) {
    case ApproximatorKind::kTabular:
    case ApproximatorKind::kLinear:
      if (layers.size() != 2) throw InvalidArgument("QFunctionShape: tabular/linear take exactly two sizes");
      return layers[0] * layers[1];
    case ApproximatorKind::kDense: {
      std::size_t n = 0;
      for (std::size_t l = 0; l + 1 < layers.size(); ++l) n += layers[l + 1] * layers[l] + layers[l + 1];
      return n;
    }
  }
  return 0;
}

QFunction::QFunction(QFunctionShape shape) : shape_(std::move(shape)), params_(shape_.parameter_count(), 0.0) {
  for (auto n : shape_.layers)
    if (n == 0) throw InvalidArgument("QFunction: zero-sized layer");
}

QFunction::QFunction(QFunctionShape shape, Rng& rng) : QFunction(std::move(shape)) {
  if (shape_.kind != ApproximatorKind::kDense) return;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < shape_.layers.size(); ++l) {
    std::size_t in = shape_.layers[l], out = shape_.layers[l + 1];
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < in * out; ++i) params_[offset + i] = u(rng);
    offset += in * out + out;  // biases stay zero
  }
}

QFunction QFunction::tabular(std::size_t num_states, std::size_t num_actions) {
  return QFunction({ApproximatorKind::kTabular, {num_states, num_actions}});
}

QFunction QFunction::linear(std::size_t num_features, std::size_t num_actions) {
  return QFunction({ApproximatorKind::kLinear, {num_features, num_actions}});
}

QFunction QFunction::dense(std::size_t num_features, std::vector<std::size_t> hidden, std::size_t num_actions,
                           Rng& rng) {
  QFunctionShape shape{ApproximatorKind::kDense, {num_features}};
  shape.layers.insert(shape.layers.end(), hidden.begin(), hidden.end());
  shape.layers.push_back(num_actions);
  return QFunction(std::move(shape), rng);
}

void QFunction::check(const Observation& obs) const {
  if (shape_.kind == ApproximatorKind::kTabular) {
    if (obs.state >= shape_.num_inputs()) throw InvalidArgument("QFunction: state outside table");
  } else if (obs.features.size() != shape_.num_inputs()) {
    std::ostringstream msg;
    msg << "QFunction: expected " << shape_.num_inputs() << " features, got " << obs.features.size();
    throw InvalidArgument(msg.str());
  }
}

std::vector<std::vector<double>> QFunction::forward(const std::vector<double>& input) const {
  std::vector<std::vector<double>> acts{input};
  std::size_t offset = 0;
  const std::size_t num_layers = shape_.layers.size() - 1;
  for (std::size_t l = 0; l < num_layers; ++l) {
    std::size_t in = shape_.layers[l], out = shape_.layers[l + 1];
    const double* w = params_.data() + offset;
    const double* b = w + in * out;
    const auto& x = acts.back();
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double sum = b[o];
      for (std::size_t i = 0; i < in; ++i) sum += w[o * in + i] * x[i];
      z[o] = (l + 1 < num_layers) ? std::max(0.0, sum) : sum;
    }
    acts.push_back(std::move(z));
    offset += in * out + out;
  }
  return acts;
}

std::vector<double> QFunction::predict(const Observation& obs) const {
  check(obs);
  const std::size_t A = shape_.num_actions();
  switch (shape_.kind) {
    case ApproximatorKind::kTabular: {
      auto first = params_.begin() + static_cast<std::ptrdiff_t>(obs.state * A);
      return {first, first + static_cast<std::ptrdiff_t>(A)};
    }
    case ApproximatorKind::kLinear: {
      const std::size_t F = shape_.num_inputs();
      std::vector<double> out(A, 0.0);
      for (std::size_t a = 0; a < A; ++a)
        for (std::size_t f = 0; f < F; ++f) out[a] += params_[a * F + f] * obs.features[f];
      return out;
    }
    case ApproximatorKind::kDense: return forward(obs.features).back();
  }
  return {};
}

std::vector<double> QFunction::gradient(const Observation& obs, ActionId action) const {
  check(obs);
  if (action >= shape_.num_actions()) throw InvalidArgument("QFunction: action out of range");
  std::vector<double> grad(params_.size(), 0.0);
  const std::size_t A = shape_.num_actions();
  switch (shape_.kind) {
    case ApproximatorKind::kTabular: grad[obs.state * A + action] = 1.0; break;
    case ApproximatorKind::kLinear: {
      const std::size_t F = shape_.num_inputs();
      std::copy(obs.features.begin(), obs.features.end(), grad.begin() + static_cast<std::ptrdiff_t>(action * F));
      break;
    }
    case ApproximatorKind::kDense: {
      auto acts = forward(obs.features);
      const std::size_t num_layers = shape_.layers.size() - 1;
      std::vector<std::size_t> offsets(num_layers);
      for (std::size_t l = 0, off = 0; l < num_layers; ++l) {
        offsets[l] = off;
        off += shape_.layers[l] * shape_.layers[l + 1] + shape_.layers[l + 1];
      }
      // delta holds dQ_action / d(pre-activation) of the current layer.
      std::vector<double> delta(A, 0.0);
      delta[action] = 1.0;
      for (std::size_t l = num_layers; l-- > 0;) {
        std::size_t in = shape_.layers[l], out = shape_.layers[l + 1];
        const auto& x = acts[l];
        double* gw = grad.data() + offsets[l];
        double* gb = gw + in * out;
        const double* w = params_.data() + offsets[l];
        for (std::size_t o = 0; o < out; ++o) {
          if (delta[o] == 0.0) continue;
          gb[o] = delta[o];
          for (std::size_t i = 0; i < in; ++i) gw[o * in + i] = delta[o] * x[i];
        }
        if (l == 0) break;
        std::vector<double> prev(in, 0.0);
        for (std::size_t i = 0; i < in; ++i) {
          if (x[i] <= 0.0) continue;  // rectifier was inactive
          double sum = 0.0;
          for (std::size_t o = 0; o < out; ++o) sum += w[o * in + i] * delta[o];
          prev[i] = sum;
        }
        delta = std::move(prev);
      }
      break;
    }
  }
  return grad;
}

double QFunction::loss(std::span<const Sample> batch) const {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : batch) {
    double err = s.target - predict(*s.observation).at(s.action);
    total += err * err;
  }
  return 0.5 * total / static_cast<double>(batch.size());
}

double QFunction::grad_step(std::span<const Sample> batch, double lr) {
  if (batch.empty()) throw InvalidArgument("grad_step: empty batch");
  const double scale = lr / static_cast<double>(batch.size());
  const std::size_t A = shape_.num_actions();
  std::vector<double> errors(batch.size());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!std::isfinite(batch[i].target)) throw InvalidArgument("grad_step: non-finite target");
    if (batch[i].action >= A) throw InvalidArgument("grad_step: action out of range");
    errors[i] = batch[i].target - predict(*batch[i].observation)[batch[i].action];
    total += errors[i] * errors[i];
  }
  if (shape_.kind == ApproximatorKind::kDense) {
    std::vector<double> step(params_.size(), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (errors[i] == 0.0) continue;
      auto g = gradient(*batch[i].observation, batch[i].action);
      for (std::size_t p = 0; p < g.size(); ++p) step[p] += errors[i] * g[p];
    }
    for (std::size_t p = 0; p < params_.size(); ++p) params_[p] += scale * step[p];
  } else if (shape_.kind == ApproximatorKind::kTabular) {
    std::vector<std::pair<std::size_t, double>> updates;
    for (std::size_t i = 0; i < batch.size(); ++i)
      updates.emplace_back(batch[i].observation->state * A + batch[i].action, errors[i]);
    for (auto [idx, err] : updates) params_[idx] += scale * err;
  } else {
    const std::size_t F = shape_.num_inputs();
    std::vector<double> step(params_.size(), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& x = batch[i].observation->features;
      double* row = step.data() + batch[i].action * F;
      for (std::size_t f = 0; f < F; ++f) row[f] += errors[i] * x[f];
    }
    for (std::size_t p = 0; p < params_.size(); ++p) params_[p] += scale * step[p];
  }
  return 0.5 * total / static_cast<double>(batch.size());
}

QTable QFunction::to_table() const {
  if (shape_.kind != ApproximatorKind::kTabular) throw InvalidArgument("to_table: approximator is not tabular");
  QTable table(shape_.num_inputs(), shape_.num_actions());
  std::copy(params_.begin(), params_.end(), table.values().begin());
  return table;
}

void QFunction::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("QFunction::save: cannot open " + path.string());
  out << "ebu-qfunction kind=" << to_string(shape_.kind) << " layers=";
  for (std::size_t i = 0; i < shape_.layers.size(); ++i) out << (i ? "," : "") << shape_.layers[i];
  out << " count=" << params_.size() << '\n';
  for (double v : params_) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>(bits >> (8 * i)));
  }
  if (!out) throw Error("QFunction::save: write failed");
}

QFunction QFunction::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("QFunction::load: cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream fields(header);
  std::string magic, kind_field, layers_field, count_field;
  fields >> magic >> kind_field >> layers_field >> count_field;
  auto value_of = [](const std::string& field, const std::string& key) {
    if (field.rfind(key + "=", 0) != 0) throw FormatError("QFunction::load: expected " + key);
    return field.substr(key.size() + 1);
  };
  if (magic != "ebu-qfunction") throw FormatError("QFunction::load: bad header");
  QFunctionShape shape;
  try {
    shape.kind = parse_approximator_kind(value_of(kind_field, "kind"));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
  std::istringstream sizes(value_of(layers_field, "layers"));
  for (std::string tok; std::getline(sizes, tok, ',');) shape.layers.push_back(std::stoul(tok));
  std::size_t count = std::stoul(value_of(count_field, "count"));
  QFunction q(shape);
  if (count != q.params_.size()) throw FormatError("QFunction::load: parameter count does not match shape");
  for (double& v : q.params_) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) throw FormatError("QFunction::load: truncated parameters");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{buf[i]} << (8 * i);
    std::memcpy(&v, &bits, 8);
  }
  return q;
}

double finite_diff_check(const QFunction& q, const Observation& obs, ActionId action, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_check: h must be positive");
  auto analytic = q.gradient(obs, action);
  QFunction probe = q;
  double worst = 0.0;
  for (std::size_t p = 0; p < analytic.size(); ++p) {
    double saved = probe.parameters()[p];
    probe.parameters()[p] = saved + h;
    double up = probe.predict(obs)[action];
    probe.parameters()[p] = saved - h;
    double down = probe.predict(obs)[action];
    probe.parameters()[p] = saved;
    double numeric = (up - down) / (2.0 * h);
    double scale = std::max(std::abs(analytic[p]), std::abs(numeric));
    if (scale < 1e-10) continue;
    worst = std::max(worst, std::abs(analytic[p] - numeric) / scale);
  }
  return worst;
}

}  // namespace ebu
