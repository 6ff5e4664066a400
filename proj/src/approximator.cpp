#include "skillforge/approximator.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace skillforge {

using nlohmann::json;

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1)
    throw ValidationError("MlpSpec: dims must be >= 1");
  for (int h : hidden_layers)
    if (h < 1) throw ValidationError("MlpSpec: hidden widths must be >= 1");
  if (output_head == OutputHead::kNormalizeToSphere && output_dim < 2)
    throw ValidationError("MlpSpec: normalize_to_sphere requires output_dim >= 2");
  if (output_head == OutputHead::kGaussianMeanLogStd && output_dim % 2 != 0)
    throw ValidationError("MlpSpec: gaussian head requires even output_dim");
}

std::vector<int> MlpSpec::dims() const {
  std::vector<int> d;
  d.push_back(input_dim);
  d.insert(d.end(), hidden_layers.begin(), hidden_layers.end());
  d.push_back(output_dim);
  return d;
}

std::string activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

std::string output_head_name(OutputHead h) {
  switch (h) {
    case OutputHead::kLinear: return "linear";
    case OutputHead::kNormalizeToSphere: return "normalize_to_sphere";
    case OutputHead::kGaussianMeanLogStd: return "gaussian_mean_logstd";
  }
  return "linear";
}

Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw ValidationError("unknown activation: " + s);
}

OutputHead output_head_from_name(const std::string& s) {
  if (s == "linear") return OutputHead::kLinear;
  if (s == "normalize_to_sphere") return OutputHead::kNormalizeToSphere;
  if (s == "gaussian_mean_logstd") return OutputHead::kGaussianMeanLogStd;
  throw ValidationError("unknown output head: " + s);
}

ParamSet ParamSet::zeros(const MlpSpec& spec) {
  spec.validate();
  const auto dims = spec.dims();
  ParamSet p;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    p.weights.emplace_back(Eigen::MatrixXd::Zero(dims[i + 1], dims[i]));
    p.biases.emplace_back(Eigen::VectorXd::Zero(dims[i + 1]));
  }
  return p;
}

std::int64_t ParamSet::size() const {
  std::int64_t n = 0;
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

bool ParamSet::same_shape(const ParamSet& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size())
    return false;
  for (size_t i = 0; i < weights.size(); ++i)
    if (weights[i].rows() != other.weights[i].rows() ||
        weights[i].cols() != other.weights[i].cols() ||
        biases[i].size() != other.biases[i].size())
      return false;
  return true;
}

bool ParamSet::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

void ParamSet::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

void ParamSet::add_scaled(const ParamSet& other, double s) {
  if (!same_shape(other)) throw ShapeMismatchError("ParamSet::add_scaled");
  for (size_t i = 0; i < weights.size(); ++i) {
    weights[i] += s * other.weights[i];
    biases[i] += s * other.biases[i];
  }
}

double ParamSet::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : biases) s += b.squaredNorm();
  return s;
}

namespace {

Eigen::MatrixXd orthogonal_matrix(int rows, int cols, Rng& rng) {
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  Eigen::MatrixXd g(big, small);
  for (int j = 0; j < small; ++j)
    for (int i = 0; i < big; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  // Fix signs with the R diagonal so the distribution is Haar-uniform.
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return rows >= cols ? q : Eigen::MatrixXd(q.transpose());
}

}  // namespace

ParamSet init_params(const MlpSpec& spec, std::uint64_t seed,
                     double final_layer_scale) {
  spec.validate();
  Rng rng(seed);
  const auto dims = spec.dims();
  ParamSet p = ParamSet::zeros(spec);
  const double hidden_gain =
      spec.hidden_activation == Activation::kRelu ? std::sqrt(2.0) : 5.0 / 3.0;
  const int last = spec.layer_count() - 1;
  for (int i = 0; i <= last; ++i) {
    const double gain = i == last ? final_layer_scale : hidden_gain;
    p.weights[i] = gain * orthogonal_matrix(dims[i + 1], dims[i], rng);
  }
  return p;
}

namespace {

void apply_activation(Eigen::MatrixXd& x, Activation act) {
  if (act == Activation::kRelu)
    x = x.cwiseMax(0.0);
  else
    x = x.array().tanh().matrix();
}

void check_finite(const Eigen::MatrixXd& x, const char* where) {
  if (!x.allFinite())
    throw NonFiniteActivationError(std::string("non-finite values in ") + where);
}

Eigen::MatrixXd apply_head(const Eigen::MatrixXd& final_affine, OutputHead head) {
  switch (head) {
    case OutputHead::kLinear:
      return final_affine;
    case OutputHead::kNormalizeToSphere: {
      Eigen::MatrixXd out = final_affine;
      for (Eigen::Index c = 0; c < out.cols(); ++c) {
        const double n = std::max(out.col(c).norm(), kNormFloor);
        out.col(c) /= n;
      }
      return out;
    }
    case OutputHead::kGaussianMeanLogStd: {
      Eigen::MatrixXd out = final_affine;
      const Eigen::Index half = out.rows() / 2;
      out.bottomRows(half) =
          out.bottomRows(half).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
      return out;
    }
  }
  return final_affine;
}

}  // namespace

ForwardTrace forward_trace(const ParamSet& params, const MlpSpec& spec,
                           Eigen::MatrixXd input) {
  if (input.rows() != spec.input_dim)
    throw DimensionMismatchError("forward: input dim " +
                                 std::to_string(input.rows()) + " != spec " +
                                 std::to_string(spec.input_dim));
  check_finite(input, "input");
  ForwardTrace trace;
  trace.input = std::move(input);
  const Eigen::MatrixXd* prev = &trace.input;
  const int n_hidden = static_cast<int>(spec.hidden_layers.size());
  trace.hidden.reserve(n_hidden);
  for (int i = 0; i < n_hidden; ++i) {
    Eigen::MatrixXd h = params.weights[i] * (*prev);
    h.colwise() += params.biases[i];
    apply_activation(h, spec.hidden_activation);
    check_finite(h, "hidden layer");
    trace.hidden.push_back(std::move(h));
    prev = &trace.hidden.back();
  }
  trace.final_affine = params.weights[n_hidden] * (*prev);
  trace.final_affine.colwise() += params.biases[n_hidden];
  check_finite(trace.final_affine, "final affine");
  trace.output = apply_head(trace.final_affine, spec.output_head);
  return trace;
}

Eigen::MatrixXd forward(const ParamSet& params, const MlpSpec& spec,
                        const Eigen::MatrixXd& input) {
  return forward_trace(params, spec, input).output;
}

Eigen::VectorXd forward(const ParamSet& params, const MlpSpec& spec,
                        const Eigen::VectorXd& input) {
  return forward(params, spec, Eigen::MatrixXd(input)).col(0);
}

void backward(const ParamSet& params, const MlpSpec& spec,
              const ForwardTrace& trace, const Eigen::MatrixXd& grad_output,
              ParamSet& grads, Eigen::MatrixXd* grad_input) {
  if (grad_output.rows() != trace.output.rows() ||
      grad_output.cols() != trace.output.cols())
    throw ShapeMismatchError("backward: grad_output shape mismatch");

  // Head backward: grad wrt final affine output.
  Eigen::MatrixXd g;
  switch (spec.output_head) {
    case OutputHead::kLinear:
      g = grad_output;
      break;
    case OutputHead::kNormalizeToSphere: {
      g.resizeLike(grad_output);
      for (Eigen::Index c = 0; c < g.cols(); ++c) {
        const double raw_norm = trace.final_affine.col(c).norm();
        if (raw_norm > kNormFloor) {
          const Eigen::VectorXd u = trace.output.col(c);
          const Eigen::VectorXd go = grad_output.col(c);
          g.col(c) = (go - u.dot(go) * u) / raw_norm;
        } else {
          g.col(c) = grad_output.col(c) / kNormFloor;
        }
      }
      break;
    }
    case OutputHead::kGaussianMeanLogStd: {
      g = grad_output;
      const Eigen::Index half = g.rows() / 2;
      // Clamp: zero gradient where the raw log-std is outside the bounds.
      for (Eigen::Index c = 0; c < g.cols(); ++c)
        for (Eigen::Index r = 0; r < half; ++r) {
          const double raw = trace.final_affine(half + r, c);
          if (raw < kLogStdMin || raw > kLogStdMax) g(half + r, c) = 0.0;
        }
      break;
    }
  }

  const int n_hidden = static_cast<int>(spec.hidden_layers.size());
  for (int i = n_hidden; i >= 0; --i) {
    const Eigen::MatrixXd& layer_in = i == 0 ? trace.input : trace.hidden[i - 1];
    grads.weights[i].noalias() += g * layer_in.transpose();
    grads.biases[i] += g.rowwise().sum();
    if (i == 0) {
      if (grad_input != nullptr) grad_input->noalias() = params.weights[0].transpose() * g;
      break;
    }
    Eigen::MatrixXd gi = params.weights[i].transpose() * g;
    const Eigen::MatrixXd& act = trace.hidden[i - 1];
    if (spec.hidden_activation == Activation::kRelu)
      gi.array() *= (act.array() > 0.0).cast<double>();
    else
      gi.array() *= 1.0 - act.array().square();
    g = std::move(gi);
  }
}

ParamSet gradient(const ParamSet& params, const MlpSpec& spec,
                  const Eigen::MatrixXd& input_batch, const BatchLoss& loss,
                  double* loss_value) {
  ForwardTrace trace = forward_trace(params, spec, input_batch);
  Eigen::MatrixXd grad_out = Eigen::MatrixXd::Zero(trace.output.rows(), trace.output.cols());
  const double value = loss.eval(trace.output, grad_out);
  ParamSet grads = ParamSet::zeros(spec);
  backward(params, spec, trace, grad_out, grads);
  if (!grads.all_finite() || !std::isfinite(value))
    throw NonFiniteGradientError("gradient: non-finite loss or gradient");
  if (loss_value != nullptr) *loss_value = value;
  return grads;
}

OptimizerState OptimizerState::create(const MlpSpec& spec, double learning_rate) {
  OptimizerState s;
  s.learning_rate = learning_rate;
  s.m = ParamSet::zeros(spec);
  s.v = ParamSet::zeros(spec);
  return s;
}

void OptimizerState::apply(ParamSet& params, const ParamSet& grads) {
  if (!params.same_shape(grads) || !params.same_shape(m))
    throw ShapeMismatchError("OptimizerState::apply: shape mismatch");
  step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  auto update = [&](Eigen::Ref<Eigen::MatrixXd> p, const Eigen::MatrixXd& g,
                    Eigen::Ref<Eigen::MatrixXd> mm, Eigen::Ref<Eigen::MatrixXd> vv) {
    mm = beta1 * mm + (1.0 - beta1) * g;
    vv = beta2 * vv + (1.0 - beta2) * g.cwiseProduct(g);
    const Eigen::ArrayXXd m_hat = mm.array() / bc1;
    const Eigen::ArrayXXd v_hat = vv.array() / bc2;
    p.array() -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
  };
  for (size_t i = 0; i < params.weights.size(); ++i) {
    update(params.weights[i], grads.weights[i], m.weights[i], v.weights[i]);
    Eigen::MatrixXd gb = grads.biases[i];
    Eigen::Map<Eigen::MatrixXd> pb(params.biases[i].data(), params.biases[i].size(), 1);
    Eigen::Map<Eigen::MatrixXd> mb(m.biases[i].data(), m.biases[i].size(), 1);
    Eigen::Map<Eigen::MatrixXd> vb(v.biases[i].data(), v.biases[i].size(), 1);
    update(pb, gb, mb, vb);
  }
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms unsupported");

void write_doubles_le(std::ofstream& out, const double* data, std::int64_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), n * 8);
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &data[i], 8);
      char buf[8];
      for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
      out.write(buf, 8);
    }
  }
}

void read_doubles_le(std::ifstream& in, double* data, std::int64_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(data), n * 8);
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      unsigned char buf[8];
      in.read(reinterpret_cast<char*>(buf), 8);
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
      std::memcpy(&data[i], &bits, 8);
    }
  }
  if (!in) throw ParseError("checkpoint: truncated parameter data");
}

json spec_to_json(const MlpSpec& spec) {
  return json{{"input_dim", spec.input_dim},
              {"hidden_layers", spec.hidden_layers},
              {"output_dim", spec.output_dim},
              {"hidden_activation", activation_name(spec.hidden_activation)},
              {"output_head", output_head_name(spec.output_head)}};
}

MlpSpec spec_from_json(const json& j) {
  MlpSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  spec.hidden_layers = j.at("hidden_layers").get<std::vector<int>>();
  spec.output_dim = j.at("output_dim").get<int>();
  spec.hidden_activation = activation_from_name(j.at("hidden_activation").get<std::string>());
  spec.output_head = output_head_from_name(j.at("output_head").get<std::string>());
  spec.validate();
  return spec;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  json manifest{{"format_version", 1},
                {"spec", spec_to_json(ckpt.spec)},
                {"seed", ckpt.seed},
                {"step", ckpt.step},
                {"total_params", ckpt.params.size()}};
  out << manifest.dump() << "\n";
  // Declaration order: per layer, weight matrix row-major, then bias.
  for (size_t i = 0; i < ckpt.params.weights.size(); ++i) {
    const auto& w = ckpt.params.weights[i];
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = w;
    write_doubles_le(out, row_major.data(), row_major.size());
    write_doubles_le(out, ckpt.params.biases[i].data(), ckpt.params.biases[i].size());
  }
  if (!out) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("checkpoint: missing manifest line");
  json manifest;
  try {
    manifest = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
  Checkpoint ckpt;
  ckpt.spec = spec_from_json(manifest.at("spec"));
  ckpt.seed = manifest.at("seed").get<std::uint64_t>();
  ckpt.step = manifest.at("step").get<std::int64_t>();
  ckpt.params = ParamSet::zeros(ckpt.spec);
  for (size_t i = 0; i < ckpt.params.weights.size(); ++i) {
    auto& w = ckpt.params.weights[i];
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major(
        w.rows(), w.cols());
    read_doubles_le(in, row_major.data(), row_major.size());
    w = row_major;
    read_doubles_le(in, ckpt.params.biases[i].data(), ckpt.params.biases[i].size());
  }
  if (manifest.at("total_params").get<std::int64_t>() != ckpt.params.size())
    throw ParseError("checkpoint: parameter count mismatch");
  return ckpt;
}

}  // namespace skillforge
