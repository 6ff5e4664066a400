#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "skillforge/common.hpp"

namespace skillforge {

// ---------------------------------------------------------------------------
// From-scratch MLP function approximators with exact reverse-mode gradients
// for a fixed loss catalog, and an adaptive-moment optimizer.
// ---------------------------------------------------------------------------

enum class Activation { kRelu, kTanh };
enum class OutputHead { kLinear, kNormalizeToSphere, kGaussianMeanLogStd };

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;
constexpr double kNormFloor = 1e-8;

struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden_layers;
  int output_dim = 0;
  Activation hidden_activation = Activation::kRelu;
  OutputHead output_head = OutputHead::kLinear;

  void validate() const;
  int layer_count() const { return static_cast<int>(hidden_layers.size()) + 1; }
  std::vector<int> dims() const;  // [input, hidden..., output]

  bool operator==(const MlpSpec& other) const = default;
};

std::string activation_name(Activation a);
std::string output_head_name(OutputHead h);
Activation activation_from_name(const std::string& s);
OutputHead output_head_from_name(const std::string& s);

/// Ordered weight matrices and bias vectors matching an MlpSpec.
struct ParamSet {
  std::vector<Eigen::MatrixXd> weights;  // weights[i]: dims[i+1] x dims[i]
  std::vector<Eigen::VectorXd> biases;

  static ParamSet zeros(const MlpSpec& spec);

  std::int64_t size() const;
  bool same_shape(const ParamSet& other) const;
  bool all_finite() const;
  void set_zero();
  void add_scaled(const ParamSet& other, double s);
  double squared_norm() const;
};

/// Orthogonal initialization; hidden gain sqrt(2) for relu and 5/3 for tanh,
/// final layer gain final_layer_scale.
ParamSet init_params(const MlpSpec& spec, std::uint64_t seed,
                     double final_layer_scale = 1.0);

struct ForwardTrace {
  Eigen::MatrixXd input;                // input_dim x B
  std::vector<Eigen::MatrixXd> hidden;  // post-activation per hidden layer
  Eigen::MatrixXd final_affine;         // output_dim x B, before the head
  Eigen::MatrixXd output;               // after the head
};

/// Batched forward pass; columns are independent inputs.
Eigen::MatrixXd forward(const ParamSet& params, const MlpSpec& spec,
                        const Eigen::MatrixXd& input);
Eigen::VectorXd forward(const ParamSet& params, const MlpSpec& spec,
                        const Eigen::VectorXd& input);
ForwardTrace forward_trace(const ParamSet& params, const MlpSpec& spec,
                           Eigen::MatrixXd input);

/// Accumulates dL/dparams into grads given dL/doutput. Optionally returns
/// dL/dinput.
void backward(const ParamSet& params, const MlpSpec& spec,
              const ForwardTrace& trace, const Eigen::MatrixXd& grad_output,
              ParamSet& grads, Eigen::MatrixXd* grad_input = nullptr);

/// A scalar loss over the batched outputs of one network. eval writes
/// dL/doutputs (same shape as outputs) and returns the loss value.
class BatchLoss {
 public:
  virtual ~BatchLoss() = default;
  virtual double eval(const Eigen::MatrixXd& outputs,
                      Eigen::MatrixXd& grad_outputs) const = 0;
};

/// Exact reverse-mode gradient of `loss` over the batch with respect to every
/// parameter. Throws NonFiniteGradientError when gradients are not finite.
ParamSet gradient(const ParamSet& params, const MlpSpec& spec,
                  const Eigen::MatrixXd& input_batch, const BatchLoss& loss,
                  double* loss_value = nullptr);

struct OptimizerState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  ParamSet m;
  ParamSet v;

  static OptimizerState create(const MlpSpec& spec, double learning_rate);

  /// Adaptive-moment update with bias correction; deterministic.
  void apply(ParamSet& params, const ParamSet& grads);
};

// ---------------------------------------------------------------------------
// Checkpoints: one JSON manifest line, then flat little-endian float64 arrays
// in declaration order (per layer: weight row-major, then bias).
// ---------------------------------------------------------------------------

struct Checkpoint {
  MlpSpec spec;
  ParamSet params;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace skillforge
