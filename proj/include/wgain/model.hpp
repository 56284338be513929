#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wgain/kernels.hpp"
#include "wgain/mask.hpp"
#include "wgain/params.hpp"
#include "wgain/rng.hpp"
#include "wgain/tensor.hpp"

namespace wgain {

struct GeneratorConfig {
  int input_side = 128;
  std::vector<int> encoder_widths{128, 128, 256, 512};
  std::vector<int> decoder_widths{256, 128, 128};
  std::vector<int> dilation_rates{1, 2, 5};
  int block_kernel = 5;
  int head_kernel = 3;
  int head_channels = 8;

  void validate() const;
  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

struct CriticConfig {
  std::vector<int> widths{64, 128, 256, 256, 512};
  int kernel = 5;
  int stride = 2;
  Real clip_norm = 1.0;
  Real leaky_slope = 0.2;

  void validate() const;
  friend bool operator==(const CriticConfig&, const CriticConfig&) = default;
};

/// Channels fed to the generator: masked image (3), masked noise (3), mask (1).
inline constexpr int kGeneratorInputChannels = 7;
/// Channels fed to the critic: image (3) and mask (1).
inline constexpr int kCriticInputChannels = 4;

Real hard_sigmoid(Real x);
Real hard_sigmoid_grad(Real x);

/// Keeps x where the mask is valid and writes exact zeros elsewhere.
ImageTensor mask_image(const ImageTensor& x, const MaskMatrix& m);
/// Keeps z where the mask is missing and writes exact zeros elsewhere.
NoiseTensor mask_noise(const NoiseTensor& z, const MaskMatrix& m);
/// Generator pixels on the missing set, x_tilde on the valid set.
ImageTensor compose_output(const ImageTensor& g_out, const ImageTensor& x_tilde, const MaskMatrix& m);
NoiseTensor sample_noise(int h, int w, Real sigma, Rng& rng);

Tensor generator_input(const ImageTensor& x_tilde, const NoiseTensor& z_tilde, const MaskMatrix& m);
Tensor critic_input(const ImageTensor& x, const MaskMatrix& m);

/// Encoder/decoder of dilated three-branch blocks with skip connections and a
/// hard-sigmoid head.
///
/// Encoder block k sees the raw 7-channel input (k = 0) or the 2x2 max-pooled
/// output of block k-1. Decoder block 0 sees the deepest encoder output; block
/// j > 0 sees its upsampled predecessor concatenated with encoder output
/// L-1-j. The head sees the upsampled last decoder output, encoder output 0
/// and the raw input.
class Generator {
 public:
  explicit Generator(GeneratorConfig cfg);

  const GeneratorConfig& config() const { return cfg_; }

  /// Allocates parameters in canonical order; Glorot-uniform weights, zero biases.
  ParamSet init_params(Rng& rng) const;
  /// Zero-valued parameters with the right names and shapes.
  ParamSet empty_params() const;

  /// Intermediate activations kept for backpropagation.
  struct Trace {
    Tensor input;
    std::vector<Tensor> enc_in, enc_out;
    std::vector<std::vector<std::uint32_t>> pool_argmax;
    std::vector<Tensor> dec_in, dec_out;
    Tensor head_in, head_hidden, head_pre, output;
  };

  /// Full-resolution three-channel output with values in [0, 1].
  Tensor forward(const ParamSet& p, const Tensor& input, Trace* trace = nullptr) const;
  /// Accumulates d(loss)/d(params) given d(loss)/d(output). When `grad_input`
  /// is non-null it receives d(loss)/d(input).
  void backward(const ParamSet& p, const Trace& trace, const Tensor& grad_output, Gradients& grads,
                Tensor* grad_input = nullptr) const;

 private:
  struct Branch {
    std::size_t weight, bias;
    int channels, dilation, offset;
  };
  struct Block {
    std::vector<Branch> branches;
    int in_channels, out_channels, side;
    bool transposed;
  };
  struct HeadLayer {
    std::size_t weight, bias;
    int in_channels, out_channels;
  };

  void block_forward(const ParamSet& p, const Block& b, const Tensor& in, Tensor& out) const;
  void block_backward(const ParamSet& p, const Block& b, const Tensor& in, const Tensor& out,
                      Tensor grad_out, Gradients& grads, Tensor& grad_in) const;

  GeneratorConfig cfg_;
  std::vector<Block> encoder_, decoder_;
  HeadLayer head_hidden_{}, head_out_{};
  ParamSet layout_;
};

/// Strided convolutional funnel with a single linear output neuron.
class Critic {
 public:
  Critic(CriticConfig cfg, int input_side);

  const CriticConfig& config() const { return cfg_; }
  int input_side() const { return side_; }
  /// Spatial side after each convolution.
  std::vector<int> feature_sides() const;

  ParamSet init_params(Rng& rng) const;
  ParamSet empty_params() const;

  struct Trace {
    Tensor input;
    std::vector<Tensor> activations;
  };

  Real forward(const ParamSet& p, const Tensor& input, Trace* trace = nullptr) const;
  /// Accumulates grad_score * d(score)/d(params); optionally d(score)/d(input) * grad_score.
  void backward(const ParamSet& p, const Trace& trace, Real grad_score, Gradients* grads,
                Tensor* grad_input = nullptr) const;

 private:
  struct Layer {
    std::size_t weight, bias;
    kernels::ConvGeometry geom;
  };

  CriticConfig cfg_;
  int side_;
  std::vector<Layer> layers_;
  std::size_t fc_weight_ = 0, fc_bias_ = 0;
  std::size_t flat_size_ = 0;
  ParamSet layout_;
};

/// Scales every critic weight tensor w to w * min(1, clip_norm / ||w||).
/// Biases are left alone.
void clip_critic_weights(ParamSet& critic, Real clip_norm);
/// Largest L2 norm among the critic's weight tensors.
Real max_weight_norm(const ParamSet& critic);

struct ModelParams {
  ParamSet generator;
  ParamSet critic;
  std::uint64_t step = 0;
};

/// Generator and critic sharing one input size, plus their parameters.
struct Model {
  Generator generator;
  Critic critic;
  ModelParams params;

  /// Fresh model. Critic weights start inside the clipping ball.
  static Model create(const GeneratorConfig& gcfg, const CriticConfig& ccfg, std::uint64_t seed);
  int input_side() const { return generator.config().input_side; }
};

/// Full generator pass: x_tilde, z_tilde, m -> raw output in [0, 1].
ImageTensor generator_forward(const Model& model, const ImageTensor& x_tilde,
                              const NoiseTensor& z_tilde, const MaskMatrix& m);
Real critic_forward(const Model& model, const ImageTensor& x, const MaskMatrix& m);

/// Mask, add noise, run the generator and compose: the complete inpainting path.
ImageTensor inpaint(const Model& model, const ImageTensor& x, const MaskMatrix& m, Real sigma, Rng& noise_rng);

}  // namespace wgain
