#include "wgain/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wgain/errors.hpp"

namespace wgain {
namespace {

void check_same_size(int h, int w, const MaskMatrix& m, const char* what) {
  if (h != m.height() || w != m.width())
    throw ContractError(std::string(what) + ": image and mask sizes differ");
}

void glorot(ParamTensor& t, Rng& rng) {
  // shape is [a, b, k, k] (or [a, b] for dense layers); fans are symmetric in a and b.
  const int k2 = t.shape.size() == 4 ? t.shape[2] * t.shape[3] : 1;
  const double fan = static_cast<double>(t.shape[0]) * k2 + static_cast<double>(t.shape[1]) * k2;
  const double limit = std::sqrt(6.0 / fan);
  for (Real& v : t.value) v = rng.uniform(-limit, limit);
}

Real elu(Real x) { return x > 0 ? x : std::expm1(x); }
Real elu_grad_from_output(Real y) { return y > 0 ? Real(1) : y + Real(1); }

Tensor maxpool2(const Tensor& in, std::vector<std::uint32_t>& argmax) {
  const int oh = in.height() / 2, ow = in.width() / 2;
  Tensor out(in.channels(), oh, ow);
  argmax.assign(out.size(), 0);
  std::size_t o = 0;
  for (int c = 0; c < in.channels(); ++c)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x, ++o) {
        std::size_t best = (static_cast<std::size_t>(c) * in.height() + 2 * y) * in.width() + 2 * x;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t i = (static_cast<std::size_t>(c) * in.height() + 2 * y + dy) * in.width() + 2 * x + dx;
            if (in[i] > in[best]) best = i;
          }
        out[o] = in[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
  return out;
}

void maxpool2_backward(const Tensor& grad_out, const std::vector<std::uint32_t>& argmax, Tensor& grad_in) {
  for (std::size_t o = 0; o < grad_out.size(); ++o) grad_in[argmax[o]] += grad_out[o];
}

// Nearest-neighbour 2x upsampling written into channels [first, first + src.c) of dst.
void upsample2_into(const Tensor& src, Tensor& dst, int first) {
  for (int c = 0; c < src.channels(); ++c)
    for (int y = 0; y < dst.height(); ++y)
      for (int x = 0; x < dst.width(); ++x) dst(first + c, y, x) = src(c, y / 2, x / 2);
}

void upsample2_backward(const Tensor& grad, int first, Tensor& grad_src) {
  for (int c = 0; c < grad_src.channels(); ++c)
    for (int y = 0; y < grad.height(); ++y)
      for (int x = 0; x < grad.width(); ++x) grad_src(c, y / 2, x / 2) += grad(first + c, y, x);
}

void copy_into(const Tensor& src, Tensor& dst, int first) {
  auto d = dst.channels_view(first, src.channels());
  std::copy(src.data().begin(), src.data().end(), d.begin());
}

void add_from(const Tensor& src, int first, Tensor& dst) {
  auto s = src.channels_view(first, dst.channels());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s[i];
}

void check_finite_output(const Tensor& t, const char* what) {
  for (Real v : t.data())
    if (!std::isfinite(v)) throw NumericalFault(std::string(what) + " produced a non-finite value");
}

}  // namespace

Real hard_sigmoid(Real x) {
  if (x < Real(-2.5)) return Real(0);
  if (x > Real(2.5)) return Real(1);
  // 0.2 x + 0.5, written so both kinks are exact (0.2 has no binary form).
  return (x + Real(2.5)) / Real(5);
}

Real hard_sigmoid_grad(Real x) { return (x < Real(-2.5) || x > Real(2.5)) ? Real(0) : Real(0.2); }

void GeneratorConfig::validate() const {
  if (encoder_widths.size() < 2) throw ValidationError("generator needs at least two encoder blocks");
  if (decoder_widths.size() + 1 != encoder_widths.size())
    throw ValidationError("generator needs exactly one decoder block fewer than encoder blocks");
  if (dilation_rates.size() != 3) throw ValidationError("generator blocks have exactly three branches");
  for (int r : dilation_rates)
    if (r < 1) throw ValidationError("dilation rates must be >= 1");
  for (int n : encoder_widths)
    if (n <= 0 || n % 4 != 0) throw ValidationError("generator widths must be positive multiples of 4");
  for (int n : decoder_widths)
    if (n <= 0 || n % 4 != 0) throw ValidationError("generator widths must be positive multiples of 4");
  if (block_kernel < 1 || block_kernel % 2 == 0 || head_kernel < 1 || head_kernel % 2 == 0)
    throw ValidationError("kernel sizes must be odd");
  if (head_channels < 1) throw ValidationError("head_channels must be positive");
  const int div = 1 << (encoder_widths.size() - 1);
  if (input_side <= 0 || input_side % div != 0)
    throw ValidationError("input_side must be divisible by 2^(encoder blocks - 1)");
}

void CriticConfig::validate() const {
  if (widths.empty()) throw ValidationError("critic needs at least one layer");
  for (int n : widths)
    if (n <= 0) throw ValidationError("critic widths must be positive");
  if (kernel < 1 || kernel % 2 == 0) throw ValidationError("critic kernel must be odd");
  if (stride < 1) throw ValidationError("critic stride must be positive");
  if (!(clip_norm > 0)) throw ValidationError("clip_norm must be > 0");
  if (!(leaky_slope >= 0)) throw ValidationError("leaky_slope must be >= 0");
}

// ---------------------------------------------------------------- generator

Generator::Generator(GeneratorConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const int levels = static_cast<int>(cfg_.encoder_widths.size());
  const int k = cfg_.block_kernel;

  auto make_block = [&](const std::string& prefix, int in_c, int n, int side, bool transposed) {
    Block b{{}, in_c, n, side, transposed};
    const int split[3] = {n / 2, n / 4, n / 4};
    int offset = 0;
    for (int r = 0; r < 3; ++r) {
      const std::string name = prefix + ".branch" + std::to_string(r);
      const auto shape = transposed ? std::vector<int>{in_c, split[r], k, k} : std::vector<int>{split[r], in_c, k, k};
      const auto w = layout_.add(name + ".weight", shape, true);
      const auto bias = layout_.add(name + ".bias", {split[r]}, false);
      b.branches.push_back({w, bias, split[r], cfg_.dilation_rates[r], offset});
      offset += split[r];
    }
    return b;
  };

  for (int i = 0; i < levels; ++i) {
    const int in_c = i == 0 ? kGeneratorInputChannels : cfg_.encoder_widths[i - 1];
    encoder_.push_back(make_block("generator.enc" + std::to_string(i), in_c, cfg_.encoder_widths[i],
                                  cfg_.input_side >> i, false));
  }
  for (int j = 0; j + 1 < levels; ++j) {
    const int in_c = j == 0 ? cfg_.encoder_widths[levels - 1]
                            : cfg_.decoder_widths[j - 1] + cfg_.encoder_widths[levels - 1 - j];
    decoder_.push_back(make_block("generator.dec" + std::to_string(j), in_c, cfg_.decoder_widths[j],
                                  cfg_.input_side >> (levels - 1 - j), true));
  }
  const int head_in = cfg_.decoder_widths.back() + cfg_.encoder_widths.front() + kGeneratorInputChannels;
  const int hk = cfg_.head_kernel;
  head_hidden_ = {layout_.add("generator.head0.weight", {head_in, cfg_.head_channels, hk, hk}, true),
                  layout_.add("generator.head0.bias", {cfg_.head_channels}, false), head_in,
                  cfg_.head_channels};
  head_out_ = {layout_.add("generator.head1.weight", {cfg_.head_channels, 3, hk, hk}, true),
               layout_.add("generator.head1.bias", {3}, false), cfg_.head_channels, 3};
}

ParamSet Generator::empty_params() const { return layout_; }

ParamSet Generator::init_params(Rng& rng) const {
  ParamSet p = layout_;
  for (auto& t : p)
    if (t.is_weight) glorot(t, rng);
  return p;
}

void Generator::block_forward(const ParamSet& p, const Block& b, const Tensor& in, Tensor& out) const {
  out = Tensor(b.out_channels, b.side, b.side);
  for (const auto& br : b.branches) {
    auto slice = out.channels_view(br.offset, br.channels);
    const auto& w = p[br.weight].value;
    const auto& bias = p[br.bias].value;
    if (!b.transposed) {
      const auto g = kernels::ConvGeometry::same(b.in_channels, b.side, b.side, br.channels, cfg_.block_kernel, br.dilation);
      kernels::conv2d_forward(g, in.data(), w, bias, slice);
    } else {
      // Stride-1 transposed convolution: adjoint of the conv mapping branch -> input channels.
      const auto g = kernels::ConvGeometry::same(br.channels, b.side, b.side, b.in_channels, cfg_.block_kernel, br.dilation);
      kernels::conv2d_backward_input(g, in.data(), w, slice);
      const std::size_t plane = out.plane();
      for (int c = 0; c < br.channels; ++c)
        for (std::size_t i = 0; i < plane; ++i) slice[c * plane + i] += bias[c];
    }
  }
  for (Real& v : out.data()) v = elu(v);
}

void Generator::block_backward(const ParamSet& p, const Block& b, const Tensor& in, const Tensor& out,
                               Tensor grad_out, Gradients& grads, Tensor& grad_in) const {
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad_out[i] *= elu_grad_from_output(out[i]);
  const bool want_input = !grad_in.empty();
  Tensor scratch;
  if (b.transposed && want_input) scratch = Tensor(b.in_channels, b.side, b.side);
  for (const auto& br : b.branches) {
    auto gslice = std::span<const Real>(grad_out.channels_view(br.offset, br.channels));
    const auto& w = p[br.weight].value;
    if (!b.transposed) {
      const auto g = kernels::ConvGeometry::same(b.in_channels, b.side, b.side, br.channels, cfg_.block_kernel, br.dilation);
      kernels::conv2d_backward_weight(g, in.data(), gslice, grads[br.weight], grads[br.bias]);
      if (want_input) kernels::conv2d_backward_input(g, gslice, w, grad_in.data());
    } else {
      const auto g = kernels::ConvGeometry::same(br.channels, b.side, b.side, b.in_channels, cfg_.block_kernel, br.dilation);
      kernels::conv2d_backward_weight(g, gslice, in.data(), grads[br.weight], {});
      auto gb = grads[br.bias];
      const std::size_t plane = grad_out.plane();
      for (int c = 0; c < br.channels; ++c)
        for (std::size_t i = 0; i < plane; ++i) gb[c] += gslice[c * plane + i];
      if (want_input) {
        kernels::conv2d_forward(g, gslice, w, {}, scratch.data());
        for (std::size_t i = 0; i < scratch.size(); ++i) grad_in[i] += scratch[i];
      }
    }
  }
}

Tensor Generator::forward(const ParamSet& p, const Tensor& input, Trace* trace) const {
  const int side = cfg_.input_side;
  if (input.channels() != kGeneratorInputChannels || input.height() != side || input.width() != side)
    throw ContractError("generator input must be 7 x " + std::to_string(side) + " x " + std::to_string(side));
  if (!p.all_finite()) throw NumericalFault("generator parameters contain non-finite values");

  Trace local;
  Trace& t = trace ? *trace : local;
  const std::size_t levels = encoder_.size();
  t.input = input;
  t.enc_in.resize(levels);
  t.enc_out.resize(levels);
  t.pool_argmax.resize(levels);
  for (std::size_t i = 0; i < levels; ++i) {
    t.enc_in[i] = i == 0 ? input : maxpool2(t.enc_out[i - 1], t.pool_argmax[i]);
    block_forward(p, encoder_[i], t.enc_in[i], t.enc_out[i]);
  }
  t.dec_in.resize(decoder_.size());
  t.dec_out.resize(decoder_.size());
  for (std::size_t j = 0; j < decoder_.size(); ++j) {
    const auto& blk = decoder_[j];
    if (j == 0) {
      t.dec_in[j] = t.enc_out[levels - 1];
    } else {
      const Tensor& prev = t.dec_out[j - 1];
      const Tensor& skip = t.enc_out[levels - 1 - j];
      t.dec_in[j] = Tensor(blk.in_channels, blk.side, blk.side);
      upsample2_into(prev, t.dec_in[j], 0);
      copy_into(skip, t.dec_in[j], prev.channels());
    }
    block_forward(p, blk, t.dec_in[j], t.dec_out[j]);
  }

  const Tensor& last = t.dec_out.back();
  t.head_in = Tensor(head_hidden_.in_channels, side, side);
  upsample2_into(last, t.head_in, 0);
  copy_into(t.enc_out[0], t.head_in, last.channels());
  copy_into(input, t.head_in, last.channels() + t.enc_out[0].channels());

  const int hk = cfg_.head_kernel;
  t.head_hidden = Tensor(head_hidden_.out_channels, side, side);
  {
    const auto g = kernels::ConvGeometry::same(head_hidden_.out_channels, side, side, head_hidden_.in_channels, hk, 1);
    kernels::conv2d_backward_input(g, t.head_in.data(), p[head_hidden_.weight].value, t.head_hidden.data());
    const auto& bias = p[head_hidden_.bias].value;
    for (int c = 0; c < head_hidden_.out_channels; ++c)
      for (auto& v : t.head_hidden.channels_view(c, 1)) v = elu(v + bias[c]);
  }
  t.head_pre = Tensor(3, side, side);
  {
    const auto g = kernels::ConvGeometry::same(3, side, side, head_out_.in_channels, hk, 1);
    kernels::conv2d_backward_input(g, t.head_hidden.data(), p[head_out_.weight].value, t.head_pre.data());
    const auto& bias = p[head_out_.bias].value;
    for (int c = 0; c < 3; ++c)
      for (auto& v : t.head_pre.channels_view(c, 1)) v += bias[c];
  }
  t.output = Tensor(3, side, side);
  for (std::size_t i = 0; i < t.output.size(); ++i) t.output[i] = hard_sigmoid(t.head_pre[i]);
  check_finite_output(t.output, "generator");
  return t.output;
}

void Generator::backward(const ParamSet& p, const Trace& t, const Tensor& grad_output, Gradients& grads,
                         Tensor* grad_input) const {
  if (!grad_output.same_shape(t.output)) throw ContractError("generator gradient shape mismatch");
  const int side = cfg_.input_side;
  const int hk = cfg_.head_kernel;
  const std::size_t levels = encoder_.size();

  // Head, output layer.
  Tensor g_pre(3, side, side);
  for (std::size_t i = 0; i < g_pre.size(); ++i) g_pre[i] = grad_output[i] * hard_sigmoid_grad(t.head_pre[i]);
  Tensor g_hidden(head_hidden_.out_channels, side, side);
  {
    const auto g = kernels::ConvGeometry::same(3, side, side, head_out_.in_channels, hk, 1);
    kernels::conv2d_backward_weight(g, g_pre.data(), t.head_hidden.data(), grads[head_out_.weight], {});
    auto gb = grads[head_out_.bias];
    for (int c = 0; c < 3; ++c)
      for (Real v : g_pre.channels_view(c, 1)) gb[c] += v;
    Tensor tmp(head_out_.in_channels, side, side);
    kernels::conv2d_forward(g, g_pre.data(), p[head_out_.weight].value, {}, tmp.data());
    for (std::size_t i = 0; i < tmp.size(); ++i) g_hidden[i] = tmp[i] * elu_grad_from_output(t.head_hidden[i]);
  }
  // Head, hidden layer.
  Tensor g_head_in(head_hidden_.in_channels, side, side);
  {
    const auto g = kernels::ConvGeometry::same(head_hidden_.out_channels, side, side, head_hidden_.in_channels, hk, 1);
    kernels::conv2d_backward_weight(g, g_hidden.data(), t.head_in.data(), grads[head_hidden_.weight], {});
    auto gb = grads[head_hidden_.bias];
    for (int c = 0; c < head_hidden_.out_channels; ++c)
      for (Real v : g_hidden.channels_view(c, 1)) gb[c] += v;
    kernels::conv2d_forward(g, g_hidden.data(), p[head_hidden_.weight].value, {}, g_head_in.data());
  }

  std::vector<Tensor> g_enc(levels), g_dec(decoder_.size());
  for (std::size_t i = 0; i < levels; ++i) g_enc[i] = Tensor(t.enc_out[i].channels(), t.enc_out[i].height(), t.enc_out[i].width());
  for (std::size_t j = 0; j < decoder_.size(); ++j)
    g_dec[j] = Tensor(t.dec_out[j].channels(), t.dec_out[j].height(), t.dec_out[j].width());

  const int last_c = t.dec_out.back().channels();
  upsample2_backward(g_head_in, 0, g_dec.back());
  add_from(g_head_in, last_c, g_enc[0]);
  Tensor g_in_acc(kGeneratorInputChannels, side, side);
  add_from(g_head_in, last_c + t.enc_out[0].channels(), g_in_acc);

  for (std::size_t jj = decoder_.size(); jj-- > 0;) {
    const auto& blk = decoder_[jj];
    Tensor g_block_in(blk.in_channels, blk.side, blk.side);
    block_backward(p, blk, t.dec_in[jj], t.dec_out[jj], g_dec[jj], grads, g_block_in);
    if (jj == 0) {
      for (std::size_t i = 0; i < g_block_in.size(); ++i) g_enc[levels - 1][i] += g_block_in[i];
    } else {
      upsample2_backward(g_block_in, 0, g_dec[jj - 1]);
      add_from(g_block_in, g_dec[jj - 1].channels(), g_enc[levels - 1 - jj]);
    }
  }
  for (std::size_t ii = levels; ii-- > 0;) {
    const auto& blk = encoder_[ii];
    Tensor g_block_in;
    if (ii > 0 || grad_input) g_block_in = Tensor(blk.in_channels, blk.side, blk.side);
    block_backward(p, blk, t.enc_in[ii], t.enc_out[ii], g_enc[ii], grads, g_block_in);
    if (ii > 0)
      maxpool2_backward(g_block_in, t.pool_argmax[ii], g_enc[ii - 1]);
    else if (grad_input)
      for (std::size_t i = 0; i < g_block_in.size(); ++i) g_in_acc[i] += g_block_in[i];
  }
  if (grad_input) *grad_input = std::move(g_in_acc);
}

// ------------------------------------------------------------------- critic

Critic::Critic(CriticConfig cfg, int input_side) : cfg_(std::move(cfg)), side_(input_side) {
  cfg_.validate();
  if (input_side <= 0) throw ValidationError("critic input side must be positive");
  int in_c = kCriticInputChannels, s = input_side;
  for (std::size_t i = 0; i < cfg_.widths.size(); ++i) {
    kernels::ConvGeometry g{in_c, s, s, cfg_.widths[i], cfg_.kernel, cfg_.stride, (cfg_.kernel - 1) / 2, 1};
    const std::string name = "critic.conv" + std::to_string(i);
    const auto w = layout_.add(name + ".weight", {cfg_.widths[i], in_c, cfg_.kernel, cfg_.kernel}, true);
    const auto b = layout_.add(name + ".bias", {cfg_.widths[i]}, false);
    layers_.push_back({w, b, g});
    in_c = cfg_.widths[i];
    s = g.out_h();
    if (s < 1) throw ValidationError("critic input too small for its depth");
  }
  flat_size_ = static_cast<std::size_t>(in_c) * s * s;
  fc_weight_ = layout_.add("critic.fc.weight", {1, static_cast<int>(flat_size_)}, true);
  fc_bias_ = layout_.add("critic.fc.bias", {1}, false);
}

std::vector<int> Critic::feature_sides() const {
  std::vector<int> out;
  for (const auto& l : layers_) out.push_back(l.geom.out_h());
  return out;
}

ParamSet Critic::empty_params() const { return layout_; }

ParamSet Critic::init_params(Rng& rng) const {
  ParamSet p = layout_;
  for (auto& t : p)
    if (t.is_weight) glorot(t, rng);
  return p;
}

Real Critic::forward(const ParamSet& p, const Tensor& input, Trace* trace) const {
  if (input.channels() != kCriticInputChannels || input.height() != side_ || input.width() != side_)
    throw ContractError("critic input must be 4 x " + std::to_string(side_) + " x " + std::to_string(side_));
  Trace local;
  Trace& t = trace ? *trace : local;
  t.input = input;
  t.activations.resize(layers_.size());
  const Real slope = cfg_.leaky_slope;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    const Tensor& in = i == 0 ? input : t.activations[i - 1];
    Tensor out(l.geom.out_c, l.geom.out_h(), l.geom.out_w());
    kernels::conv2d_forward(l.geom, in.data(), p[l.weight].value, p[l.bias].value, out.data());
    for (Real& v : out.data()) v = v > 0 ? v : slope * v;
    t.activations[i] = std::move(out);
  }
  const auto& w = p[fc_weight_].value;
  const auto& flat = t.activations.back();
  Real score = p[fc_bias_].value[0];
  for (std::size_t i = 0; i < flat_size_; ++i) score += w[i] * flat[i];
  return score;
}

void Critic::backward(const ParamSet& p, const Trace& t, Real grad_score, Gradients* grads,
                      Tensor* grad_input) const {
  const Real slope = cfg_.leaky_slope;
  const auto& w = p[fc_weight_].value;
  const auto& flat = t.activations.back();
  if (grads) {
    auto gw = (*grads)[fc_weight_];
    for (std::size_t i = 0; i < flat_size_; ++i) gw[i] += grad_score * flat[i];
    (*grads)[fc_bias_][0] += grad_score;
  }
  Tensor g(flat.channels(), flat.height(), flat.width());
  for (std::size_t i = 0; i < flat_size_; ++i) g[i] = grad_score * w[i];

  for (std::size_t ii = layers_.size(); ii-- > 0;) {
    const auto& l = layers_[ii];
    const Tensor& act = t.activations[ii];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= act[i] > 0 ? Real(1) : slope;
    const Tensor& in = ii == 0 ? t.input : t.activations[ii - 1];
    if (grads) kernels::conv2d_backward_weight(l.geom, in.data(), g.data(), (*grads)[l.weight], (*grads)[l.bias]);
    if (ii == 0 && !grad_input) break;
    Tensor g_in(in.channels(), in.height(), in.width());
    kernels::conv2d_backward_input(l.geom, g.data(), p[l.weight].value, g_in.data());
    g = std::move(g_in);
  }
  if (grad_input) *grad_input = std::move(g);
}

void clip_critic_weights(ParamSet& critic, Real clip_norm) {
  if (!(clip_norm > 0)) throw ValidationError("clip_norm must be > 0");
  for (auto& t : critic) {
    if (!t.is_weight) continue;
    const Real norm = t.l2_norm();
    // A rescaled tensor can sit an ulp above the bound; leave it alone so
    // clipping is idempotent.
    if (norm > clip_norm * (1 + 1e-12)) {
      const Real s = clip_norm / norm;
      for (Real& v : t.value) v *= s;
    }
  }
}

Real max_weight_norm(const ParamSet& critic) {
  Real m = 0;
  for (const auto& t : critic)
    if (t.is_weight) m = std::max(m, t.l2_norm());
  return m;
}

Model Model::create(const GeneratorConfig& gcfg, const CriticConfig& ccfg, std::uint64_t seed) {
  Model m{Generator(gcfg), Critic(ccfg, gcfg.input_side), {}};
  Rng rng = Rng::stream(seed, "init");
  Rng grng = rng.split(0), crng = rng.split(1);
  m.params.generator = m.generator.init_params(grng);
  m.params.critic = m.critic.init_params(crng);
  clip_critic_weights(m.params.critic, ccfg.clip_norm);
  return m;
}

// ----------------------------------------------------------- composition ops

ImageTensor mask_image(const ImageTensor& x, const MaskMatrix& m) {
  check_same_size(x.height(), x.width(), m, "mask_image");
  ImageTensor out(x.height(), x.width());
  const std::size_t plane = m.size();
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = m.valid(i) ? x[c * plane + i] : Real(0);
  return out;
}

NoiseTensor mask_noise(const NoiseTensor& z, const MaskMatrix& m) {
  check_same_size(z.height(), z.width(), m, "mask_noise");
  NoiseTensor out{Tensor(3, z.height(), z.width()), z.sigma};
  const std::size_t plane = m.size();
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i) out.values[c * plane + i] = m.valid(i) ? Real(0) : z.values[c * plane + i];
  return out;
}

ImageTensor compose_output(const ImageTensor& g_out, const ImageTensor& x_tilde, const MaskMatrix& m) {
  check_same_size(g_out.height(), g_out.width(), m, "compose_output");
  check_same_size(x_tilde.height(), x_tilde.width(), m, "compose_output");
  ImageTensor out(m.height(), m.width());
  const std::size_t plane = m.size();
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i) {
      const std::size_t k = c * plane + i;
      out[k] = m.valid(i) ? x_tilde[k] : g_out[k];
    }
  return out;
}

NoiseTensor sample_noise(int h, int w, Real sigma, Rng& rng) {
  if (!(sigma > 0)) throw ValidationError("noise sigma must be > 0");
  if (h <= 0 || w <= 0) throw ValidationError("noise dimensions must be positive");
  NoiseTensor z{Tensor(3, h, w), sigma};
  for (Real& v : z.values.data()) v = sigma * rng.normal();
  return z;
}

Tensor generator_input(const ImageTensor& x_tilde, const NoiseTensor& z_tilde, const MaskMatrix& m) {
  check_same_size(x_tilde.height(), x_tilde.width(), m, "generator_input");
  check_same_size(z_tilde.height(), z_tilde.width(), m, "generator_input");
  Tensor in(kGeneratorInputChannels, m.height(), m.width());
  copy_into(x_tilde.tensor(), in, 0);
  copy_into(z_tilde.values, in, 3);
  auto mc = in.channels_view(6, 1);
  for (std::size_t i = 0; i < m.size(); ++i) mc[i] = m.valid(i) ? Real(1) : Real(0);
  return in;
}

Tensor critic_input(const ImageTensor& x, const MaskMatrix& m) {
  check_same_size(x.height(), x.width(), m, "critic_input");
  Tensor in(kCriticInputChannels, m.height(), m.width());
  copy_into(x.tensor(), in, 0);
  auto mc = in.channels_view(3, 1);
  for (std::size_t i = 0; i < m.size(); ++i) mc[i] = m.valid(i) ? Real(1) : Real(0);
  return in;
}

ImageTensor generator_forward(const Model& model, const ImageTensor& x_tilde, const NoiseTensor& z_tilde,
                              const MaskMatrix& m) {
  return ImageTensor(model.generator.forward(model.params.generator, generator_input(x_tilde, z_tilde, m)));
}

Real critic_forward(const Model& model, const ImageTensor& x, const MaskMatrix& m) {
  return model.critic.forward(model.params.critic, critic_input(x, m));
}

ImageTensor inpaint(const Model& model, const ImageTensor& x, const MaskMatrix& m, Real sigma, Rng& noise_rng) {
  const ImageTensor x_tilde = mask_image(x, m);
  const NoiseTensor z_tilde = mask_noise(sample_noise(m.height(), m.width(), sigma, noise_rng), m);
  return compose_output(generator_forward(model, x_tilde, z_tilde, m), x_tilde, m);
}

}  // namespace wgain
