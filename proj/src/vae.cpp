#include "vaelab/vae.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace vaelab {

namespace {

template <typename ModelT, typename F>
void for_each_layer(ModelT& model, F&& f) {
  for (auto& l : model.encoder_body) f(l);
  f(model.mu_head);
  f(model.logvar_head);
  for (auto& l : model.decoder) f(l);
}

struct DenseGrads {
  Matrix W;
  Vector b;
};

struct ModelGrads {
  std::vector<DenseGrads> encoder_body;
  DenseGrads mu_head;
  DenseGrads logvar_head;
  std::vector<DenseGrads> decoder;
};

ModelGrads make_grads(const VaeModel& model) {
  ModelGrads g;
  g.encoder_body.resize(model.encoder_body.size());
  g.decoder.resize(model.decoder.size());
  return g;
}

struct LossOptions {
  double lambda = 1.0;
  bool sampling = true;
  PenaltyMode mode = PenaltyMode::kl;
  const std::vector<Index>* frozen = nullptr;
  Index noise_coord = -1;
  double noise_amplitude = 0.0;
};

LossOptions options_from(const TrainConfig& cfg, const StepHooks& hooks) {
  LossOptions opt;
  opt.lambda = cfg.lambda;
  opt.sampling = cfg.sampling_enabled;
  opt.mode = cfg.penalty_mode;
  opt.frozen = hooks.frozen;
  opt.noise_coord = hooks.noise_coord;
  opt.noise_amplitude = hooks.noise_amplitude;
  return opt;
}

struct ForwardResult {
  std::vector<Matrix> enc_acts;  // outputs of the encoder body layers
  Matrix mu;
  Matrix logvar;
  Matrix sigma;  // exp(logvar/2), filled only when sampling
  Matrix eps;    // filled only when sampling
  Matrix z;
  std::vector<Matrix> dec_acts;  // outputs of the decoder layers, back() = xhat
};

Matrix draw_normal_matrix(Rng& rng, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

ForwardResult forward_pass(const VaeModel& model, const Eigen::Ref<const Matrix>& x,
                           const LossOptions& opt, Rng* rng) {
  ForwardResult f;
  f.enc_acts.reserve(model.encoder_body.size());
  for (std::size_t k = 0; k < model.encoder_body.size(); ++k) {
    const Eigen::Ref<const Matrix> in =
        k == 0 ? Eigen::Ref<const Matrix>(x) : Eigen::Ref<const Matrix>(f.enc_acts[k - 1]);
    f.enc_acts.push_back(dense_forward(model.encoder_body[k], in));
  }
  const Eigen::Ref<const Matrix> head_in =
      f.enc_acts.empty() ? Eigen::Ref<const Matrix>(x)
                         : Eigen::Ref<const Matrix>(f.enc_acts.back());
  f.mu = dense_forward(model.mu_head, head_in);
  f.logvar = dense_forward(model.logvar_head, head_in);

  if (opt.frozen) {
    for (Index idx : *opt.frozen) {
      f.mu.col(idx).setZero();
      f.logvar.col(idx).setZero();  // sigma^2 = 1
    }
  }

  if (opt.sampling) {
    f.eps = draw_normal_matrix(*rng, f.mu.rows(), f.mu.cols());
    f.sigma = (0.5 * f.logvar.array()).exp().matrix();
    f.z = (f.mu.array() + f.sigma.array() * f.eps.array()).matrix();
  } else {
    f.z = f.mu;
  }

  if (opt.noise_coord >= 0 && opt.noise_amplitude > 0.0) {
    for (Index r = 0; r < f.z.rows(); ++r)
      f.z(r, opt.noise_coord) += opt.noise_amplitude * rng->normal();
  }

  f.dec_acts.reserve(model.decoder.size());
  for (std::size_t j = 0; j < model.decoder.size(); ++j) {
    const Eigen::Ref<const Matrix> in =
        j == 0 ? Eigen::Ref<const Matrix>(f.z) : Eigen::Ref<const Matrix>(f.dec_acts[j - 1]);
    f.dec_acts.push_back(dense_forward(model.decoder[j], in));
  }
  return f;
}

LossParts loss_parts_from(const Eigen::Ref<const Matrix>& x, const ForwardResult& f,
                          const LossOptions& opt) {
  const double batch = static_cast<double>(x.rows());
  LossParts parts;
  parts.reconstruction = (x - f.dec_acts.back()).squaredNorm() / batch;
  parts.kl_per_variable =
      (0.5 * (f.mu.array().square() + f.logvar.array().exp() - f.logvar.array() - 1.0))
          .colwise()
          .mean()
          .matrix()
          .transpose();
  if (opt.frozen) {
    for (Index idx : *opt.frozen) parts.kl_per_variable[idx] = 0.0;
  }
  const double kl_total = parts.kl_per_variable.sum();
  parts.penalty = opt.mode == PenaltyMode::kl
                      ? kl_total
                      : 0.5 * f.mu.squaredNorm() / batch;
  parts.total = parts.reconstruction + opt.lambda * parts.penalty;
  return parts;
}

void backward_pass(const VaeModel& model, const Eigen::Ref<const Matrix>& x,
                   const LossOptions& opt, const ForwardResult& f, ModelGrads& g) {
  const double inv_batch = 1.0 / static_cast<double>(x.rows());

  // decoder, from the output layer down to z
  Matrix up = (2.0 * inv_batch) * (f.dec_acts.back() - x);
  for (std::size_t j = model.decoder.size(); j-- > 0;) {
    const Eigen::Ref<const Matrix> in =
        j == 0 ? Eigen::Ref<const Matrix>(f.z) : Eigen::Ref<const Matrix>(f.dec_acts[j - 1]);
    DenseBackward bk = dense_backward_from_output(model.decoder[j], in, f.dec_acts[j], up);
    g.decoder[j].W = std::move(bk.grad_w);
    g.decoder[j].b = std::move(bk.grad_b);
    up = std::move(bk.grad_x);
  }

  // through the reparametrization into the two heads; the injected noise
  // is an additive constant, so d z / d z_base = 1
  Matrix dmu = up;
  Matrix dlv;
  if (opt.sampling) {
    dlv = (0.5 * (up.array() * f.eps.array() * f.sigma.array())).matrix();
  } else {
    dlv = Matrix::Zero(f.mu.rows(), f.mu.cols());
  }
  if (opt.mode == PenaltyMode::kl) {
    dmu.array() += (opt.lambda * inv_batch) * f.mu.array();
    dlv.array() += (0.5 * opt.lambda * inv_batch) * (f.logvar.array().exp() - 1.0);
  } else {
    dmu.array() += (opt.lambda * inv_batch) * f.mu.array();
  }
  if (opt.frozen) {
    for (Index idx : *opt.frozen) {
      dmu.col(idx).setZero();
      dlv.col(idx).setZero();
    }
  }

  const Eigen::Ref<const Matrix> head_in =
      f.enc_acts.empty() ? Eigen::Ref<const Matrix>(x)
                         : Eigen::Ref<const Matrix>(f.enc_acts.back());
  DenseBackward mu_bk = dense_backward_from_output(model.mu_head, head_in, f.mu, dmu);
  DenseBackward lv_bk = dense_backward_from_output(model.logvar_head, head_in, f.logvar, dlv);
  g.mu_head.W = std::move(mu_bk.grad_w);
  g.mu_head.b = std::move(mu_bk.grad_b);
  g.logvar_head.W = std::move(lv_bk.grad_w);
  g.logvar_head.b = std::move(lv_bk.grad_b);

  Matrix denc = mu_bk.grad_x + lv_bk.grad_x;
  for (std::size_t k = model.encoder_body.size(); k-- > 0;) {
    const Eigen::Ref<const Matrix> in =
        k == 0 ? Eigen::Ref<const Matrix>(x) : Eigen::Ref<const Matrix>(f.enc_acts[k - 1]);
    DenseBackward bk =
        dense_backward_from_output(model.encoder_body[k], in, f.enc_acts[k], denc);
    g.encoder_body[k].W = std::move(bk.grad_w);
    g.encoder_body[k].b = std::move(bk.grad_b);
    denc = std::move(bk.grad_x);
  }
}

// Visits (param, grad, name) per block in the same order everywhere:
// encoder body, mu head, logvar head, decoder; W before b.
template <typename F>
void zip_blocks(VaeModel& model, ModelGrads& g, F&& f) {
  auto visit = [&](DenseLayer& l, DenseGrads& gr, const std::string& name) {
    f(l.W, gr.W, name + ".W");
    f(l.b, gr.b, name + ".b");
  };
  for (std::size_t i = 0; i < model.encoder_body.size(); ++i)
    visit(model.encoder_body[i], g.encoder_body[i], "encoder[" + std::to_string(i) + "]");
  visit(model.mu_head, g.mu_head, "mu_head");
  visit(model.logvar_head, g.logvar_head, "logvar_head");
  for (std::size_t i = 0; i < model.decoder.size(); ++i)
    visit(model.decoder[i], g.decoder[i], "decoder[" + std::to_string(i) + "]");
}

Vector flatten_grads(const VaeModel& model, ModelGrads& g) {
  Vector out(parameter_count(model));
  Index pos = 0;
  zip_blocks(const_cast<VaeModel&>(model), g,
             [&](const auto& /*param*/, const auto& grad, const std::string&) {
               for (Index r = 0; r < grad.rows(); ++r)
                 for (Index c = 0; c < grad.cols(); ++c) out[pos++] = grad(r, c);
             });
  return out;
}

}  // namespace

VaeModel build_vae(const std::vector<Index>& dims, Rng& rng) {
  if (dims.size() < 2) {
    throw ConfigError("build_vae: need at least {input, latent} dimensions");
  }
  for (Index d : dims) {
    if (d < 1) throw ConfigError("build_vae: layer sizes must be positive");
  }
  VaeModel m;
  m.input_dim = dims.front();
  m.latent_dim = dims.back();
  const Index head_in = dims[dims.size() - 2];
  for (std::size_t k = 0; k + 2 < dims.size(); ++k) {
    m.encoder_body.push_back(make_dense(dims[k], dims[k + 1], Activation::relu, rng));
  }
  m.mu_head = make_dense(head_in, m.latent_dim, Activation::identity, rng);
  m.logvar_head = make_dense(head_in, m.latent_dim, Activation::identity, rng);
  for (std::size_t k = dims.size() - 1; k >= 1; --k) {
    const Activation act = k == 1 ? Activation::sigmoid : Activation::relu;
    m.decoder.push_back(make_dense(dims[k], dims[k - 1], act, rng));
  }
  return m;
}

void validate(const TrainConfig& config) {
  if (config.batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
  if (config.lambda < 0.0) throw ConfigError("TrainConfig: lambda must be >= 0");
  if (config.epochs < 0) throw ConfigError("TrainConfig: epochs must be >= 0");
  if (config.learning_rate <= 0.0) throw ConfigError("TrainConfig: learning_rate must be > 0");
  if (config.penalty_mode == PenaltyMode::quadratic_mu && config.sampling_enabled) {
    throw ConfigError("TrainConfig: quadratic_mu penalty requires sampling disabled");
  }
}

EncoderOutput encode(const VaeModel& model, const Eigen::Ref<const Matrix>& x) {
  require_cols(x, model.input_dim, "encode: input");
  LossOptions opt;
  opt.sampling = false;
  ForwardResult f;
  f.enc_acts.reserve(model.encoder_body.size());
  for (std::size_t k = 0; k < model.encoder_body.size(); ++k) {
    const Eigen::Ref<const Matrix> in =
        k == 0 ? Eigen::Ref<const Matrix>(x) : Eigen::Ref<const Matrix>(f.enc_acts[k - 1]);
    f.enc_acts.push_back(dense_forward(model.encoder_body[k], in));
  }
  const Eigen::Ref<const Matrix> head_in =
      f.enc_acts.empty() ? Eigen::Ref<const Matrix>(x)
                         : Eigen::Ref<const Matrix>(f.enc_acts.back());
  EncoderOutput enc;
  enc.mu = dense_forward(model.mu_head, head_in);
  enc.logvar = dense_forward(model.logvar_head, head_in);
  return enc;
}

LatentSample reparameterize(const EncoderOutput& enc, Rng& rng) {
  LatentSample s;
  s.eps = draw_normal_matrix(rng, enc.mu.rows(), enc.mu.cols());
  s.z = (enc.mu.array() + (0.5 * enc.logvar.array()).exp() * s.eps.array()).matrix();
  return s;
}

LatentSample reparameterize_with_noise(const EncoderOutput& enc,
                                       const Eigen::Ref<const Matrix>& eps) {
  if (eps.rows() != enc.mu.rows() || eps.cols() != enc.mu.cols()) {
    throw DimensionError("reparameterize: eps " + shape_str(eps) + " vs mu " +
                         shape_str(enc.mu));
  }
  LatentSample s;
  s.eps = eps;
  s.z = (enc.mu.array() + (0.5 * enc.logvar.array()).exp() * eps.array()).matrix();
  return s;
}

Matrix decode(const VaeModel& model, const Eigen::Ref<const Matrix>& z) {
  require_cols(z, model.latent_dim, "decode: latent input");
  Matrix h = z;
  for (const auto& layer : model.decoder) h = dense_forward(layer, h);
  return h;
}

KlResult kl_term(const EncoderOutput& enc) {
  KlResult r;
  r.per_variable =
      (0.5 * (enc.mu.array().square() + enc.logvar.array().exp() - enc.logvar.array() - 1.0))
          .colwise()
          .mean()
          .matrix()
          .transpose();
  r.total = r.per_variable.sum();
  return r;
}

LossParts vae_loss(const Eigen::Ref<const Matrix>& x, const VaeModel& model,
                   const TrainConfig& config, Rng& rng) {
  validate(config);
  require_cols(x, model.input_dim, "vae_loss: input");
  const LossOptions opt = options_from(config, {});
  const ForwardResult f = forward_pass(model, x, opt, &rng);
  return loss_parts_from(x, f, opt);
}

Vector vae_loss_gradient(const Eigen::Ref<const Matrix>& x, const VaeModel& model,
                         const TrainConfig& config, Rng& rng) {
  validate(config);
  require_cols(x, model.input_dim, "vae_loss_gradient: input");
  const LossOptions opt = options_from(config, {});
  const ForwardResult f = forward_pass(model, x, opt, &rng);
  ModelGrads g = make_grads(model);
  backward_pass(model, x, opt, f, g);
  return flatten_grads(model, g);
}

std::vector<AdamState> make_optimizer(const VaeModel& model, const TrainConfig& config) {
  AdamConfig hp;
  hp.lr = config.learning_rate;
  std::vector<AdamState> states;
  for_each_layer(model, [&](const DenseLayer& l) {
    states.push_back(make_adam_state(l.W.rows(), l.W.cols(), hp));
    states.push_back(make_adam_state(l.b.size(), 1, hp));
  });
  return states;
}

void train_epoch(VaeModel& model, const Matrix& images, const TrainConfig& config,
                 int epoch, Rng& rng, std::vector<AdamState>& optimizer, TrainLog* log,
                 const StepHooks& hooks) {
  const LossOptions opt = options_from(config, hooks);
  const auto batches = minibatches(images.rows(), config.batch_size, rng);
  ModelGrads grads = make_grads(model);

  int batch_index = 0;
  for (const auto& batch : batches) {
    const Matrix x = images(batch, Eigen::all);
    const ForwardResult f = forward_pass(model, x, opt, &rng);
    const LossParts parts = loss_parts_from(x, f, opt);
    if (!std::isfinite(parts.total)) {
      throw TrainingError("training diverged: non-finite loss in epoch " +
                              std::to_string(epoch) + ", batch " +
                              std::to_string(batch_index) + "; last good epoch " +
                              std::to_string(epoch - 1),
                          epoch - 1);
    }
    backward_pass(model, x, opt, f, grads);

    try {
      std::size_t block = 0;
      zip_blocks(model, grads, [&](auto& param, const auto& grad, const std::string& name) {
        Eigen::Map<Matrix> p(param.data(), param.rows(), param.cols());
        Eigen::Map<const Matrix> gm(grad.data(), grad.rows(), grad.cols());
        adam_step(p, gm, optimizer[block++], name);
      });
    } catch (const TrainingError& err) {
      throw TrainingError(std::string(err.what()) + " in epoch " + std::to_string(epoch) +
                              "; last good epoch " + std::to_string(epoch - 1),
                          epoch - 1);
    }

    if (log) {
      MinibatchRecord rec;
      rec.epoch = epoch;
      rec.batch = batch_index;
      rec.reconstruction_loss = parts.reconstruction;
      rec.total_kl = parts.kl_per_variable.sum();
      rec.mean_sigma2 = f.logvar.array().exp().colwise().mean().matrix().transpose();
      const RowVector mean_mu = f.mu.colwise().mean();
      rec.var_mu = (f.mu.rowwise() - mean_mu).array().square().colwise().mean().matrix().transpose();
      log->records.push_back(std::move(rec));
    }
    ++batch_index;
  }
}

TrainLog train(VaeModel& model, const Dataset& dataset, const TrainConfig& config) {
  validate(config);
  if (dataset.size() == 0) throw ConfigError("train: dataset is empty");
  require_cols(dataset.images, model.input_dim, "train: dataset images");

  Rng rng(config.seed, /*stream=*/1);
  auto optimizer = make_optimizer(model, config);
  TrainLog log;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    train_epoch(model, dataset.images, config, epoch, rng, optimizer, &log);
  }
  return log;
}

Matrix sample_prior(const VaeModel& model, Index n, Rng& rng,
                    const std::vector<Index>& zero_mask) {
  for (Index idx : zero_mask) {
    if (idx < 0 || idx >= model.latent_dim) {
      throw std::out_of_range("sample_prior: zero_mask index " + std::to_string(idx) +
                              " out of range for latent_dim " +
                              std::to_string(model.latent_dim));
    }
  }
  Matrix z = draw_normal_matrix(rng, n, model.latent_dim);
  for (Index idx : zero_mask) z.col(idx).setZero();
  return decode(model, z);
}

namespace {

constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint8_t kMagic[4] = {'V', 'A', 'E', 'S'};

void put_u32(std::ofstream& out, std::uint32_t v) {
  const std::uint8_t buf[4] = {std::uint8_t(v), std::uint8_t(v >> 8),
                               std::uint8_t(v >> 16), std::uint8_t(v >> 24)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

void put_f64(std::ofstream& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = std::uint8_t(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

struct ByteReader {
  std::vector<std::uint8_t> bytes;
  std::size_t pos = 0;
  std::string path;

  void need(std::size_t n, const std::string& what) {
    if (pos + n > bytes.size()) {
      throw FormatError(path + ": truncated at offset " + std::to_string(pos) +
                        " while reading " + what);
    }
  }
  std::uint8_t u8(const std::string& what) {
    need(1, what);
    return bytes[pos++];
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    const std::uint32_t v = std::uint32_t(bytes[pos]) | std::uint32_t(bytes[pos + 1]) << 8 |
                            std::uint32_t(bytes[pos + 2]) << 16 |
                            std::uint32_t(bytes[pos + 3]) << 24;
    pos += 4;
    return v;
  }
  double f64(const std::string& what) {
    need(8, what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes[pos + i]) << (8 * i);
    pos += 8;
    return std::bit_cast<double>(bits);
  }
};

struct LayerHeader {
  Index in = 0;
  Index out = 0;
  Activation act = Activation::identity;
};

LayerHeader read_layer_header(ByteReader& r) {
  LayerHeader h;
  h.in = static_cast<Index>(r.u32("layer in-size"));
  h.out = static_cast<Index>(r.u32("layer out-size"));
  const std::uint8_t code = r.u8("activation code");
  if (code > 2) {
    throw FormatError(r.path + ": unknown activation code " + std::to_string(code) +
                      " at offset " + std::to_string(r.pos - 1));
  }
  h.act = static_cast<Activation>(code);
  return h;
}

DenseLayer read_layer_params(ByteReader& r, const LayerHeader& h) {
  DenseLayer l;
  l.activation = h.act;
  l.W.resize(h.out, h.in);
  for (Index row = 0; row < h.out; ++row)
    for (Index col = 0; col < h.in; ++col) l.W(row, col) = r.f64("weights");
  l.b.resize(h.out);
  for (Index i = 0; i < h.out; ++i) l.b[i] = r.f64("bias");
  return l;
}

}  // namespace

void save_model(const VaeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(kMagic), 4);
  put_u32(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(model.input_dim));
  put_u32(out, static_cast<std::uint32_t>(model.latent_dim));
  put_u32(out, static_cast<std::uint32_t>(model.encoder_body.size()));
  put_u32(out, static_cast<std::uint32_t>(model.decoder.size()));
  for_each_layer(model, [&](const DenseLayer& l) {
    put_u32(out, static_cast<std::uint32_t>(l.in_size()));
    put_u32(out, static_cast<std::uint32_t>(l.out_size()));
    const std::uint8_t code = static_cast<std::uint8_t>(l.activation);
    out.write(reinterpret_cast<const char*>(&code), 1);
  });
  for_each_layer(model, [&](const DenseLayer& l) {
    for (Index r = 0; r < l.W.rows(); ++r)
      for (Index c = 0; c < l.W.cols(); ++c) put_f64(out, l.W(r, c));
    for (Index i = 0; i < l.b.size(); ++i) put_f64(out, l.b[i]);
  });
  if (!out) throw FormatError("write error on " + path.string());
}

VaeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  ByteReader r;
  r.path = path.string();
  r.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());

  r.need(4, "magic");
  if (!(r.bytes[0] == 'V' && r.bytes[1] == 'A' && r.bytes[2] == 'E' && r.bytes[3] == 'S')) {
    throw FormatError(r.path + ": bad magic at offset 0, expected \"VAES\"");
  }
  r.pos = 4;
  const std::uint32_t version = r.u32("version");
  if (version != kModelVersion) {
    throw FormatError(r.path + ": unsupported version " + std::to_string(version) +
                      " at offset 4");
  }

  VaeModel m;
  m.input_dim = static_cast<Index>(r.u32("input_dim"));
  m.latent_dim = static_cast<Index>(r.u32("latent_dim"));
  const std::uint32_t n_body = r.u32("encoder body count");
  const std::uint32_t n_dec = r.u32("decoder count");

  std::vector<LayerHeader> headers;
  headers.reserve(n_body + 2 + n_dec);
  for (std::uint32_t i = 0; i < n_body + 2 + n_dec; ++i) headers.push_back(read_layer_header(r));

  // architecture consistency
  Index expect_in = m.input_dim;
  for (std::uint32_t i = 0; i < n_body; ++i) {
    if (headers[i].in != expect_in) {
      throw FormatError(r.path + ": encoder layer " + std::to_string(i) +
                        " in-size mismatch");
    }
    expect_in = headers[i].out;
  }
  for (std::uint32_t h = 0; h < 2; ++h) {
    const LayerHeader& head = headers[n_body + h];
    if (head.in != expect_in || head.out != m.latent_dim) {
      throw FormatError(r.path + ": head layer dimensions inconsistent with latent_dim");
    }
  }
  Index dec_in = m.latent_dim;
  for (std::uint32_t i = 0; i < n_dec; ++i) {
    const LayerHeader& d = headers[n_body + 2 + i];
    if (d.in != dec_in) {
      throw FormatError(r.path + ": decoder layer " + std::to_string(i) +
                        " in-size mismatch");
    }
    dec_in = d.out;
  }
  if (n_dec > 0 && dec_in != m.input_dim) {
    throw FormatError(r.path + ": decoder output size does not match input_dim");
  }

  std::size_t next = 0;
  for (std::uint32_t i = 0; i < n_body; ++i)
    m.encoder_body.push_back(read_layer_params(r, headers[next++]));
  m.mu_head = read_layer_params(r, headers[next++]);
  m.logvar_head = read_layer_params(r, headers[next++]);
  for (std::uint32_t i = 0; i < n_dec; ++i)
    m.decoder.push_back(read_layer_params(r, headers[next++]));
  return m;
}

Index parameter_count(const VaeModel& model) {
  Index n = 0;
  for_each_layer(model, [&](const DenseLayer& l) { n += l.W.size() + l.b.size(); });
  return n;
}

Vector flatten_parameters(const VaeModel& model) {
  Vector out(parameter_count(model));
  Index pos = 0;
  for_each_layer(model, [&](const DenseLayer& l) {
    for (Index r = 0; r < l.W.rows(); ++r)
      for (Index c = 0; c < l.W.cols(); ++c) out[pos++] = l.W(r, c);
    for (Index i = 0; i < l.b.size(); ++i) out[pos++] = l.b[i];
  });
  return out;
}

void set_parameters(VaeModel& model, const Eigen::Ref<const Vector>& params) {
  if (params.size() != parameter_count(model)) {
    throw DimensionError("set_parameters: expected " +
                         std::to_string(parameter_count(model)) + " values, got " +
                         std::to_string(params.size()));
  }
  Index pos = 0;
  for_each_layer(model, [&](DenseLayer& l) {
    for (Index r = 0; r < l.W.rows(); ++r)
      for (Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = params[pos++];
    for (Index i = 0; i < l.b.size(); ++i) l.b[i] = params[pos++];
  });
}

}  // namespace vaelab
