#pragma once

#include "vaelab/adam.hpp"
#include "vaelab/datasets.hpp"
#include "vaelab/layers.hpp"
#include "vaelab/rng.hpp"
#include "vaelab/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace vaelab {

// Dense VAE: encoder body -> (mu head, logvar head) -> reparametrized z
// -> decoder. Hidden layers are relu, both heads are identity (the
// variance head carries log sigma^2 so sigma^2 > 0 by construction) and
// the decoder output is sigmoid, pixels in (0, 1).
struct VaeModel {
  std::vector<DenseLayer> encoder_body;
  DenseLayer mu_head;
  DenseLayer logvar_head;
  std::vector<DenseLayer> decoder;
  Index input_dim = 0;
  Index latent_dim = 0;
};

// dims = {input, hidden..., latent}, e.g. {784, 256, 32, 24, 16}. The
// decoder mirrors the encoder. Weights are Glorot-uniform from rng in a
// pinned order (encoder body, mu head, logvar head, decoder).
VaeModel build_vae(const std::vector<Index>& dims, Rng& rng);

struct EncoderOutput {
  Matrix mu;      // batch x latent
  Matrix logvar;  // batch x latent
};

struct LatentSample {
  Matrix z;    // mu + exp(logvar/2) .* eps
  Matrix eps;  // the standard normal draws used
};

enum class PenaltyMode { kl, quadratic_mu };

struct TrainConfig {
  int epochs = 10;
  Index batch_size = 128;
  double lambda = 1.0;  // weight of the regularizer against the SSE term
  bool sampling_enabled = true;
  PenaltyMode penalty_mode = PenaltyMode::kl;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
};

// Throws ConfigError on an invalid combination (quadratic_mu requires
// sampling disabled, batch_size >= 1, lambda >= 0, ...).
void validate(const TrainConfig& config);

struct MinibatchRecord {
  int epoch = 0;
  int batch = 0;
  double reconstruction_loss = 0;  // batch mean per-image SSE
  double total_kl = 0;             // batch mean per-image KL (all coordinates)
  Vector mean_sigma2;              // per latent coordinate, batch mean of sigma^2(X)
  Vector var_mu;                   // per latent coordinate, batch variance of mu
};

struct TrainLog {
  std::vector<MinibatchRecord> records;
};

EncoderOutput encode(const VaeModel& model, const Eigen::Ref<const Matrix>& x);

// z = mu + exp(logvar/2) .* eps with fresh eps ~ N(0,1), drawn row by
// row. Gradients flow to mu/logvar, never to eps.
LatentSample reparameterize(const EncoderOutput& enc, Rng& rng);
LatentSample reparameterize_with_noise(const EncoderOutput& enc,
                                       const Eigen::Ref<const Matrix>& eps);

Matrix decode(const VaeModel& model, const Eigen::Ref<const Matrix>& z);

struct KlResult {
  Vector per_variable;  // batch mean of 1/2 (mu^2 + s^2 - log s^2 - 1) per coordinate
  double total = 0;     // sum over coordinates
};

// Closed-form Gaussian KL against the N(0, I) prior, batch-averaged.
KlResult kl_term(const EncoderOutput& enc);

struct LossParts {
  double total = 0;           // reconstruction + lambda * penalty
  double reconstruction = 0;  // batch mean per-image SSE
  double penalty = 0;         // KL total, or 1/2 sum mu^2 in quadratic_mu mode
  Vector kl_per_variable;     // always the actual KL, whatever the mode
};

LossParts vae_loss(const Eigen::Ref<const Matrix>& x, const VaeModel& model,
                   const TrainConfig& config, Rng& rng);

// Gradient of vae_loss w.r.t. every parameter, flattened in
// flatten_parameters order. rng is consumed exactly as vae_loss does, so
// seeding both identically checks the same stochastic loss.
Vector vae_loss_gradient(const Eigen::Ref<const Matrix>& x, const VaeModel& model,
                         const TrainConfig& config, Rng& rng);

// Hooks used by the noise-injection experiment: coordinates in `frozen`
// have their head outputs overwritten with (mu=0, logvar=0) and are
// excluded from the KL sum; `noise_coord` gets amplitude * N(0,1) added
// to its sampled z before decoding.
struct StepHooks {
  const std::vector<Index>* frozen = nullptr;
  Index noise_coord = -1;
  double noise_amplitude = 0.0;
};

std::vector<AdamState> make_optimizer(const VaeModel& model, const TrainConfig& config);

// One epoch of shuffled minibatch Adam over `images`. Appends one record
// per minibatch to log when given. Throws TrainingError on non-finite
// loss or gradients, reporting the last fully completed epoch.
void train_epoch(VaeModel& model, const Matrix& images, const TrainConfig& config,
                 int epoch, Rng& rng, std::vector<AdamState>& optimizer,
                 TrainLog* log, const StepHooks& hooks = {});

// Full training loop: config.epochs epochs of minibatch Adam, seeded by
// config.seed. The model is updated in place.
TrainLog train(VaeModel& model, const Dataset& dataset, const TrainConfig& config);

// n images decoded from z ~ N(0, I); coordinates listed in zero_mask are
// forced to 0 before decoding.
Matrix sample_prior(const VaeModel& model, Index n, Rng& rng,
                    const std::vector<Index>& zero_mask = {});

// Binary model format: magic "VAES", little-endian u32 version,
// architecture header, then raw f64 parameter blocks in declaration
// order (per layer: W row-major, then b). Round-trips bit-exactly.
void save_model(const VaeModel& model, const std::filesystem::path& path);
VaeModel load_model(const std::filesystem::path& path);

Index parameter_count(const VaeModel& model);
Vector flatten_parameters(const VaeModel& model);
void set_parameters(VaeModel& model, const Eigen::Ref<const Vector>& params);

}  // namespace vaelab
