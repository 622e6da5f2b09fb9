#pragma once

#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>

#include "hybridgan/checkpoint.hpp"
#include "hybridgan/data.hpp"
#include "hybridgan/training.hpp"

namespace hybridgan {

template <typename Scalar>
struct TrainOptions {
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  bool keep_epoch_checkpoints = false;   // epoch_NNNN.ckpt besides latest.ckpt
  std::ostream* log = nullptr;           // one key=value line per step
  std::ostream* warnings = nullptr;
  int stop_after_epoch = 0;  // 0: run through total_epochs
  const FeatureExtractor<Scalar>* perceptual = nullptr;
  std::function<void(const TrainState<Scalar>&)> on_epoch_end;
};

/// Seeds of the per-epoch sample order and of per-sample crops.
inline std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
  return network_seed(seed ^ 0x9e3779b97f4a7c15ull, 1000 + static_cast<std::size_t>(epoch));
}
inline std::uint64_t sample_seed(std::uint64_t seed, int epoch, std::size_t index) {
  return network_seed(epoch_seed(seed, epoch), index);
}

/// Writes one step record: epoch, step, phase, learning rates and every
/// loss term present in the report.
inline void write_log_line(std::ostream& out, int epoch, std::int64_t step, Phase phase, double lr_main,
                           double lr_conditional, const LossReport& report) {
  out << "epoch=" << epoch << " step=" << step << " phase=" << to_string(phase) << std::setprecision(9)
      << " lr_main=" << lr_main << " lr_conditional=" << lr_conditional;
  if (report.cgan_role) out << " cgan_role=" << to_string(*report.cgan_role);
  for (const auto& [name, value] : report.entries()) out << ' ' << name << '=' << value;
  out << '\n';
}

namespace detail {

template <typename Scalar>
void enter_phase(TrainState<Scalar>& st, Phase phase, const TrainConfig& config) {
  if (st.phase == phase) return;
  st.phase = phase;
  if (config.reset_moments_at_phase_switch) {
    for (std::size_t i = 0; i < 6; ++i) st.optimizers[i] = make_adam_state(st.networks[i]);
  }
  if (config.clear_conditional_pools_at_phase_switch) {
    st.pools[2].clear();
    st.pools[3].clear();
  }
}

template <typename Scalar>
Tensor<Scalar> stack(const std::vector<Tensor<float>>& items) {
  const Shape4 s = items.front().shape();
  Tensor<Scalar> out(static_cast<Index>(items.size()), s.c, s.h, s.w);
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.sample(static_cast<Index>(i)) = items[i].sample(0).template cast<Scalar>();
  }
  return out;
}

}  // namespace detail

/// Runs the two-phase schedule from `resume` (or a fresh state) through
/// total_epochs. Checkpoints are written after every epoch and at the end.
template <typename Scalar>
TrainState<Scalar> train(const DatasetManifest& manifest, const ModelSpec& model, const TrainConfig& config,
                         const PreprocessConfig& preprocess_config, const TrainOptions<Scalar>& options = {},
                         std::optional<TrainState<Scalar>> resume = std::nullopt) {
  manifest.validate();
  config.validate();
  preprocess_config.validate();
  TrainState<Scalar> st = resume ? std::move(*resume)
                                 : make_train_state<Scalar>(model, config, phase_for_epoch(manifest, 1, config.paired_epochs));
  if (!st.model.identity_enabled() && options.warnings != nullptr) {
    *options.warnings << "warning: domain channel counts differ (" << st.model.x_channels << " vs "
                      << st.model.y_channels << "); identity loss disabled\n";
  }
  const ImageKind x_kind = manifest.palette ? ImageKind::label : ImageKind::photo;
  const int last_epoch = options.stop_after_epoch > 0 ? std::min(options.stop_after_epoch, config.total_epochs)
                                                      : config.total_epochs;
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  while (st.epoch <= last_epoch) {
    const Phase phase = phase_for_epoch(manifest, st.epoch, config.paired_epochs);
    if (st.step == 0) detail::enter_phase(st, phase, config);
    if (st.phase != phase) throw PhaseError("state is mid-epoch in the wrong phase");

    std::mt19937_64 order_rng(epoch_seed(config.seed, st.epoch));
    const std::vector<Sample> samples = iterate_epoch(manifest, phase, order_rng, config.reuse_paired_as_unpaired);
    const auto batch = static_cast<std::size_t>(config.batch_size);
    const double lr_main = lr_at_epoch(config.main_optimizer, st.epoch, config);
    const double lr_cond = lr_at_epoch(config.conditional_optimizer, st.epoch, config);

    for (std::size_t begin = static_cast<std::size_t>(st.step) * batch; begin < samples.size(); begin += batch) {
      std::vector<Tensor<float>> xs, ys;
      for (std::size_t i = begin; i < std::min(samples.size(), begin + batch); ++i) {
        std::mt19937_64 crop_rng(sample_seed(config.seed, st.epoch, i));
        const RgbImage x = read_png(samples[i].x);
        const RgbImage y = read_png(samples[i].y);
        if (samples[i].aligned) {
          auto [tx, ty] = preprocess_pair(x, y, preprocess_config, crop_rng, x_kind, ImageKind::photo);
          xs.push_back(std::move(tx));
          ys.push_back(std::move(ty));
        } else {
          xs.push_back(preprocess(x, preprocess_config, crop_rng, x_kind));
          ys.push_back(preprocess(y, preprocess_config, crop_rng, ImageKind::photo));
        }
      }
      const Tensor<Scalar> x = detail::stack<Scalar>(xs);
      const Tensor<Scalar> y = detail::stack<Scalar>(ys);
      const LossReport report = phase == Phase::paired
                                    ? training_step_paired(st, x, y, config, options.perceptual)
                                    : training_step_unpaired(st, x, y, config);
      if (options.log != nullptr) write_log_line(*options.log, st.epoch, st.step, phase, lr_main, lr_cond, report);
    }

    ++st.epoch;
    st.step = 0;
    if (!options.checkpoint_dir.empty()) {
      save_checkpoint(st, options.checkpoint_dir / "latest.ckpt");
      if (options.keep_epoch_checkpoints) {
        char name[32];
        std::snprintf(name, sizeof name, "epoch_%04d.ckpt", st.epoch - 1);
        save_checkpoint(st, options.checkpoint_dir / name);
      }
    }
    if (options.on_epoch_end) options.on_epoch_end(st);
  }
  if (!options.checkpoint_dir.empty() && st.epoch > config.total_epochs) {
    save_checkpoint(st, options.checkpoint_dir / "final.ckpt");
  }
  return st;
}

}  // namespace hybridgan
