// Desk-scale experiment driver (development aid).
#include <CLI11.hpp>

#include <chrono>
#include <iostream>

#include "hybridgan/eval.hpp"
#include "hybridgan/trainer.hpp"

namespace fs = std::filesystem;
using namespace hybridgan;

class PixelFeatures : public FeatureExtractor<float> {
 public:
  FeatureStack<float> extract(const Tensor<float>& image) const override { return {image}; }
  Tensor<float> backward(const Tensor<float>&, const FeatureStack<float>& d) const override { return d.front(); }
  std::vector<double> layer_weights() const override { return {1.0}; }
};

int main(int argc, char** argv) {
  CLI::App app;
  std::string task = "color_inversion";
  int paired = 10, unpaired = 190, epochs = 60, paired_epochs = 15, lr_constant = 30, seed = 1, data_seed = 7;
  Index width = 16, resblocks = 3;
  double lambda_identity = 5, lambda_cycle = 10, lr = 2e-4, lr_cond = 1e-4;
  bool perceptual = false, clear_pools = false;
  int eval_every = 1;
  app.add_option("--task", task);
  app.add_option("--paired", paired);
  app.add_option("--unpaired", unpaired);
  app.add_option("--epochs", epochs);
  app.add_option("--paired-epochs", paired_epochs);
  app.add_option("--lr-constant", lr_constant);
  app.add_option("--seed", seed);
  app.add_option("--data-seed", data_seed);
  app.add_option("--width", width);
  app.add_option("--resblocks", resblocks);
  app.add_option("--lambda-identity", lambda_identity);
  app.add_option("--lambda-cycle", lambda_cycle);
  app.add_option("--lr", lr);
  app.add_option("--lr-cond", lr_cond);
  app.add_flag("--perceptual", perceptual);
  app.add_flag("--clear-pools", clear_pools);
  app.add_option("--eval-every", eval_every);
  CLI11_PARSE(app, argc, argv);

  const fs::path dir = fs::temp_directory_path() / ("hg-exp-" + task + "-" + std::to_string(paired) + "-" +
                                                    std::to_string(unpaired) + "-" + std::to_string(data_seed));
  SyntheticTaskSpec spec;
  spec.task = synthetic_task_from(task);
  spec.num_paired = paired;
  spec.num_unpaired = unpaired;
  spec.num_test = 50;
  spec.seed = data_seed;
  const DatasetManifest manifest = generate_synthetic(spec, dir);
  const DatasetManifest test = load_manifest(dir / "test_manifest.txt");

  ModelSpec model;
  model.generator.base_filters = width;
  model.generator.num_resblocks = resblocks;
  model.discriminator.layer_filters = {width, 2 * width, 4 * width, 8 * width};
  TrainConfig config;
  config.total_epochs = epochs;
  config.paired_epochs = paired_epochs;
  config.lr_constant_epochs = lr_constant;
  config.seed = seed;
  config.weights.lambda_identity = lambda_identity;
  config.weights.lambda_cycle_l1 = lambda_cycle;
  config.main_optimizer.base_lr = lr;
  config.conditional_optimizer.base_lr = lr_cond;
  config.clear_conditional_pools_at_phase_switch = clear_pools;
  PreprocessConfig pre;
  pre.load_size = pre.crop_size = 32;

  std::vector<std::pair<Tensor<float>, Tensor<float>>> pairs;
  for (const auto& e : test.paired) {
    pairs.emplace_back(preprocess_eval(read_png(e.x), pre, manifest.palette ? ImageKind::label : ImageKind::photo),
                       preprocess_eval(read_png(e.y), pre));
  }
  PixelFeatures features;
  TrainOptions<float> options;
  if (perceptual) options.perceptual = &features;
  const auto t0 = std::chrono::steady_clock::now();
  options.on_epoch_end = [&](const TrainState<float>& st) {
    const int epoch = st.epoch - 1;
    if (epoch % eval_every != 0 && epoch != epochs) return;
    double l1 = 0, back = 0;
    for (const auto& [x, y] : pairs) {
      l1 += mean_abs_diff(generator_forward(st.networks[G1], x), y) / pairs.size();
      back += mean_abs_diff(generator_forward(st.networks[G2], y), x) / pairs.size();
    }
    std::cout << "epoch " << epoch << " " << to_string(st.phase) << " L1(G1)=" << l1 << " L1(G2)=" << back;
    if (test.palette) {
      EvalOptions eo;
      eo.preprocess = pre;
      const auto r = evaluate_translation(st.networks[G2], test, test.palette, EvalDirection::photo_to_label, nullptr, eo);
      std::cout << " pixacc=" << r.metrics.pixel_accuracy << " iu=" << r.metrics.mean_iu;
    }
    std::cout << " t=" << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << std::endl;
  };
  train<float>(manifest, model, config, pre, options);
}
