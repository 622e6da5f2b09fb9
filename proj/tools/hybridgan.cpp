#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "hybridgan/checkpoint.hpp"
#include "hybridgan/eval.hpp"
#include "hybridgan/run_config.hpp"
#include "hybridgan/trainer.hpp"

namespace fs = std::filesystem;
using namespace hybridgan;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

fs::path output_root() {
  const char* env = std::getenv("HYBRIDGAN_OUTPUT_ROOT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

std::vector<fs::path> png_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("input directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

int cmd_train(const std::optional<fs::path>& config_file, const std::vector<std::string>& overrides,
              const std::optional<fs::path>& resume) {
  RunConfig config = load_run_config(config_file, overrides);
  if (config.manifest.empty()) throw ConfigError("no manifest given (set run.manifest)");
  if (config.output_dir.empty()) config.output_dir = output_root() / "train";
  config.manifest = fs::absolute(config.manifest);
  const DatasetManifest manifest = load_manifest(config.manifest);
  fs::create_directories(config.output_dir);
  {
    std::ofstream resolved(config.output_dir / "resolved_config.ini");
    resolved << render_run_config(config);
    if (!resolved) throw IoError("cannot write the resolved config into '" + config.output_dir.string() + "'");
  }
  std::ofstream log(config.output_dir / "train.log", resume ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot open the training log in '" + config.output_dir.string() + "'");

  TrainOptions<float> options;
  options.checkpoint_dir = config.output_dir / "checkpoints";
  options.keep_epoch_checkpoints = config.keep_epoch_checkpoints;
  options.log = &log;
  options.warnings = &std::cerr;
  options.on_epoch_end = [&](const TrainState<float>& st) {
    log.flush();
    std::cout << "epoch " << st.epoch - 1 << '/' << config.train.total_epochs << " done (" << to_string(st.phase)
              << ")" << std::endl;
  };
  std::optional<TrainState<float>> start;
  if (resume) start = load_checkpoint<float>(*resume);
  train<float>(manifest, config.model, config.train, config.preprocess, options, std::move(start));
  std::cout << "final checkpoint: " << (options.checkpoint_dir / "final.ckpt").string() << std::endl;
  return 0;
}

PreprocessConfig eval_preprocess(int size, const fs::path& sample) {
  PreprocessConfig p;
  const int side = size > 0 ? size : read_png(sample).width / 4 * 4;
  p.load_size = p.crop_size = side;
  return p;
}

int cmd_translate(const fs::path& checkpoint, const fs::path& input, const fs::path& output,
                  const std::string& direction, int size) {
  if (direction != "x2y" && direction != "y2x") throw ConfigError("direction must be x2y or y2x");
  const TrainState<float> st = load_checkpoint<float>(checkpoint);
  const auto& generator = st.networks[direction == "x2y" ? G1 : G2];
  const auto files = png_files(input);
  if (files.empty()) {
    std::cerr << "warning: no PNG files in '" << input.string() << "'\n";
    return 0;
  }
  fs::create_directories(output);
  for (const auto& file : files) {
    const PreprocessConfig p = eval_preprocess(size, file);
    const Tensor<float> in = preprocess_eval(read_png(file), p);
    write_png(output / file.filename(), tensor_to_rgb(generator_forward(generator, in)));
  }
  std::cout << "translated " << files.size() << " image(s) into " << output.string() << std::endl;
  return 0;
}

int cmd_evaluate(const fs::path& checkpoint, const fs::path& manifest_path, const std::string& direction_name,
                 const std::optional<std::string>& segmenter_command, std::optional<fs::path> output, int size) {
  const EvalDirection direction = eval_direction_from(direction_name);
  const DatasetManifest manifest = load_manifest(manifest_path);
  if (!manifest.palette) throw ConfigError("manifest '" + manifest_path.string() + "' has no [palette] section");
  std::unique_ptr<Segmenter> segmenter;
  if (segmenter_command) segmenter = std::make_unique<CommandSegmenter>(*segmenter_command);
  if (direction == EvalDirection::label_to_photo && !segmenter) {
    throw ConfigError("label_to_photo evaluation requires --segmenter");
  }
  if (manifest.paired.empty()) throw ValidationError("evaluation manifest has no aligned pairs");
  const TrainState<float> st = load_checkpoint<float>(checkpoint);
  if (!output) output = output_root() / "evaluate";
  fs::create_directories(*output);
  EvalOptions options;
  options.preprocess = eval_preprocess(size, manifest.paired.front().x);
  options.grid_dir = *output / "grids";
  const auto& generator = st.networks[direction == EvalDirection::photo_to_label ? G2 : G1];
  const EvalReport report = evaluate_translation(generator, manifest, manifest.palette, direction, segmenter.get(), options);
  write_metrics_report(report, *output / "metrics.txt");
  write_metrics_report(report, std::cout);
  return 0;
}

int cmd_synth(const SyntheticTaskSpec& spec, const fs::path& output) {
  const DatasetManifest m = generate_synthetic(spec, output);
  std::cout << "wrote " << m.num_paired() << " pairs, " << m.num_unpaired_x() << " unpaired x, "
            << m.num_unpaired_y() << " unpaired y to " << (output / "manifest.txt").string() << std::endl;
  return 0;
}

int exit_code(const Error& e) {
  switch (e.error_class()) {
    case ErrorClass::config: return kExitConfig;
    case ErrorClass::io: return kExitIo;
    case ErrorClass::numeric: return kExitNumeric;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid paired/unpaired image-to-image translation"};
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "Train on a dataset manifest");
  std::optional<fs::path> config_file;
  std::optional<fs::path> resume;
  std::vector<std::string> overrides;
  train_cmd->add_option("-c,--config", config_file, "INI config file");
  train_cmd->add_option("--resume", resume, "Checkpoint to continue from");
  train_cmd->add_option("overrides", overrides, "section.key=value overrides");

  auto* translate_cmd = app.add_subcommand("translate", "Apply a trained generator to a directory of PNGs");
  fs::path checkpoint, input_dir, output_dir;
  std::string direction;
  int size = 0;
  translate_cmd->add_option("--checkpoint", checkpoint)->required();
  translate_cmd->add_option("--input", input_dir)->required();
  translate_cmd->add_option("--output", output_dir)->required();
  translate_cmd->add_option("--direction", direction, "x2y or y2x")->required();
  translate_cmd->add_option("--size", size, "Square working size (default: input width)");

  auto* eval_cmd = app.add_subcommand("evaluate", "Score translations with segmentation metrics");
  fs::path eval_manifest;
  std::string eval_direction = "photo_to_label";
  std::optional<std::string> segmenter;
  std::optional<fs::path> eval_output;
  eval_cmd->add_option("--checkpoint", checkpoint)->required();
  eval_cmd->add_option("--manifest", eval_manifest)->required();
  eval_cmd->add_option("--direction", eval_direction, "photo_to_label or label_to_photo");
  eval_cmd->add_option("--segmenter", segmenter, "Command run as: <cmd> <in_dir> <out_dir>");
  eval_cmd->add_option("--output", eval_output);
  eval_cmd->add_option("--size", size, "Square working size (default: image width)");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic benchmark");
  SyntheticTaskSpec spec;
  std::string task = "color_inversion";
  fs::path synth_output;
  synth_cmd->add_option("--task", task, "color_inversion or region_texture");
  synth_cmd->add_option("--resolution", spec.resolution);
  synth_cmd->add_option("--paired", spec.num_paired);
  synth_cmd->add_option("--unpaired", spec.num_unpaired);
  synth_cmd->add_option("--test", spec.num_test);
  synth_cmd->add_option("--seed", spec.seed);
  synth_cmd->add_option("--output", synth_output)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(config_file, overrides, resume);
    if (translate_cmd->parsed()) return cmd_translate(checkpoint, input_dir, output_dir, direction, size);
    if (eval_cmd->parsed()) return cmd_evaluate(checkpoint, eval_manifest, eval_direction, segmenter, eval_output, size);
    spec.task = synthetic_task_from(task);
    return cmd_synth(spec, synth_output);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
