#include "hybridgan/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <functional>
#include <sstream>

namespace hybridgan {

namespace pt = boost::property_tree;

namespace {

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (!in || !(in >> std::ws).eof()) throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + text + "'");
}

std::string schedule_name(LrSchedule s) { return s == LrSchedule::constant ? "constant" : "constant_then_linear"; }

LrSchedule parse_schedule(const std::string& key, const std::string& text) {
  if (text == "constant") return LrSchedule::constant;
  if (text == "constant_then_linear") return LrSchedule::constant_then_linear;
  throw ConfigError("'" + key + "' expects constant or constant_then_linear, got '" + text + "'");
}

#define HG_NUMBER(name, member, type)                                                      \
  Field {                                                                                  \
    name, [](const RunConfig& c) { return fmt(static_cast<double>(c.member)); },           \
        [](RunConfig& c, const std::string& v) { c.member = parse_number<type>(name, v); } \
  }
#define HG_INTEGER(name, member, type)                                                     \
  Field {                                                                                  \
    name, [](const RunConfig& c) { return std::to_string(c.member); },                     \
        [](RunConfig& c, const std::string& v) { c.member = parse_number<type>(name, v); } \
  }
#define HG_BOOL(name, member)                                                       \
  Field {                                                                           \
    name, [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) { c.member = parse_bool(name, v); }  \
  }
#define HG_SCHEDULE(name, member)                                                       \
  Field {                                                                               \
    name, [](const RunConfig& c) { return schedule_name(c.member); },                   \
        [](RunConfig& c, const std::string& v) { c.member = parse_schedule(name, v); }  \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      {"run.manifest", [](const RunConfig& c) { return c.manifest.string(); },
       [](RunConfig& c, const std::string& v) { c.manifest = v; }},
      {"run.output_dir", [](const RunConfig& c) { return c.output_dir.string(); },
       [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
      HG_BOOL("run.keep_epoch_checkpoints", keep_epoch_checkpoints),
      HG_INTEGER("data.load_size", preprocess.load_size, int),
      HG_INTEGER("data.crop_size", preprocess.crop_size, int),
      HG_NUMBER("data.normalize_min", preprocess.normalize_min, float),
      HG_NUMBER("data.normalize_max", preprocess.normalize_max, float),
      {"data.interpolation",
       [](const RunConfig& c) {
         return std::string(c.preprocess.interpolation == Interpolation::nearest ? "nearest" : "bicubic");
       },
       [](RunConfig& c, const std::string& v) {
         if (v != "nearest" && v != "bicubic") throw ConfigError("'data.interpolation' expects bicubic or nearest");
         c.preprocess.interpolation = v == "nearest" ? Interpolation::nearest : Interpolation::bicubic;
       }},
      HG_BOOL("data.random_flip", preprocess.random_flip),
      HG_INTEGER("model.x_channels", model.x_channels, Index),
      HG_INTEGER("model.y_channels", model.y_channels, Index),
      HG_INTEGER("generator.base_filters", model.generator.base_filters, Index),
      HG_INTEGER("generator.num_resblocks", model.generator.num_resblocks, Index),
      {"discriminator.layer_filters", [](const RunConfig& c) { return join_counts(c.model.discriminator.layer_filters); },
       [](RunConfig& c, const std::string& v) { c.model.discriminator.layer_filters = parse_counts(v); }},
      {"discriminator.layer_strides", [](const RunConfig& c) { return join_counts(c.model.discriminator.layer_strides); },
       [](RunConfig& c, const std::string& v) { c.model.discriminator.layer_strides = parse_counts(v); }},
      HG_NUMBER("discriminator.leaky_slope", model.discriminator.leaky_slope, double),
      HG_INTEGER("train.seed", train.seed, std::uint64_t),
      HG_INTEGER("train.total_epochs", train.total_epochs, int),
      HG_INTEGER("train.paired_epochs", train.paired_epochs, int),
      HG_INTEGER("train.lr_constant_epochs", train.lr_constant_epochs, int),
      HG_INTEGER("train.batch_size", train.batch_size, int),
      HG_INTEGER("train.pool_capacity", train.pool_capacity, std::size_t),
      HG_BOOL("train.reuse_paired_as_unpaired", train.reuse_paired_as_unpaired),
      HG_BOOL("train.reset_moments_at_phase_switch", train.reset_moments_at_phase_switch),
      HG_BOOL("train.clear_conditional_pools_at_phase_switch", train.clear_conditional_pools_at_phase_switch),
      HG_NUMBER("loss.lambda_identity", train.weights.lambda_identity, double),
      HG_NUMBER("loss.lambda_cycle_l1", train.weights.lambda_cycle_l1, double),
      HG_NUMBER("loss.lambda_perceptual", train.weights.lambda_perceptual, double),
      HG_NUMBER("optimizer.main_lr", train.main_optimizer.base_lr, double),
      HG_NUMBER("optimizer.main_beta1", train.main_optimizer.beta1, double),
      HG_NUMBER("optimizer.main_beta2", train.main_optimizer.beta2, double),
      HG_SCHEDULE("optimizer.main_schedule", train.main_optimizer.schedule),
      HG_NUMBER("optimizer.conditional_lr", train.conditional_optimizer.base_lr, double),
      HG_NUMBER("optimizer.conditional_beta1", train.conditional_optimizer.beta1, double),
      HG_NUMBER("optimizer.conditional_beta2", train.conditional_optimizer.beta2, double),
      HG_SCHEDULE("optimizer.conditional_schedule", train.conditional_optimizer.schedule),
  };
  return table;
}

#undef HG_NUMBER
#undef HG_INTEGER
#undef HG_BOOL
#undef HG_SCHEDULE

}  // namespace

void RunConfig::validate() const {
  preprocess.validate();
  train.validate();
  model.g1().validate();
  model.g2().validate();
  model.discriminator_for(D3).validate();
  model.discriminator_for(D4).validate();
  if (model.x_channels < 1 || model.y_channels < 1) throw ConfigError("domain channel counts must be >= 1");
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (f.key == key) {
      f.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides) {
  RunConfig config;
  if (file) {
    pt::ptree tree;
    try {
      pt::read_ini(file->string(), tree);
    } catch (const pt::ini_parser_error& e) {
      if (!std::filesystem::exists(*file)) throw IoError("cannot read config '" + file->string() + "'");
      throw ConfigError(e.what());
    }
    for (const auto& [section, body] : tree) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError("key '" + section + "' must sit inside a [section]");
      }
      for (const auto& [key, value] : body) set_config_value(config, section + "." + key, value.data());
    }
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not of the form section.key=value");
    set_config_value(config, o.substr(0, eq), o.substr(eq + 1));
  }
  config.validate();
  return config;
}

std::string render_run_config(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const Field& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string s = f.key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out << '\n';
      out << '[' << s << "]\n";
      section = s;
    }
    out << f.key.substr(dot + 1) << " = " << f.get(config) << '\n';
  }
  return out.str();
}

}  // namespace hybridgan
