#include "swa/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "swa/csv.hpp"
#include "swa/errors.hpp"

namespace swa {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct KeyContext {
  std::string key;
  int line;
  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key + "': " + why);
  }
};

double as_double(const KeyContext& ctx, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) ctx.fail("expected a number, got '" + v + "'");
    return d;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    ctx.fail("expected a number, got '" + v + "'");
  }
}

std::int64_t as_int(const KeyContext& ctx, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) ctx.fail("expected an integer, got '" + v + "'");
    return i;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    ctx.fail("expected an integer, got '" + v + "'");
  }
}

std::uint64_t as_uint(const KeyContext& ctx, const std::string& v) {
  const std::int64_t i = as_int(ctx, v);
  if (i < 0) ctx.fail("expected a nonnegative integer");
  return static_cast<std::uint64_t>(i);
}

bool as_bool(const KeyContext& ctx, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  ctx.fail("expected a boolean (true/false), got '" + v + "'");
}

std::vector<int> as_int_list(const KeyContext& ctx, const std::string& v) {
  std::vector<int> out;
  std::istringstream ss(v);
  std::string tok;
  while (ss >> tok) out.push_back(static_cast<int>(as_int(ctx, tok)));
  if (out.empty()) ctx.fail("expected a list of integers");
  return out;
}

}  // namespace

std::string to_string(Generator g) {
  switch (g) {
    case Generator::blobs: return "blobs";
    case Generator::spirals: return "spirals";
    case Generator::xor_quads: return "xor";
  }
  return "?";
}

std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

LrSchedule ExperimentConfig::pretrain_schedule() const {
  if (pretrain.kind == "piecewise")
    return PiecewiseDecay{pretrain.alpha1, pretrain.budget};
  if (pretrain.kind == "constant") return Constant{pretrain.alpha1};
  if (pretrain.kind == "cyclic")
    return CyclicLinear{pretrain.alpha1, pretrain.alpha2, pretrain.cycle};
  throw ConfigError("pretrain.schedule.kind: unknown kind '" + pretrain.kind + "'");
}

LrSchedule ExperimentConfig::swa_schedule() const {
  if (swa.kind == "cyclic") return CyclicLinear{swa.alpha1, swa.alpha2, swa.cycle};
  if (swa.kind == "constant") return Constant{swa.alpha1};
  if (swa.kind == "cosine")
    return CosineSegment{swa.alpha1, swa.seg_start, swa.seg_len, swa.period};
  if (swa.kind == "piecewise")
    return PiecewiseDecay{swa.alpha1, swa.budget > 0 ? swa.budget : pretrain.budget};
  throw ConfigError("swa.schedule.kind: unknown kind '" + swa.kind + "'");
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  // Model defaults live here rather than in MlpSpec: a config without a
  // batchnorm key means "all hidden layers normalized" for this harness.
  cfg.model.layer_dims = {2, 32, 32, 2};
  cfg.model.l2_coeff = 5e-4;
  bool bn_all = true;
  std::vector<int> bn_list;

  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + " line " + std::to_string(line_no) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "model" && section != "data" && section != "pretrain" &&
          section != "swa" && section != "outputs")
        throw ConfigError(origin + " line " + std::to_string(line_no) +
                          ": unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + " line " + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError(origin + " line " + std::to_string(line_no) +
                        ": key '" + key + "' outside any [section]");
    const KeyContext ctx{section + "." + key, line_no};

    if (section == "model") {
      if (key == "layers") cfg.model.layer_dims = as_int_list(ctx, value);
      else if (key == "activation") {
        if (value == "relu") cfg.model.activation = Activation::relu;
        else if (value == "tanh") cfg.model.activation = Activation::tanh_fn;
        else ctx.fail("expected relu or tanh");
      } else if (key == "batchnorm") {
        if (value == "true" || value == "false" || value == "1" || value == "0" ||
            value == "yes" || value == "no") {
          bn_all = as_bool(ctx, value);
          bn_list.clear();
        } else {
          bn_list = as_int_list(ctx, value);
        }
      } else if (key == "l2") cfg.model.l2_coeff = as_double(ctx, value);
      else if (key == "seed") cfg.model_seed = as_uint(ctx, value);
      else ctx.fail("unknown key");
    } else if (section == "data") {
      if (key == "generator") {
        if (value == "blobs") cfg.data.generator = Generator::blobs;
        else if (value == "spirals") cfg.data.generator = Generator::spirals;
        else if (value == "xor") cfg.data.generator = Generator::xor_quads;
        else ctx.fail("expected blobs, spirals or xor");
      } else if (key == "n_train") cfg.data.n_train = static_cast<int>(as_int(ctx, value));
      else if (key == "n_test") cfg.data.n_test = static_cast<int>(as_int(ctx, value));
      else if (key == "noise") cfg.data.noise = as_double(ctx, value);
      else if (key == "seed") cfg.data.seed = as_uint(ctx, value);
      else if (key == "classes") cfg.data.classes = static_cast<int>(as_int(ctx, value));
      else if (key == "spiral_turns") cfg.data.spiral_turns = as_double(ctx, value);
      else if (key == "csv_path") cfg.data.csv_path = value;
      else if (key == "label_column") cfg.data.label_column = static_cast<int>(as_int(ctx, value));
      else if (key == "csv_test_fraction") cfg.data.csv_test_fraction = as_double(ctx, value);
      else ctx.fail("unknown key");
    } else if (section == "pretrain") {
      if (key == "schedule.kind") cfg.pretrain.kind = value;
      else if (key == "schedule.alpha1") cfg.pretrain.alpha1 = as_double(ctx, value);
      else if (key == "schedule.alpha2") cfg.pretrain.alpha2 = as_double(ctx, value);
      else if (key == "schedule.cycle") cfg.pretrain.cycle = as_int(ctx, value);
      else if (key == "schedule.budget") cfg.pretrain.budget = as_int(ctx, value);
      else if (key == "frac") cfg.pretrain.frac = as_double(ctx, value);
      else if (key == "momentum") cfg.pretrain.momentum = as_double(ctx, value);
      else if (key == "batch_size") cfg.pretrain.batch_size = static_cast<int>(as_int(ctx, value));
      else if (key == "seed") cfg.pretrain.seed = as_uint(ctx, value);
      else ctx.fail("unknown key");
    } else if (section == "swa") {
      if (key == "enabled") cfg.swa.enabled = as_bool(ctx, value);
      else if (key == "schedule.kind") cfg.swa.kind = value;
      else if (key == "schedule.alpha1") cfg.swa.alpha1 = as_double(ctx, value);
      else if (key == "schedule.alpha2") cfg.swa.alpha2 = as_double(ctx, value);
      else if (key == "schedule.cycle") cfg.swa.cycle = as_int(ctx, value);
      else if (key == "schedule.budget") cfg.swa.budget = as_int(ctx, value);
      else if (key == "schedule.seg_start") cfg.swa.seg_start = as_int(ctx, value);
      else if (key == "schedule.seg_len") cfg.swa.seg_len = as_int(ctx, value);
      else if (key == "schedule.period") cfg.swa.period = as_int(ctx, value);
      else if (key == "iters") cfg.swa.iters = as_int(ctx, value);
      else if (key == "capture_every") cfg.swa.capture_every = as_int(ctx, value);
      else if (key == "momentum") cfg.swa.momentum = as_double(ctx, value);
      else if (key == "batch_size") cfg.swa.batch_size = static_cast<int>(as_int(ctx, value));
      else if (key == "seed") cfg.swa.seed = as_uint(ctx, value);
      else if (key == "include_init") cfg.swa.include_init = as_bool(ctx, value);
      else ctx.fail("unknown key");
    } else if (section == "outputs") {
      if (key == "dir") cfg.outputs.dir = value;
      else if (key == "seeds") cfg.outputs.seeds = static_cast<int>(as_int(ctx, value));
      else if (key == "log_csv") cfg.outputs.log_csv = as_bool(ctx, value);
      else if (key == "log_snapshots") cfg.outputs.log_snapshots = as_bool(ctx, value);
      else if (key == "eval_every") cfg.outputs.eval_every = as_int(ctx, value);
      else if (key == "landscape") cfg.outputs.landscape = as_bool(ctx, value);
      else if (key == "ensemble") cfg.outputs.ensemble = as_bool(ctx, value);
      else if (key == "rays") cfg.outputs.rays = static_cast<int>(as_int(ctx, value));
      else if (key == "ray_tmax") cfg.outputs.ray_tmax = as_double(ctx, value);
      else if (key == "grid") cfg.outputs.grid = static_cast<int>(as_int(ctx, value));
      else ctx.fail("unknown key");
    }
  }

  // Resolve the batchnorm flags against the hidden layer count.
  if (cfg.model.layer_dims.size() < 2)
    throw ConfigError("model.layers: need at least input and output dims");
  const int hidden = static_cast<int>(cfg.model.layer_dims.size()) - 2;
  if (!bn_list.empty()) {
    if (static_cast<int>(bn_list.size()) != hidden)
      throw ConfigError("model.batchnorm: expected " + std::to_string(hidden) +
                        " per-hidden-layer flags");
    cfg.model.batchnorm.assign(bn_list.size(), false);
    for (std::size_t i = 0; i < bn_list.size(); ++i)
      cfg.model.batchnorm[i] = bn_list[i] != 0;
  } else {
    cfg.model.batchnorm.assign(hidden, bn_all);
  }

  // Semantic validation.
  try {
    cfg.model.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  if (cfg.data.n_train < 1 || cfg.data.n_test < 1)
    throw ConfigError("data.n_train/n_test: must be >= 1");
  if (cfg.pretrain.budget < 1)
    throw ConfigError("pretrain.schedule.budget: must be >= 1");
  if (cfg.pretrain.frac < 0.0 || cfg.pretrain.frac > 1.0)
    throw ConfigError("pretrain.frac: must be in [0, 1]");
  for (const auto& [name, mom] :
       {std::pair<std::string, double>{"pretrain.momentum", cfg.pretrain.momentum},
        {"swa.momentum", cfg.swa.momentum}})
    if (mom < 0.0 || mom >= 1.0)
      throw ConfigError(name + ": must be in [0, 1)");
  if (cfg.pretrain.kind == "cyclic" && cfg.pretrain.alpha2 > cfg.pretrain.alpha1)
    throw ConfigError(
        "pretrain.schedule.alpha2: exceeds alpha1, schedule requires α1 ≥ α2");
  if (cfg.swa.kind == "cyclic" && cfg.swa.alpha2 > cfg.swa.alpha1)
    throw ConfigError(
        "swa.schedule.alpha2: exceeds alpha1, schedule requires α1 ≥ α2");
  if (cfg.outputs.seeds < 1) throw ConfigError("outputs.seeds: must be >= 1");
  if (cfg.outputs.rays < 1) throw ConfigError("outputs.rays: must be >= 1");
  if (cfg.outputs.grid < 1) throw ConfigError("outputs.grid: must be >= 1");

  // Resolve derived defaults so the dump pins every quantity.
  if (cfg.swa.iters == 0)
    cfg.swa.iters = static_cast<std::int64_t>(std::llround(0.75 * cfg.pretrain.budget));

  try {
    validate(cfg.pretrain_schedule());
    if (cfg.swa.enabled) validate(cfg.swa_schedule());
  } catch (const Error& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text, path);
}

std::string dump_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[model]\n";
  os << "layers =";
  for (int d : cfg.model.layer_dims) os << ' ' << d;
  os << "\nactivation = " << to_string(cfg.model.activation) << "\n";
  os << "batchnorm =";
  for (bool b : cfg.model.batchnorm) os << ' ' << (b ? 1 : 0);
  if (cfg.model.batchnorm.empty()) os << " 0";  // no hidden layers
  os << "\nl2 = " << fmt_double(cfg.model.l2_coeff) << "\n";
  os << "seed = " << cfg.model_seed << "\n\n";

  os << "[data]\n";
  if (!cfg.data.csv_path.empty()) {
    os << "csv_path = " << cfg.data.csv_path << "\n";
    os << "label_column = " << cfg.data.label_column << "\n";
    os << "csv_test_fraction = " << fmt_double(cfg.data.csv_test_fraction) << "\n";
  } else {
    os << "generator = " << to_string(cfg.data.generator) << "\n";
    os << "n_train = " << cfg.data.n_train << "\n";
    os << "n_test = " << cfg.data.n_test << "\n";
    os << "noise = " << fmt_double(cfg.data.noise) << "\n";
    os << "classes = " << cfg.data.classes << "\n";
    os << "spiral_turns = " << fmt_double(cfg.data.spiral_turns) << "\n";
  }
  os << "seed = " << cfg.data.seed << "\n\n";

  os << "[pretrain]\n";
  os << "schedule.kind = " << cfg.pretrain.kind << "\n";
  os << "schedule.alpha1 = " << fmt_double(cfg.pretrain.alpha1) << "\n";
  os << "schedule.alpha2 = " << fmt_double(cfg.pretrain.alpha2) << "\n";
  os << "schedule.cycle = " << cfg.pretrain.cycle << "\n";
  os << "schedule.budget = " << cfg.pretrain.budget << "\n";
  os << "frac = " << fmt_double(cfg.pretrain.frac) << "\n";
  os << "momentum = " << fmt_double(cfg.pretrain.momentum) << "\n";
  os << "batch_size = " << cfg.pretrain.batch_size << "\n";
  os << "seed = " << cfg.pretrain.seed << "\n\n";

  os << "[swa]\n";
  os << "enabled = " << (cfg.swa.enabled ? "true" : "false") << "\n";
  os << "schedule.kind = " << cfg.swa.kind << "\n";
  os << "schedule.alpha1 = " << fmt_double(cfg.swa.alpha1) << "\n";
  os << "schedule.alpha2 = " << fmt_double(cfg.swa.alpha2) << "\n";
  os << "schedule.cycle = " << cfg.swa.cycle << "\n";
  os << "schedule.budget = " << cfg.swa.budget << "\n";
  os << "schedule.seg_start = " << cfg.swa.seg_start << "\n";
  os << "schedule.seg_len = " << cfg.swa.seg_len << "\n";
  os << "schedule.period = " << cfg.swa.period << "\n";
  os << "iters = " << cfg.swa.iters << "\n";
  os << "capture_every = " << cfg.swa.capture_every << "\n";
  os << "momentum = " << fmt_double(cfg.swa.momentum) << "\n";
  os << "batch_size = " << cfg.swa.batch_size << "\n";
  os << "seed = " << cfg.swa.seed << "\n";
  os << "include_init = " << (cfg.swa.include_init ? "true" : "false") << "\n\n";

  os << "[outputs]\n";
  os << "dir = " << cfg.outputs.dir << "\n";
  os << "seeds = " << cfg.outputs.seeds << "\n";
  os << "log_csv = " << (cfg.outputs.log_csv ? "true" : "false") << "\n";
  os << "log_snapshots = " << (cfg.outputs.log_snapshots ? "true" : "false") << "\n";
  os << "eval_every = " << cfg.outputs.eval_every << "\n";
  os << "landscape = " << (cfg.outputs.landscape ? "true" : "false") << "\n";
  os << "ensemble = " << (cfg.outputs.ensemble ? "true" : "false") << "\n";
  os << "rays = " << cfg.outputs.rays << "\n";
  os << "ray_tmax = " << fmt_double(cfg.outputs.ray_tmax) << "\n";
  os << "grid = " << cfg.outputs.grid << "\n";
  return os.str();
}

}  // namespace swa
