#include "caso/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace caso {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw std::invalid_argument("invalid value for " + key + ": '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw std::invalid_argument("invalid boolean for " + key + ": '" + value + "'");
}

std::string fmt(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), ptr};
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str());
}

void apply_setting(TrainingConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "alpha") cfg.alpha = parse_number<double>(key, value);
  else if (key == "beta") cfg.beta = parse_number<double>(key, value);
  else if (key == "gamma") cfg.gamma = parse_number<double>(key, value);
  else if (key == "lambda") cfg.lambda = parse_number<double>(key, value);
  else if (key == "theta") cfg.theta = parse_number<double>(key, value);
  else if (key == "zeta") cfg.zeta = parse_number<double>(key, value);
  else if (key == "T") cfg.steps = parse_number<Index>(key, value);
  else if (key == "dim") cfg.dim = parse_number<Index>(key, value);
  else if (key == "learning_rate") cfg.learning_rate = parse_number<double>(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_number<Index>(key, value);
  else if (key == "max_epochs") cfg.max_epochs = parse_number<Index>(key, value);
  else if (key == "patience") cfg.patience = parse_number<Index>(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "measure") cfg.measure = parse_measure(value);
  else if (key == "no_smm") cfg.ablations.no_smm = parse_bool(key, value);
  else if (key == "no_sca") cfg.ablations.no_sca = parse_bool(key, value);
  else if (key == "no_uce") cfg.ablations.no_uce = parse_bool(key, value);
  else if (key == "no_fme") cfg.ablations.no_fme = parse_bool(key, value);
  else if (key == "no_kl") cfg.ablations.no_kl = parse_bool(key, value);
  else if (key == "mode") {
    if (value == "per_step") cfg.mode = PipelineMode::PerStep;
    else if (value == "per_epoch") cfg.mode = PipelineMode::PerEpoch;
    else throw std::invalid_argument("invalid value for mode: '" + value + "'");
  }
  else if (key == "fme_iterations") cfg.fme_iterations = parse_number<Index>(key, value);
  else if (key == "fme_stop_gradient") cfg.fme_stop_gradient = parse_bool(key, value);
  else if (key == "train_frac") cfg.train_frac = parse_number<double>(key, value);
  else if (key == "valid_frac") cfg.valid_frac = parse_number<double>(key, value);
  else if (key == "validation_k") cfg.validation_k = parse_number<Index>(key, value);
  else throw std::invalid_argument("unknown config key: " + key);
}

void apply_settings(TrainingConfig& cfg, const std::map<std::string, std::string>& settings) {
  for (const auto& [key, value] : settings) apply_setting(cfg, key, value);
}

std::string format_config(const TrainingConfig& cfg) {
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "alpha = " << fmt(cfg.alpha) << '\n'
      << "beta = " << fmt(cfg.beta) << '\n'
      << "gamma = " << fmt(cfg.gamma) << '\n'
      << "lambda = " << fmt(cfg.lambda) << '\n'
      << "theta = " << fmt(cfg.theta) << '\n'
      << "zeta = " << fmt(cfg.zeta) << '\n'
      << "T = " << cfg.steps << '\n'
      << "dim = " << cfg.dim << '\n'
      << "learning_rate = " << fmt(cfg.learning_rate) << '\n'
      << "batch_size = " << cfg.batch_size << '\n'
      << "max_epochs = " << cfg.max_epochs << '\n'
      << "patience = " << cfg.patience << '\n'
      << "seed = " << cfg.seed << '\n'
      << "measure = " << measure_name(cfg.measure) << '\n'
      << "no_smm = " << b(cfg.ablations.no_smm) << '\n'
      << "no_sca = " << b(cfg.ablations.no_sca) << '\n'
      << "no_uce = " << b(cfg.ablations.no_uce) << '\n'
      << "no_fme = " << b(cfg.ablations.no_fme) << '\n'
      << "no_kl = " << b(cfg.ablations.no_kl) << '\n'
      << "mode = " << (cfg.mode == PipelineMode::PerStep ? "per_step" : "per_epoch") << '\n'
      << "fme_iterations = " << cfg.fme_iterations << '\n'
      << "fme_stop_gradient = " << b(cfg.fme_stop_gradient) << '\n'
      << "train_frac = " << fmt(cfg.train_frac) << '\n'
      << "valid_frac = " << fmt(cfg.valid_frac) << '\n'
      << "validation_k = " << cfg.validation_k << '\n';
  return out.str();
}

}  // namespace caso
