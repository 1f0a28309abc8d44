#include "jcapt/data/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "jcapt/errors.hpp"

namespace jcapt::data {

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, text));
  return v;
}

std::size_t parse_size(const std::string& key, const std::string& text) { return parse_number<std::size_t>(key, text); }

ssm::Combine parse_combine(const std::string& key, const std::string& v) {
  if (v == "concat_project") return ssm::Combine::concat_project;
  if (v == "sum") return ssm::Combine::sum;
  throw ConfigError(fmt::format("{}: '{}' is not one of concat_project, sum", key, v));
}

ssm::ScanMode parse_scan(const std::string& key, const std::string& v) {
  if (v == "sequential") return ssm::ScanMode::sequential;
  if (v == "parallel") return ssm::ScanMode::parallel;
  throw ConfigError(fmt::format("{}: '{}' is not one of sequential, parallel", key, v));
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"model.d_model", [](RunConfig& c, const std::string& v) { c.model.encoder.d_model = parse_size("model.d_model", v); }},
      {"model.d_state", [](RunConfig& c, const std::string& v) { c.model.encoder.d_state = parse_size("model.d_state", v); }},
      {"model.expand", [](RunConfig& c, const std::string& v) { c.model.encoder.expand = parse_size("model.expand", v); }},
      {"model.n_layers", [](RunConfig& c, const std::string& v) { c.model.encoder.n_layers = parse_size("model.n_layers", v); }},
      {"model.conv_width",
       [](RunConfig& c, const std::string& v) { c.model.encoder.conv_width = parse_size("model.conv_width", v); }},
      {"model.think_tokens",
       [](RunConfig& c, const std::string& v) { c.model.encoder.think_tokens = parse_size("model.think_tokens", v); }},
      {"model.combine", [](RunConfig& c, const std::string& v) { c.model.encoder.combine = parse_combine("model.combine", v); }},
      {"model.scan", [](RunConfig& c, const std::string& v) { c.model.encoder.scan = parse_scan("model.scan", v); }},
      {"model.d_attn", [](RunConfig& c, const std::string& v) { c.model.d_attn = parse_size("model.d_attn", v); }},
      {"model.feature_dim", [](RunConfig& c, const std::string& v) { c.model.feature_dim = parse_size("model.feature_dim", v); }},
      {"train.alpha", [](RunConfig& c, const std::string& v) { c.train.alpha = parse_number<double>("train.alpha", v); }},
      {"train.lr", [](RunConfig& c, const std::string& v) { c.train.lr = parse_number<double>("train.lr", v); }},
      {"train.lr_final",
       [](RunConfig& c, const std::string& v) { c.train.lr_final = parse_number<double>("train.lr_final", v); }},
      {"train.epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = parse_size("train.epochs", v); }},
      {"train.batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_size("train.batch_size", v); }},
      {"train.seed", [](RunConfig& c, const std::string& v) { c.train.seed = parse_number<std::uint64_t>("train.seed", v); }},
      {"train.threads", [](RunConfig& c, const std::string& v) { c.train.threads = parse_size("train.threads", v); }},
      {"train.optimizer",
       [](RunConfig& c, const std::string& v) {
         try {
           c.train.optimizer = training::parse_optimizer(v);
         } catch (const Error& e) {
           throw ConfigError(fmt::format("train.optimizer: {}", e.what()));
         }
       }},
      {"data.train", [](RunConfig& c, const std::string& v) { c.data.train = v; }},
      {"data.test", [](RunConfig& c, const std::string& v) { c.data.test = v; }},
      {"data.model", [](RunConfig& c, const std::string& v) { c.data.model = v; }},
      {"data.loss_log", [](RunConfig& c, const std::string& v) { c.data.loss_log = v; }},
  };
  return table;
}

const char* combine_name(ssm::Combine c) { return c == ssm::Combine::sum ? "sum" : "concat_project"; }
const char* scan_name(ssm::ScanMode s) { return s == ssm::ScanMode::parallel ? "parallel" : "sequential"; }

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
}

RunConfig parse_run_config(std::string_view text, std::string_view source) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}: line {}: {}", source, e.line(), e.message()));
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(fmt::format("{}: key '{}' must be inside a [model], [train] or [data] section", source, section));
    }
    if (section != "model" && section != "train" && section != "data") {
      throw ConfigError(fmt::format("{}: unknown section [{}]", source, section));
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      auto it = setters().find(full);
      if (it == setters().end()) throw ConfigError(fmt::format("{}: unknown key '{}'", source, full));
      try {
        it->second(c, value.data());
      } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", source, e.what()));
      }
    }
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.what()));
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("{}: cannot open config", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

std::string format_run_config(const RunConfig& c) {
  const auto& e = c.model.encoder;
  std::string out;
  out += fmt::format("[model]\nd_model = {}\nd_state = {}\nexpand = {}\nn_layers = {}\nconv_width = {}\n", e.d_model,
                     e.d_state, e.expand, e.n_layers, e.conv_width);
  out += fmt::format("think_tokens = {}\ncombine = {}\nscan = {}\nd_attn = {}\nfeature_dim = {}\n\n", e.think_tokens,
                     combine_name(e.combine), scan_name(e.scan), c.model.d_attn, c.model.feature_dim);
  out += fmt::format("[train]\nalpha = {}\nlr = {}\nepochs = {}\nbatch_size = {}\nseed = {}\noptimizer = {}\nthreads = {}\n\n",
                     c.train.alpha, c.train.lr, c.train.epochs, c.train.batch_size, c.train.seed,
                     c.train.optimizer == training::OptimizerKind::sgd ? "sgd" : "adam", c.train.threads);
  if (c.train.lr_final) out.insert(out.rfind("\n\n"), fmt::format("\nlr_final = {}", *c.train.lr_final));
  out += fmt::format("[data]\ntrain = {}\ntest = {}\nmodel = {}\nloss_log = {}\n", c.data.train.string(),
                     c.data.test.string(), c.data.model.string(), c.data.loss_log.string());
  return out;
}

}  // namespace jcapt::data
