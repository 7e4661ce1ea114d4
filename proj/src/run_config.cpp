#include "hedmod/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "hedmod/error.hpp"

namespace hedmod {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw Error(ErrorKind::kParse, "config key '" + key + "': expected " + want + ", got '" + value + "'");
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a non-negative integer");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a non-negative integer");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::string fmt(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SIZE_FIELD(name, member)                                                             \
  Field {                                                                                    \
    name, [](RunConfig& c, const std::string& v) { c.member = to_size(name, v); },           \
        [](const RunConfig& c) { return std::to_string(c.member); }                          \
  }
#define DOUBLE_FIELD(name, member)                                                           \
  Field {                                                                                    \
    name, [](RunConfig& c, const std::string& v) { c.member = to_double(name, v); },         \
        [](const RunConfig& c) { return fmt(c.member); }                                     \
  }
#define SEED_FIELD(name, member)                                                             \
  Field {                                                                                    \
    name, [](RunConfig& c, const std::string& v) { c.member = to_u64(name, v); },            \
        [](const RunConfig& c) { return std::to_string(c.member); }                          \
  }
#define STRING_FIELD(name, member)                                                           \
  Field {                                                                                    \
    name, [](RunConfig& c, const std::string& v) { c.member = v; },                          \
        [](const RunConfig& c) { return c.member; }                                          \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      DOUBLE_FIELD("lr", train.lr),
      DOUBLE_FIELD("beta1", train.beta1),
      DOUBLE_FIELD("beta2", train.beta2),
      DOUBLE_FIELD("eps", train.eps),
      SIZE_FIELD("batch_size", train.batch_size),
      SIZE_FIELD("max_epochs", train.max_epochs),
      SEED_FIELD("seed", train.seed),
      DOUBLE_FIELD("grad_clip_norm", train.grad_clip_norm),
      SIZE_FIELD("validate_every", train.validate_every),
      SIZE_FIELD("patience", train.patience),
      DOUBLE_FIELD("dropout", train.dropout),
      Field{"train_description",
            [](RunConfig& c, const std::string& v) { c.train.train_description = to_bool("train_description", v); },
            [](const RunConfig& c) { return std::string(c.train.train_description ? "true" : "false"); }},
      Field{"stage2_templates",
            [](RunConfig& c, const std::string& v) {
              if (v == "gold") c.train.stage2_templates = TemplateSource::kGold;
              else if (v == "generated") c.train.stage2_templates = TemplateSource::kGenerated;
              else bad_value("stage2_templates", v, "gold or generated");
            },
            [](const RunConfig& c) {
              return std::string(c.train.stage2_templates == TemplateSource::kGold ? "gold" : "generated");
            }},
      SIZE_FIELD("d_hidden", model.d_hidden),
      SIZE_FIELD("d_word", model.d_word),
      SIZE_FIELD("d_property", model.d_property),
      SIZE_FIELD("d_position", model.d_position),
      SIZE_FIELD("max_position", model.max_position),
      SIZE_FIELD("max_template_length", model.max_template_length),
      SIZE_FIELD("max_description_length", model.max_description_length),
      DOUBLE_FIELD("init_scale", model.init_scale),
      SEED_FIELD("init_seed", model.seed),
      SIZE_FIELD("value_vocab_size", value_vocab_size),
      SIZE_FIELD("target_vocab_size", target_vocab_size),
      SIZE_FIELD("min_statements", min_statements),
      Field{"decode",
            [](RunConfig& c, const std::string& v) {
              DecodeMode::parse(v);
              c.decode = v;
            },
            [](const RunConfig& c) { return c.decode; }},
      STRING_FIELD("data_dir", data_dir),
      STRING_FIELD("out_dir", out_dir),
  };
  return table;
}

#undef SIZE_FIELD
#undef DOUBLE_FIELD
#undef SEED_FIELD
#undef STRING_FIELD

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      try {
        f.set(*this, value);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::kParse) throw;
        throw Error(ErrorKind::kParse, "config key '" + key + "': " + e.what());
      }
      return;
    }
  }
  throw Error(ErrorKind::kParse, "unknown config key '" + key + "'");
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error(ErrorKind::kParse, "override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::validate() const {
  train.validate();
  const ModelConfig& m = model;
  if (m.d_hidden == 0 || m.d_word == 0 || m.d_property == 0 || m.d_position == 0 || m.max_position == 0) {
    throw Error(ErrorKind::kInvalidArgument, "model dimensions must be positive");
  }
  if (m.max_template_length == 0 || m.max_description_length == 0) {
    throw Error(ErrorKind::kInvalidArgument, "maximum lengths must be positive");
  }
  if (!(m.init_scale > 0.0)) throw Error(ErrorKind::kInvalidArgument, "init_scale must be positive");
  if (min_statements == 0) throw Error(ErrorKind::kInvalidArgument, "min_statements must be at least 1");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
  return out;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      c.apply_override(line);
    } catch (const Error& e) {
      throw Error(ErrorKind::kParse, origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << to_text();
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path);
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.key);
  return out;
}

}  // namespace hedmod
