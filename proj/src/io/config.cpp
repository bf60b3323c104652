#include "panograph/io/config.hpp"

#include <charconv>
#include <map>
#include <sstream>

#include "panograph/errors.hpp"

namespace panograph::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct ValueParser {
  const std::string& key;
  const std::string& where;

  [[noreturn]] void fail(std::string_view value, const char* expected) const {
    throw ConfigError(where + ": " + key + " = '" + std::string(value) + "' is not " + expected);
  }

  std::size_t count(std::string_view v) const {
    std::size_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) fail(v, "a non-negative integer");
    return out;
  }

  std::uint64_t u64(std::string_view v) const { return count(v); }

  double real(std::string_view v) const {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) fail(v, "a real number");
    return out;
  }

  std::vector<std::size_t> counts(std::string_view v) const {
    std::vector<std::size_t> out;
    for (auto part : split(v, ',')) out.push_back(count(part));
    return out;
  }
};

template <typename T>
std::string join(const T& items) {
  std::ostringstream ss;
  bool first = true;
  for (const auto& item : items) {
    if (!first) ss << ',';
    ss << item;
    first = false;
  }
  return ss.str();
}

std::string real_string(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

void apply_model_key(nn::ModelConfig& m, const std::string& key, std::string_view value, const ValueParser& p) {
  if (key == "persons") {
    m.persons = p.count(value);
  } else if (key == "joints") {
    m.joints = p.count(value);
  } else if (key == "objects") {
    m.objects = p.count(value);
  } else if (key == "frames") {
    m.frames = p.count(value);
  } else if (key == "coord_channels") {
    m.coord_channels = p.count(value);
  } else if (key == "num_classes") {
    m.num_classes = p.count(value);
  } else if (key == "layout") {
    m.layout = graph::parse_layout(value);
  } else if (key == "inter") {
    m.inter = graph::parse_inter_variant(value);
  } else if (key == "attachments") {
    m.attachments.clear();
    for (auto pair : split(value, ',')) {
      const auto colon = pair.find(':');
      if (colon == std::string_view::npos) p.fail(value, "a list of slot:joint pairs");
      m.attachments.push_back({p.count(trim(pair.substr(0, colon))), p.count(trim(pair.substr(colon + 1)))});
    }
  } else if (key == "input_channels") {
    m.input_channels = p.counts(value);
  } else if (key == "main_channels") {
    m.main_channels = p.counts(value);
  } else if (key == "stride_blocks") {
    const auto list = p.counts(value);
    m.stride_blocks = std::set<std::size_t>(list.begin(), list.end());
  } else if (key == "reduction") {
    m.reduction = p.count(value);
  } else if (key == "streams") {
    m.streams = {false, false, false, false};
    for (auto name : split(value, ',')) m.streams[static_cast<std::size_t>(features::parse_stream(name))] = true;
  } else {
    throw ConfigError(p.where + ": unknown key 'model." + key + "'");
  }
}

void apply_train_key(train::TrainConfig& t, const std::string& key, std::string_view value, const ValueParser& p) {
  if (key == "epochs") {
    t.epochs = p.count(value);
  } else if (key == "warmup_epochs") {
    t.warmup_epochs = p.count(value);
  } else if (key == "base_lr") {
    t.base_lr = p.real(value);
  } else if (key == "momentum") {
    t.momentum = p.real(value);
  } else if (key == "weight_decay") {
    t.weight_decay = p.real(value);
  } else if (key == "batch_size") {
    t.batch_size = p.count(value);
  } else if (key == "seed") {
    t.seed = p.u64(value);
  } else {
    throw ConfigError(p.where + ": unknown key 'train." + key + "'");
  }
}

}  // namespace

KeyValues parse_key_values(std::string_view text, const std::string& source) {
  KeyValues out;
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (auto [it, inserted] = seen.emplace(key, line_no); !inserted) {
      throw ConfigError(where + ": key '" + key + "' already set on line " + std::to_string(it->second));
    }
    out.emplace_back(std::move(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

RunConfig parse_run_config(std::string_view text, const std::string& source, const RunConfig& defaults,
                           bool model_only) {
  RunConfig config = defaults;
  for (const auto& [key, value] : parse_key_values(text, source)) {
    const std::string where = source + " (" + key + ")";
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    const std::string field = dot == std::string::npos ? std::string() : key.substr(dot + 1);
    const ValueParser parser{field, where};
    if (section == "model" && dot != std::string::npos) {
      apply_model_key(config.model, field, value, parser);
    } else if (section == "train" && dot != std::string::npos && !model_only) {
      apply_train_key(config.train, field, value, parser);
    } else {
      throw ConfigError(source + ": unknown key '" + key + "'");
    }
  }
  config.model.validate();
  if (!model_only) config.train.validate();
  return config;
}

RunConfig load_run_config(const std::string& path, const RunConfig& defaults) {
  return parse_run_config(read_file(path), path, defaults);
}

std::string format_model_config(const nn::ModelConfig& m) {
  std::ostringstream ss;
  ss << "model.persons = " << m.persons << '\n';
  ss << "model.joints = " << m.joints << '\n';
  ss << "model.objects = " << m.objects << '\n';
  ss << "model.frames = " << m.frames << '\n';
  ss << "model.coord_channels = " << m.coord_channels << '\n';
  ss << "model.num_classes = " << m.num_classes << '\n';
  ss << "model.layout = " << graph::to_string(m.layout) << '\n';
  ss << "model.inter = " << graph::to_string(m.inter) << '\n';
  std::vector<std::string> pairs;
  for (const auto& a : m.attachments) pairs.push_back(std::to_string(a.slot) + ":" + std::to_string(a.joint));
  ss << "model.attachments = " << join(pairs) << '\n';
  ss << "model.input_channels = " << join(m.input_channels) << '\n';
  ss << "model.main_channels = " << join(m.main_channels) << '\n';
  ss << "model.stride_blocks = " << join(m.stride_blocks) << '\n';
  ss << "model.reduction = " << m.reduction << '\n';
  std::vector<std::string> streams;
  for (std::size_t s = 0; s < features::kStreamCount; ++s)
    if (m.streams[s]) streams.push_back(features::to_string(static_cast<features::Stream>(s)));
  ss << "model.streams = " << join(streams) << '\n';
  return ss.str();
}

std::string format_train_config(const train::TrainConfig& t) {
  std::ostringstream ss;
  ss << "train.epochs = " << t.epochs << '\n';
  ss << "train.warmup_epochs = " << t.warmup_epochs << '\n';
  ss << "train.base_lr = " << real_string(t.base_lr) << '\n';
  ss << "train.momentum = " << real_string(t.momentum) << '\n';
  ss << "train.weight_decay = " << real_string(t.weight_decay) << '\n';
  ss << "train.batch_size = " << t.batch_size << '\n';
  ss << "train.seed = " << t.seed << '\n';
  return ss.str();
}

std::string format_run_config(const RunConfig& config) {
  return format_model_config(config.model) + format_train_config(config.train);
}

RunConfig synthetic_run_config() {
  RunConfig c;
  c.model.persons = 3;
  c.model.joints = 5;
  c.model.objects = 1;
  c.model.frames = 16;
  c.model.coord_channels = 3;
  c.model.num_classes = 8;
  c.model.layout = graph::Layout::Chain;
  c.model.attachments = {{0, 4}};
  c.model.input_channels = {16, 16, 8};
  c.model.main_channels = {32, 32, 32, 64, 64, 64};
  c.train.epochs = 200;
  c.train.batch_size = 16;
  return c;
}

}  // namespace panograph::io
