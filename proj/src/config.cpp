#include "antipure/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace antipure {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Config Config::defaults() {
  Config c;
  auto& v = c.values_;
  v["global.seed"] = "0";

  v["schedule.steps"] = "100";
  v["schedule.beta_start"] = "0.0001";
  v["schedule.beta_end"] = "0.02";

  v["model.in_channels"] = "1";
  v["model.base_channels"] = "8";
  v["model.num_blocks"] = "2";
  v["model.embed_dim"] = "16";

  v["data.count"] = "256";
  v["data.size"] = "32";
  v["data.seed"] = "1";

  v["train.steps"] = "2000";
  v["train.lr"] = "0.2";
  v["train.batch_size"] = "8";
  v["train.seed"] = "5";

  v["attack.method"] = "antipure";
  v["attack.eta"] = exact(16.0 / 255.0);
  v["attack.alpha"] = "0.005";
  v["attack.steps"] = "100";
  v["attack.lambda1"] = "0.5";
  v["attack.lambda2"] = "0.5";
  v["attack.t_err"] = "99";
  v["attack.t_p"] = "10";
  v["attack.patch_size"] = "8";
  v["attack.seed"] = "0";

  v["purify.t_p"] = "10";
  v["purify.iterations"] = "20";
  v["purify.rounds"] = "2";
  v["purify.gamma"] = "0.1";
  v["purify.grid_size"] = "32";
  v["purify.grid_stride"] = "32";
  v["purify.seed"] = "0";

  v["finetune.steps"] = "300";
  v["finetune.lr"] = "0.2";
  v["finetune.batch_size"] = "8";
  v["finetune.seed"] = "0";

  v["sample.count"] = "16";
  v["sample.seed"] = "0";

  v["probe.timesteps"] = "10,50";

  v["metrics.patch_size"] = "8";

  v["workflow.arms"] = "none,pgd_ddpm,pgd_ddpm+fre,pgd_ddpm+err_t,antipure";
  v["workflow.checkpoints"] = "";
  v["workflow.images"] = "16";
  v["workflow.image_seed"] = "2";
  v["workflow.samples"] = "16";

  v["io.in"] = "";
  v["io.clean"] = "";
  v["io.model"] = "";
  v["io.out"] = "";
  return c;
}

void Config::merge_text(std::string_view text, const std::string& source) {
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    if (!has(full)) throw ConfigError(where + ": unknown key '" + full + "'");
    values_[full] = trim(std::string_view(line).substr(eq + 1));
  }
}

void Config::set_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (!has(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = trim(assignment.substr(eq + 1));
}

void Config::set(const std::string& key, const std::string& value) {
  if (!has(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string& s = get(key);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) throw ConfigError(key + ": '" + s + "' is not a number");
  return v;
}

std::int64_t Config::get_int(const std::string& key) const {
  const std::string& s = get(key);
  std::int64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) throw ConfigError(key + ": '" + s + "' is not an integer");
  return v;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string& s = get(key);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    throw ConfigError(key + ": '" + s + "' is not a non-negative integer");
  }
  return v;
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const std::string& s : get_list(key)) {
    int v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) throw ConfigError(key + ": '" + s + "' is not an integer");
    out.push_back(v);
  }
  return out;
}

std::string Config::to_text() const {
  std::string out;
  std::string section;
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!out.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + value + "\n";
  }
  return out;
}

}  // namespace antipure
