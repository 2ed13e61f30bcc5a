#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "cli_error.hpp"

namespace mateoptix::cli {
namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (!quoted && line[i] == '#') return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

void collect(const pt::ptree& tree, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [key, child] : tree) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (child.empty()) {
      out.push_back(path);
    } else {
      collect(child, path, out);
    }
  }
}

}  // namespace

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CliError("config", "cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Config c = parse(buf.str(), path.string());
  c.base_dir_ = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return c;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::ostringstream cleaned;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(strip_comment(line));
    if (line.empty()) {
      cleaned << '\n';
      continue;
    }
    if (line.front() == '[') {
      cleaned << line << '\n';
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CliError("config", origin + ":" + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || key.find('.') != std::string::npos) {
      throw CliError("config", origin + ":" + std::to_string(number) + ": bad key '" + key + "'");
    }
    cleaned << key << '=' << unquote(trim(line.substr(eq + 1))) << '\n';
  }
  Config c;
  c.origin_ = origin;
  std::istringstream ini(cleaned.str());
  try {
    pt::read_ini(ini, c.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw CliError("config", origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  return c;
}

void Config::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw CliError("config", "override must look like section.key=value: " + assignment);
  }
  const std::string key = trim(assignment.substr(0, eq));
  const auto dot = key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == key.size() ||
      key.find('.', dot + 1) != std::string::npos) {
    throw CliError("config", "override must look like section.key=value: " + assignment);
  }
  tree_.put(key, unquote(trim(assignment.substr(eq + 1))));
}

bool Config::has(const std::string& key) const {
  const auto node = tree_.get_child_optional(key);
  return node && node->empty();
}

std::string Config::raw(const std::string& key) const {
  used_.insert(key);
  return tree_.get<std::string>(key);
}

double Config::number(const std::string& key) const {
  if (!has(key)) throw CliError("config", "missing required key " + key);
  const std::string v = raw(key);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw CliError("config", key + ": not a number: '" + v + "'");
  }
  return out;
}

double Config::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

int Config::integer(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw CliError("config", key + ": not an integer: '" + v + "'");
  }
  return out;
}

bool Config::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  if (v == "true") return true;
  if (v == "false") return false;
  throw CliError("config", key + ": expected true or false, got '" + v + "'");
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

std::string Config::text(const std::string& key) const {
  if (!has(key)) throw CliError("config", "missing required key " + key);
  return raw(key);
}

std::filesystem::path Config::resolve_path(const std::string& value) const {
  const std::filesystem::path p(value);
  return p.is_absolute() ? p : base_dir_ / p;
}

void Config::reject_unused() const {
  std::set<std::string> sections;
  for (const auto& k : used_) sections.insert(k.substr(0, k.find('.')));
  std::vector<std::string> keys;
  collect(tree_, "", keys);
  for (const auto& k : keys) {
    if (used_.count(k) || !sections.count(k.substr(0, k.find('.')))) continue;
    throw CliError("config", "key " + k + " in " + origin_ + " is not used by this command");
  }
}

}  // namespace mateoptix::cli
