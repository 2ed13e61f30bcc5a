#pragma once

// Key/value run configuration: `[section]` headers, `key = value` lines,
// '#' comments, optional double quotes around strings.

#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <set>
#include <string>

namespace mateoptix::cli {

class Config {
 public:
  Config() = default;

  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text, const std::string& origin);

  // `section.key=value` override from the command line.
  void set_override(const std::string& assignment);

  bool has(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  double number(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::string text(const std::string& key) const;

  // Inputs named in the file resolve against the file's directory.
  std::filesystem::path resolve_path(const std::string& value) const;

  // Throws for unread keys inside sections the command reads; sections it
  // never touches are ignored so one file can serve several commands.
  void reject_unused() const;

 private:
  std::string raw(const std::string& key) const;

  boost::property_tree::ptree tree_;
  std::filesystem::path base_dir_ = ".";
  std::string origin_ = "<none>";
  mutable std::set<std::string> used_;
};

}  // namespace mateoptix::cli
