#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace mateoptix::cli {

using Json = nlohmann::ordered_json;

// 17 significant digits (round-trip exact); non-finite values spelled out.
std::string format_double(double v);

// Table read from a headed CSV file; columns are looked up by name.
struct CsvTable {
  std::filesystem::path path;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;

  std::size_t column(const std::string& name) const;
};

// Requires every column in `required`; rows must be complete and numeric.
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& required);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(int v);
  CsvWriter& operator<<(const std::string& v);
  void end_row();
  void close();

 private:
  void separator();

  std::filesystem::path path_;
  std::ofstream out_;
  bool first_ = true;
};

// Non-finite numbers become null.
void write_json(const std::filesystem::path& path, const Json& value);
std::string dump_json(const Json& value);

void ensure_directory(const std::filesystem::path& dir);

}  // namespace mateoptix::cli
