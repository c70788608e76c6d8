#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace regensim::reports {

// Locale-free numeric formatting at 17 significant digits ('.' decimal
// separator), so identical runs produce byte-identical files.
std::string format_double(double v);

// CSV with '\n' line endings and a header row.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  void row(std::span<const double> values);
  void close();

 private:
  std::string path_;
  std::string buffer_;
  std::size_t n_columns_;
  bool closed_ = false;
};

void write_text_file(const std::string& path, const std::string& content);

// Serializes with sorted keys and a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& doc);

}  // namespace regensim::reports
