#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace waveq {

/// Shortest round-trippable decimal form (17 significant digits).
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Line-oriented CSV writer; all floating values go through fmt_g17 so files
/// are byte-reproducible.
class CsvFile {
public:
  CsvFile(const std::filesystem::path& path, const std::string& header) {
    out_.open(path);
    if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
    out_ << header << "\n";
  }

  CsvFile& field(const std::string& v) { return raw(v); }
  CsvFile& field(const char* v) { return raw(v); }
  CsvFile& field(double v) { return raw(fmt_g17(v)); }
  CsvFile& field(std::int64_t v) { return raw(std::to_string(v)); }
  CsvFile& field(int v) { return raw(std::to_string(v)); }
  CsvFile& field(bool v) { return raw(v ? "1" : "0"); }

  void end_row() {
    out_ << "\n";
    first_ = true;
  }

private:
  CsvFile& raw(const std::string& v) {
    if (!first_) out_ << ",";
    out_ << v;
    first_ = false;
    return *this;
  }

  std::ofstream out_;
  bool first_ = true;
};

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw std::runtime_error("cannot create output directory: " + dir.string());
}

}  // namespace waveq
