#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "corrbandit/error.hpp"

namespace corrbandit::harness {

/// Files of one study, kept in memory until the whole study has succeeded.
class OutputBundle {
 public:
  void add(const std::string& relative_path, std::string contents) {
    files_[relative_path] = std::move(contents);
  }
  void add_json(const std::string& relative_path, const nlohmann::json& j) {
    add(relative_path, j.dump(2) + "\n");
  }
  const std::map<std::string, std::string>& files() const { return files_; }
  const std::string& at(const std::string& relative_path) const { return files_.at(relative_path); }

  /// Writes every file under `dir`. Each file goes to a temporary name first
  /// and is renamed into place, so readers never see a half-written file.
  void write(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    for (const auto& [rel, contents] : files_) {
      const auto target = dir / rel;
      std::filesystem::create_directories(target.parent_path(), ec);
      const auto tmp = target.string() + ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp);
        out << contents;
        if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp);
      }
      std::filesystem::rename(tmp, target, ec);
      if (ec) throw Error(ErrorCode::IoError, "cannot rename " + tmp + ": " + ec.message());
    }
  }

 private:
  std::map<std::string, std::string> files_;
};

/// Binomial standard error sqrt(p (1 - p) / n).
inline double binomial_se(double p, double n) { return n > 0 ? std::sqrt(p * (1.0 - p) / n) : 0.0; }

}  // namespace corrbandit::harness
