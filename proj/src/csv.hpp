#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/algorithm/string/trim.hpp>
#include <boost/tokenizer.hpp>
#include <fmt/format.h>

#include "mobfair/error.hpp"

namespace mobfair::csv {

/// Line-oriented CSV reader: comma separated, double-quote escaping, header
/// row mandatory. Blank lines are skipped.
class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) {
      throw Error(ErrorCode::IoFailure, fmt::format("cannot open {}", path.string()));
    }
    if (!next(header_)) {
      throw Error(ErrorCode::MalformedHeader, fmt::format("{} has no header row", path.string()));
    }
  }

  [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
  [[nodiscard]] std::size_t line() const { return line_; }

  bool next(std::vector<std::string>& fields) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      if (line_ == 1 && raw.starts_with("\xEF\xBB\xBF")) raw.erase(0, 3);
      if (boost::algorithm::trim_copy(raw).empty()) continue;
      using Sep = boost::escaped_list_separator<char>;
      boost::tokenizer<Sep> tok(raw, Sep('\\', ',', '"'));
      fields.clear();
      for (const auto& f : tok) fields.push_back(boost::algorithm::trim_copy(f));
      return true;
    }
    return false;
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

inline std::optional<std::int64_t> to_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, fmt::format("cannot write {}", path.string()));
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, fmt::format("write to {} failed", path.string()));
}

}  // namespace mobfair::csv
