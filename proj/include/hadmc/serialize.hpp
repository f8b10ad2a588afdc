#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hadmc/errors.hpp"

namespace hadmc::io {

/// Writes to a sibling temp file and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& contents);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& doc);

std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// Strict accessor over a JSON object. Every key read is remembered so that
/// `finish()` can reject keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& obj, std::string path);

  bool has(const std::string& key) const;
  const nlohmann::json& at(const std::string& key);
  std::string child_path(const std::string& key) const;

  double number(const std::string& key);
  double number_or(const std::string& key, double fallback);
  long integer(const std::string& key);
  long integer_or(const std::string& key, long fallback);
  bool boolean(const std::string& key);
  bool boolean_or(const std::string& key, bool fallback);
  std::string string(const std::string& key);
  std::string string_or(const std::string& key, const std::string& fallback);

  /// Throws ParseError naming the first unknown key.
  void finish() const;

  const std::string& path() const { return path_; }

 private:
  const nlohmann::json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

class BinaryWriter {
 public:
  void u64(std::uint64_t v);
  void i64(std::int64_t v);
  void f64(double v);
  void f32(float v);
  void str(const std::string& s);
  void floats(const std::vector<float>& v);
  void doubles(const std::vector<double>& v);
  void bytes(const std::vector<std::uint8_t>& v);

  const std::string& data() const { return buf_; }

 private:
  void raw(const void* p, std::size_t n);
  std::string buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string data) : buf_(std::move(data)) {}

  std::uint64_t u64();
  std::int64_t i64();
  double f64();
  float f32();
  std::string str();
  std::vector<float> floats();
  std::vector<double> doubles();
  std::vector<std::uint8_t> bytes();

  bool done() const { return pos_ == buf_.size(); }

 private:
  void raw(void* p, std::size_t n);
  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace hadmc::io
