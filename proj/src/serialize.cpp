#include "hadmc/serialize.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace hadmc::io {

namespace fs = std::filesystem;

void write_text_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

void write_json_atomic(const fs::path& path, const nlohmann::json& doc) {
  write_text_atomic(path, doc.dump(2) + "\n");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("", path.string() + ": " + e.what());
  }
}

ObjectReader::ObjectReader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
  if (!obj_.is_object()) throw ParseError(path_, "expected an object");
}

bool ObjectReader::has(const std::string& key) const { return obj_.contains(key); }

std::string ObjectReader::child_path(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

const nlohmann::json& ObjectReader::at(const std::string& key) {
  seen_.insert(key);
  auto it = obj_.find(key);
  if (it == obj_.end()) throw ParseError(child_path(key), "missing required field");
  return *it;
}

double ObjectReader::number(const std::string& key) {
  const auto& v = at(key);
  if (!v.is_number()) throw ParseError(child_path(key), "expected a number");
  return v.get<double>();
}

double ObjectReader::number_or(const std::string& key, double fallback) {
  seen_.insert(key);
  return has(key) ? number(key) : fallback;
}

long ObjectReader::integer(const std::string& key) {
  const auto& v = at(key);
  if (v.is_number_integer()) return v.get<long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<double>(static_cast<long>(d))) return static_cast<long>(d);
  }
  throw ParseError(child_path(key), "expected an integer");
}

long ObjectReader::integer_or(const std::string& key, long fallback) {
  seen_.insert(key);
  return has(key) ? integer(key) : fallback;
}

bool ObjectReader::boolean(const std::string& key) {
  const auto& v = at(key);
  if (!v.is_boolean()) throw ParseError(child_path(key), "expected a boolean");
  return v.get<bool>();
}

bool ObjectReader::boolean_or(const std::string& key, bool fallback) {
  seen_.insert(key);
  return has(key) ? boolean(key) : fallback;
}

std::string ObjectReader::string(const std::string& key) {
  const auto& v = at(key);
  if (!v.is_string()) throw ParseError(child_path(key), "expected a string");
  return v.get<std::string>();
}

std::string ObjectReader::string_or(const std::string& key, const std::string& fallback) {
  seen_.insert(key);
  return has(key) ? string(key) : fallback;
}

void ObjectReader::finish() const {
  for (auto it = obj_.begin(); it != obj_.end(); ++it) {
    if (!seen_.count(it.key())) throw ParseError(child_path(it.key()), "unknown field");
  }
}

void BinaryWriter::raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
void BinaryWriter::u64(std::uint64_t v) { raw(&v, sizeof v); }
void BinaryWriter::i64(std::int64_t v) { raw(&v, sizeof v); }
void BinaryWriter::f64(double v) { raw(&v, sizeof v); }
void BinaryWriter::f32(float v) { raw(&v, sizeof v); }

void BinaryWriter::str(const std::string& s) {
  u64(s.size());
  raw(s.data(), s.size());
}

void BinaryWriter::floats(const std::vector<float>& v) {
  u64(v.size());
  raw(v.data(), v.size() * sizeof(float));
}

void BinaryWriter::doubles(const std::vector<double>& v) {
  u64(v.size());
  raw(v.data(), v.size() * sizeof(double));
}

void BinaryWriter::bytes(const std::vector<std::uint8_t>& v) {
  u64(v.size());
  raw(v.data(), v.size());
}

void BinaryReader::raw(void* p, std::size_t n) {
  if (pos_ + n > buf_.size()) throw ParseError("", "truncated binary stream");
  std::memcpy(p, buf_.data() + pos_, n);
  pos_ += n;
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  raw(&v, sizeof v);
  return v;
}

std::int64_t BinaryReader::i64() {
  std::int64_t v;
  raw(&v, sizeof v);
  return v;
}

double BinaryReader::f64() {
  double v;
  raw(&v, sizeof v);
  return v;
}

float BinaryReader::f32() {
  float v;
  raw(&v, sizeof v);
  return v;
}

std::string BinaryReader::str() {
  std::string s(u64(), '\0');
  raw(s.data(), s.size());
  return s;
}

std::vector<float> BinaryReader::floats() {
  std::vector<float> v(u64());
  raw(v.data(), v.size() * sizeof(float));
  return v;
}

std::vector<double> BinaryReader::doubles() {
  std::vector<double> v(u64());
  raw(v.data(), v.size() * sizeof(double));
  return v;
}

std::vector<std::uint8_t> BinaryReader::bytes() {
  std::vector<std::uint8_t> v(u64());
  raw(v.data(), v.size());
  return v;
}

}  // namespace hadmc::io
