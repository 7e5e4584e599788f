#include "bspw/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace bspw::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic = {'B', 'S', 'P', 'W', 'M', 'A', 'T', '1'};

static_assert(std::endian::native == std::endian::little, "binary matrix format assumes a little-endian host");

std::runtime_error io_error(const fs::path& path, const std::string& what) {
  return std::runtime_error(path.string() + ": " + what);
}

template <class T>
std::vector<T> get_vector(const json& j, const char* key) {
  try {
    return j.at(key).get<std::vector<T>>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model: field '") + key + "': " + e.what());
  }
}

template <class T>
T get_scalar(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model: field '") + key + "': " + e.what());
  }
}

} // namespace

ModelSpec parse_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("model: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("model: expected a JSON object");
  static const std::set<std::string> known = {"n", "block_sizes", "block_size", "p", "sets", "alphas",
                                              "complement_alpha", "clamp_eps"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("model: unknown field '" + key + "'");
  }
  if (!j.contains("n")) throw std::invalid_argument("model: missing field 'n'");
  const auto n = get_scalar<std::size_t>(j, "n");
  std::vector<std::size_t> sizes;
  if (j.contains("block_sizes")) {
    sizes = get_vector<std::size_t>(j, "block_sizes");
  } else if (j.contains("block_size")) {
    const auto k = get_scalar<std::size_t>(j, "block_size");
    if (k == 0 || n % k != 0) {
      throw std::invalid_argument("model: block_size " + std::to_string(k) + " does not divide n = " + std::to_string(n));
    }
    sizes.assign(n / k, k);
  } else {
    throw std::invalid_argument("model: need 'block_sizes' or 'block_size'");
  }
  ModelSpec spec{validate_partition(n, sizes), std::nullopt, std::nullopt};
  const std::size_t q = spec.partition.num_blocks();

  if (j.contains("p")) {
    auto p = get_vector<double>(j, "p");
    if (p.size() != q) {
      throw std::invalid_argument("model: 'p' has " + std::to_string(p.size()) + " entries for " + std::to_string(q) +
                                  " blocks");
    }
    if (j.contains("clamp_eps")) {
      spec.prior1 = PriorModel1::clamped(std::move(p), get_scalar<double>(j, "clamp_eps"));
    } else {
      spec.prior1 = PriorModel1(std::move(p));
    }
  }
  if (j.contains("sets") || j.contains("alphas")) {
    auto sets = get_vector<std::vector<std::size_t>>(j, "sets");
    auto alphas = get_vector<double>(j, "alphas");
    std::optional<double> complement;
    if (j.contains("complement_alpha")) complement = get_scalar<double>(j, "complement_alpha");
    spec.prior2 = PriorModel2(q, std::move(sets), std::move(alphas), complement);
  }
  return spec;
}

ModelSpec load_model(const fs::path& path) {
  try {
    return parse_model_json(read_text(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error(path, "cannot open for writing");
  out << text;
  if (!out) throw io_error(path, "write failed");
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path, "cannot open for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      const auto first = cell.find_first_not_of(" \t");
      const auto last = cell.find_last_not_of(" \t");
      if (first == std::string::npos) throw io_error(path, "empty cell on line " + std::to_string(lineno));
      const std::string trimmed = cell.substr(first, last - first + 1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), v);
      if (ec != std::errc() || ptr != trimmed.data() + trimmed.size()) {
        throw io_error(path, "bad number '" + trimmed + "' on line " + std::to_string(lineno));
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw io_error(path, "line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                               " columns, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error(path, "no data");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  write_text(path, out);
}

namespace {

void write_binary(const fs::path& path, Eigen::Index rows, Eigen::Index cols, bool is_complex,
                  const std::vector<double>& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error(path, "cannot open for writing");
  out.write(kMagic.data(), kMagic.size());
  const std::array<char, 8> flags = {static_cast<char>(is_complex ? 1 : 0), 0, 0, 0, 0, 0, 0, 0};
  out.write(flags.data(), flags.size());
  const std::uint64_t shape[2] = {static_cast<std::uint64_t>(rows), static_cast<std::uint64_t>(cols)};
  out.write(reinterpret_cast<const char*>(shape), sizeof(shape));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!out) throw io_error(path, "write failed");
}

} // namespace

void write_matrix_binary(const fs::path& path, const Eigen::MatrixXd& m) {
  std::vector<double> payload;
  payload.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) payload.push_back(m(i, j));
  write_binary(path, m.rows(), m.cols(), false, payload);
}

void write_matrix_binary(const fs::path& path, const Eigen::MatrixXcd& m) {
  std::vector<double> payload;
  payload.reserve(2 * static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      payload.push_back(m(i, j).real());
      payload.push_back(m(i, j).imag());
    }
  }
  write_binary(path, m.rows(), m.cols(), true, payload);
}

MatrixFile read_matrix_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path, "cannot open for reading");
  std::array<char, 8> magic{};
  std::array<char, 8> flags{};
  std::uint64_t shape[2] = {0, 0};
  in.read(magic.data(), magic.size());
  in.read(flags.data(), flags.size());
  in.read(reinterpret_cast<char*>(shape), sizeof(shape));
  if (!in || magic != kMagic) throw io_error(path, "not a BSPWMAT1 matrix file");
  if (flags[0] != 0 && flags[0] != 1) throw io_error(path, "bad complex flag");
  const bool is_complex = flags[0] == 1;
  const std::uint64_t limit = std::numeric_limits<std::uint32_t>::max();
  if (shape[0] == 0 || shape[1] == 0 || shape[0] > limit || shape[1] > limit) throw io_error(path, "bad shape");
  const std::size_t count = static_cast<std::size_t>(shape[0] * shape[1]) * (is_complex ? 2 : 1);
  std::vector<double> payload(count);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw io_error(path, "truncated payload");
  MatrixFile out;
  out.is_complex = is_complex;
  out.values.resize(static_cast<Eigen::Index>(shape[0]), static_cast<Eigen::Index>(shape[1]));
  std::size_t pos = 0;
  for (Eigen::Index i = 0; i < out.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
      const double re = payload[pos++];
      const double im = is_complex ? payload[pos++] : 0.0;
      out.values(i, j) = {re, im};
    }
  }
  return out;
}

MatrixFile read_matrix(const fs::path& path) {
  if (path.extension() == ".bin") return read_matrix_binary(path);
  MatrixFile out;
  out.values = read_matrix_csv(path).cast<std::complex<double>>();
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += row[c];
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const Table& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    json obj = json::object();
    for (std::size_t c = 0; c < table.columns.size() && c < row.size(); ++c) {
      const auto& cell = row[c];
      json parsed = json::parse(cell, nullptr, false);
      const bool literal = !parsed.is_discarded() && (parsed.is_number() || parsed.is_boolean() || parsed.is_array());
      obj[table.columns[c]] = literal ? std::move(parsed) : json(cell);
    }
    rows.push_back(std::move(obj));
  }
  json doc = {{"experiment", table.experiment}, {"scheme", table.scheme}, {"columns", table.columns}, {"rows", rows}};
  return doc.dump(2) + "\n";
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf.data(), 16);
}

} // namespace bspw::io
