#pragma once

// File formats: model JSON, dense matrix files, and result tables.
//
// Model JSON (indices are zero-based):
//   {
//     "n": 250,
//     "block_sizes": [5, 5, ...],        // or "block_size": 5 with "n"
//     "p": [0.9, 0.1, ...],              // Model 1, optional
//     "sets": [[0, 1], [2, 3]],          // Model 2, optional
//     "alphas": [0.8, 0.1],
//     "complement_alpha": 0.0,           // required when sets do not cover all blocks
//     "clamp_eps": 1e-6                  // optional: clamp p into [eps, 1 - eps]
//   }
//
// Matrix files:
//   *.csv  comma-separated real values, one matrix row per line, no header.
//   *.bin  "BSPWMAT1" magic, u8 is_complex, 7 padding bytes, u64 rows, u64 cols,
//          then little-endian doubles in row-major order ((re, im) pairs when
//          complex).

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bspw/model.hpp"

namespace bspw::io {

struct ModelSpec {
  BlockPartition partition;
  std::optional<PriorModel1> prior1;
  std::optional<PriorModel2> prior2;
};

ModelSpec parse_model_json(const std::string& text);
ModelSpec load_model(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

struct MatrixFile {
  Eigen::MatrixXcd values;
  bool is_complex = false;
};

void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXd& m);
void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXcd& m);
MatrixFile read_matrix_binary(const std::filesystem::path& path);

/// Dispatches on extension: .bin is the binary container, anything else CSV.
MatrixFile read_matrix(const std::filesystem::path& path);

enum class Format { csv, json };

/// Plain table with a header row. Cells are preformatted strings.
struct Table {
  std::string experiment;
  std::string scheme;  // empty for scheme-independent tables
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  /// Forces an output format regardless of the caller's choice.
  std::optional<Format> format;
};

std::string to_csv(const Table& table);
/// Array of objects keyed by column name; numeric-looking cells become numbers.
std::string to_json(const Table& table);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& data);

} // namespace bspw::io
