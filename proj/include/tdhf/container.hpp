#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdhf/grid.hpp"

namespace tdhf {

/// Run directory layout:
///   <dir>/manifest.json          written last; its presence marks the commit
///   <dir>/data/<name>.bin        raw little-endian float64, row-major;
///                                complex data as interleaved (re, im) pairs
/// The manifest lists every dataset with dtype, shape, byte size and an
/// FNV-1a 64-bit checksum, plus free-form metadata under "meta".
struct DatasetInfo {
  std::string name;
  std::string file;  // relative to the run directory
  std::string dtype;  // "float64" or "complex128"
  std::vector<std::uint64_t> shape;
  std::uint64_t bytes = 0;
  std::string fnv1a64;  // 16 hex digits
};

std::uint64_t fnv1a64(const void* data, std::size_t bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

nlohmann::json grid_to_json(const GridSpec& g);
GridSpec grid_from_json(const nlohmann::json& j);

class ContainerWriter {
 public:
  /// Creates `dir` (and data/) if needed. An existing manifest.json is
  /// removed first so a half-written rerun is never mistaken for a result.
  explicit ContainerWriter(std::filesystem::path dir);

  void write_real(const std::string& name, std::span<const double> values, std::vector<std::uint64_t> shape);
  void write_complex(const std::string& name, std::span<const cplx> values, std::vector<std::uint64_t> shape);
  void write_field(const std::string& name, const RealField& f);
  void write_field(const std::string& name, const ComplexField& f);

  nlohmann::json& meta() { return meta_; }
  bool has_dataset(const std::string& name) const;
  const std::filesystem::path& dir() const { return dir_; }

  /// Writes manifest.json (via a temporary file and rename).
  void finalize(bool complete);

 private:
  void write_raw(const std::string& name, const std::string& dtype, const double* data, std::size_t count,
                 std::vector<std::uint64_t> shape);

  std::filesystem::path dir_;
  std::vector<DatasetInfo> datasets_;
  nlohmann::json meta_ = nlohmann::json::object();
};

class ContainerReader {
 public:
  /// Throws IoError if the manifest is missing or malformed.
  explicit ContainerReader(std::filesystem::path dir);

  const nlohmann::json& manifest() const { return manifest_; }
  const nlohmann::json& meta() const { return manifest_.at("meta"); }
  bool complete() const;
  const std::vector<DatasetInfo>& datasets() const { return datasets_; }
  const DatasetInfo& info(const std::string& name) const;
  bool has_dataset(const std::string& name) const;

  /// Throw IoError naming the dataset on size or checksum mismatch.
  std::vector<double> read_real(const std::string& name) const;
  std::vector<cplx> read_complex(const std::string& name) const;
  RealField read_real_field(const std::string& name, const GridSpec& g) const;
  ComplexField read_complex_field(const std::string& name, const GridSpec& g) const;

  /// Checks every dataset; returns the names that failed (empty when intact).
  std::vector<std::string> verify() const;

 private:
  std::vector<double> read_doubles(const DatasetInfo& d) const;

  std::filesystem::path dir_;
  nlohmann::json manifest_;
  std::vector<DatasetInfo> datasets_;
};

}  // namespace tdhf
