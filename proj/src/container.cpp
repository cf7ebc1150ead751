#include "tdhf/container.hpp"
#include "tdhf/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tdhf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

// Serialize doubles as little-endian bytes regardless of host order.
std::vector<unsigned char> to_le_bytes(const double* data, std::size_t count) {
  std::vector<unsigned char> out(count * sizeof(double));
  std::memcpy(out.data(), data, out.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < count; ++i) {
      unsigned char* p = out.data() + i * 8;
      for (int b = 0; b < 4; ++b) std::swap(p[b], p[7 - b]);
    }
  }
  return out;
}

std::vector<double> from_le_bytes(const std::vector<unsigned char>& bytes) {
  std::vector<double> out(bytes.size() / sizeof(double));
  std::vector<unsigned char> tmp = bytes;
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      unsigned char* p = tmp.data() + i * 8;
      for (int b = 0; b < 4; ++b) std::swap(p[b], p[7 - b]);
    }
  }
  std::memcpy(out.data(), tmp.data(), out.size() * sizeof(double));
  return out;
}

std::uint64_t element_count(const std::vector<std::uint64_t>& shape) {
  std::uint64_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

bool valid_name(const std::string& name) {
  if (name.empty() || name.size() > 200) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-' || c == '.';
    if (!ok) return false;
  }
  return name.front() != '.';
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

json grid_to_json(const GridSpec& g) {
  return json{{"nx", g.nx}, {"ny", g.ny}, {"dx", g.dx}, {"dy", g.dy}, {"x0", g.x0}, {"y0", g.y0},
              {"units", "bohr"}, {"layout", "row-major, x fastest"}};
}

GridSpec grid_from_json(const json& j) {
  try {
    GridSpec g{j.at("nx").get<int>(), j.at("ny").get<int>(), j.at("dx").get<double>(), j.at("dy").get<double>(),
               j.at("x0").get<double>(), j.at("y0").get<double>()};
    g.validate();
    return g;
  } catch (const json::exception& e) {
    throw IoError(std::string("grid metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("grid metadata: ") + e.what());
  }
}

ContainerWriter::ContainerWriter(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_ / "data", ec);
  if (ec) throw IoError("cannot create run directory " + dir_.string() + ": " + ec.message());
  fs::remove(dir_ / "manifest.json", ec);
}

bool ContainerWriter::has_dataset(const std::string& name) const {
  for (const auto& d : datasets_)
    if (d.name == name) return true;
  return false;
}

void ContainerWriter::write_raw(const std::string& name, const std::string& dtype, const double* data,
                                std::size_t count, std::vector<std::uint64_t> shape) {
  if (!valid_name(name)) throw std::invalid_argument("container: invalid dataset name '" + name + "'");
  if (has_dataset(name)) throw std::invalid_argument("container: duplicate dataset '" + name + "'");
  const std::uint64_t per = dtype == "complex128" ? 2 : 1;
  if (element_count(shape) * per != count) {
    throw std::invalid_argument("container: shape does not match data for '" + name + "'");
  }
  const auto bytes = to_le_bytes(data, count);
  DatasetInfo info{name, "data/" + name + ".bin", dtype, std::move(shape), bytes.size(),
                   hex64(fnv1a64(bytes.data(), bytes.size()))};
  std::ofstream os(dir_ / info.file, std::ios::binary | std::ios::trunc);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("container: failed writing dataset '" + name + "'");
  datasets_.push_back(std::move(info));
}

void ContainerWriter::write_real(const std::string& name, std::span<const double> values,
                                 std::vector<std::uint64_t> shape) {
  write_raw(name, "float64", values.data(), values.size(), std::move(shape));
}

void ContainerWriter::write_complex(const std::string& name, std::span<const cplx> values,
                                    std::vector<std::uint64_t> shape) {
  // std::complex<double> is layout-compatible with double[2].
  write_raw(name, "complex128", reinterpret_cast<const double*>(values.data()), 2 * values.size(), std::move(shape));
}

void ContainerWriter::write_field(const std::string& name, const RealField& f) {
  write_real(name, std::span<const double>(f.data(), f.size()),
             {static_cast<std::uint64_t>(f.grid.ny), static_cast<std::uint64_t>(f.grid.nx)});
}

void ContainerWriter::write_field(const std::string& name, const ComplexField& f) {
  write_complex(name, std::span<const cplx>(f.data(), f.size()),
                {static_cast<std::uint64_t>(f.grid.ny), static_cast<std::uint64_t>(f.grid.nx)});
}

void ContainerWriter::finalize(bool complete) {
  json j;
  j["format"] = "tdhf-run";
  j["format_version"] = 1;
  j["complete"] = complete;
  j["byte_order"] = "little";
  json ds = json::array();
  for (const auto& d : datasets_) {
    ds.push_back({{"name", d.name}, {"file", d.file}, {"dtype", d.dtype}, {"shape", d.shape},
                  {"bytes", d.bytes}, {"fnv1a64", d.fnv1a64}});
  }
  j["datasets"] = std::move(ds);
  j["meta"] = meta_;
  const fs::path tmp = dir_ / "manifest.json.tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    os << j.dump(2) << '\n';
    if (!os) throw IoError("container: failed writing manifest");
  }
  std::error_code ec;
  fs::rename(tmp, dir_ / "manifest.json", ec);
  if (ec) throw IoError("container: cannot commit manifest: " + ec.message());
}

ContainerReader::ContainerReader(fs::path dir) : dir_(std::move(dir)) {
  if (fs::is_regular_file(dir_) && dir_.filename() == "manifest.json") dir_ = dir_.parent_path();
  std::ifstream is(dir_ / "manifest.json");
  if (!is) throw IoError("container: no manifest.json in " + dir_.string());
  try {
    manifest_ = json::parse(is);
    if (manifest_.at("format") != "tdhf-run") throw IoError("container: unknown format tag");
    for (const auto& d : manifest_.at("datasets")) {
      datasets_.push_back(DatasetInfo{d.at("name"), d.at("file"), d.at("dtype"),
                                      d.at("shape").get<std::vector<std::uint64_t>>(), d.at("bytes"),
                                      d.at("fnv1a64")});
    }
    if (!manifest_.contains("meta")) manifest_["meta"] = json::object();
  } catch (const json::exception& e) {
    throw IoError(std::string("container: malformed manifest: ") + e.what());
  }
}

bool ContainerReader::complete() const { return manifest_.value("complete", false); }

bool ContainerReader::has_dataset(const std::string& name) const {
  for (const auto& d : datasets_)
    if (d.name == name) return true;
  return false;
}

const DatasetInfo& ContainerReader::info(const std::string& name) const {
  for (const auto& d : datasets_)
    if (d.name == name) return d;
  throw IoError("container: no dataset '" + name + "'");
}

std::vector<double> ContainerReader::read_doubles(const DatasetInfo& d) const {
  std::ifstream is(dir_ / d.file, std::ios::binary);
  if (!is) throw IoError("container: dataset '" + d.name + "' file missing");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const std::uint64_t per = d.dtype == "complex128" ? 16 : 8;
  if (bytes.size() != d.bytes || d.bytes != element_count(d.shape) * per) {
    throw IoError("container: dataset '" + d.name + "' is truncated or has the wrong size");
  }
  if (hex64(fnv1a64(bytes.data(), bytes.size())) != d.fnv1a64) {
    throw IoError("container: dataset '" + d.name + "' fails its checksum");
  }
  return from_le_bytes(bytes);
}

std::vector<double> ContainerReader::read_real(const std::string& name) const {
  const DatasetInfo& d = info(name);
  if (d.dtype != "float64") throw IoError("container: dataset '" + name + "' is not float64");
  return read_doubles(d);
}

std::vector<cplx> ContainerReader::read_complex(const std::string& name) const {
  const DatasetInfo& d = info(name);
  if (d.dtype != "complex128") throw IoError("container: dataset '" + name + "' is not complex128");
  const auto raw = read_doubles(d);
  std::vector<cplx> out(raw.size() / 2);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {raw[2 * k], raw[2 * k + 1]};
  return out;
}

RealField ContainerReader::read_real_field(const std::string& name, const GridSpec& g) const {
  const auto v = read_real(name);
  if (v.size() != g.size()) throw IoError("container: dataset '" + name + "' does not match the grid");
  RealField f(g);
  std::copy(v.begin(), v.end(), f.values.begin());
  return f;
}

ComplexField ContainerReader::read_complex_field(const std::string& name, const GridSpec& g) const {
  const auto v = read_complex(name);
  if (v.size() != g.size()) throw IoError("container: dataset '" + name + "' does not match the grid");
  ComplexField f(g);
  std::copy(v.begin(), v.end(), f.values.begin());
  return f;
}

std::vector<std::string> ContainerReader::verify() const {
  std::vector<std::string> bad;
  for (const auto& d : datasets_) {
    try {
      (void)read_doubles(d);
    } catch (const IoError&) {
      bad.push_back(d.name);
    }
  }
  return bad;
}

}  // namespace tdhf
