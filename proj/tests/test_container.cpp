#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "tdhf/container.hpp"
#include "tdhf/errors.hpp"

using namespace tdhf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("tdhf_test_container_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("round trip of real and complex data") {
  const auto dir = scratch("roundtrip");
  const GridSpec g{8, 8, 0.5, 0.25, -2.0, -0.5};
  RealField r(g);
  ComplexField c(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    r.values[k] = 0.1 * k - 1.0;
    c.values[k] = {1.0 / (k + 1.0), -double(k)};
  }
  {
    ContainerWriter w(dir);
    w.write_field("rho", r);
    w.write_field("psi.0", c);
    w.write_real("times", std::vector<double>{0.0, 1.5, 3.0}, {3});
    w.meta()["grid"] = grid_to_json(g);
    w.meta()["note"] = "x";
    CHECK_THROWS_AS(w.write_real("times", std::vector<double>{1.0}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(w.write_real("bad/name", std::vector<double>{1.0}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(w.write_real("shape", std::vector<double>{1.0, 2.0}, {3}), std::invalid_argument);
    w.finalize(true);
  }
  const ContainerReader rd(dir);
  CHECK(rd.complete());
  CHECK(rd.manifest()["format"] == "tdhf-run");
  CHECK(rd.manifest()["format_version"] == 1);
  CHECK(rd.datasets().size() == 3);
  CHECK(rd.info("rho").shape == std::vector<std::uint64_t>{8, 8});
  CHECK(rd.info("psi.0").dtype == "complex128");
  CHECK(rd.info("psi.0").bytes == g.size() * 16);
  CHECK(grid_from_json(rd.meta()["grid"]) == g);
  const RealField r2 = rd.read_real_field("rho", g);
  const ComplexField c2 = rd.read_complex_field("psi.0", g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    REQUIRE(r2.values[k] == r.values[k]);
    REQUIRE(c2.values[k] == c.values[k]);
  }
  CHECK(rd.read_real("times") == std::vector<double>{0.0, 1.5, 3.0});
  CHECK(rd.verify().empty());
  CHECK_THROWS_AS(rd.read_real("missing"), IoError);
  CHECK_THROWS_AS(rd.read_real("psi.0"), IoError);
  CHECK_THROWS_AS(rd.read_real_field("times", g), IoError);

  // Opening through the manifest path works too.
  CHECK(ContainerReader(dir / "manifest.json").datasets().size() == 3);
  fs::remove_all(dir);
}

TEST_CASE("damage is detected and named") {
  const auto dir = scratch("damage");
  {
    ContainerWriter w(dir);
    w.write_real("a", std::vector<double>{1.0, 2.0, 3.0, 4.0}, {4});
    w.write_real("b", std::vector<double>{5.0, 6.0}, {2});
    w.finalize(false);
  }
  CHECK_FALSE(ContainerReader(dir).complete());
  {
    // Flip one byte of "a".
    std::fstream f(dir / "data" / "a.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3);
    f.put('\x7f');
  }
  {
    // Truncate "b".
    fs::resize_file(dir / "data" / "b.bin", 8);
  }
  const ContainerReader rd(dir);
  try {
    (void)rd.read_real("a");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("'a'") != std::string::npos);
  }
  CHECK_THROWS_AS(rd.read_real("b"), IoError);
  CHECK(rd.verify() == std::vector<std::string>{"a", "b"});
  fs::remove_all(dir);
}

TEST_CASE("missing or malformed manifests") {
  const auto dir = scratch("manifest");
  CHECK_THROWS_AS(ContainerReader{dir}, IoError);
  {
    ContainerWriter w(dir);
    w.finalize(true);
  }
  { std::ofstream(dir / "manifest.json") << "{ not json"; }
  CHECK_THROWS_AS(ContainerReader{dir}, IoError);
  { std::ofstream(dir / "manifest.json") << R"({"format": "other", "datasets": []})"; }
  CHECK_THROWS_AS(ContainerReader{dir}, IoError);

  // Reopening for writing clears the old commit marker.
  { ContainerWriter w(dir); }
  CHECK_FALSE(fs::exists(dir / "manifest.json"));
  fs::remove_all(dir);

  CHECK_THROWS_AS(grid_from_json(nlohmann::json{{"nx", 4}}), IoError);
}
