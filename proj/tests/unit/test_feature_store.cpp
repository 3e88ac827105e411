#include "catalyst/feature_store.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "test_support.hpp"

using namespace catalyst;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  std::vector<ActivationMap> maps;
  std::vector<LogitRecord> logits;
  ClassifierHead head;
};

Fixture make(testing::Gen& g, std::size_t n, std::uint32_t c, std::uint32_t k,
             std::uint32_t classes) {
  Fixture f;
  for (std::size_t i = 0; i < n; ++i) {
    f.maps.push_back(g.map(c, k));
    LogitRecord r;
    for (std::uint32_t j = 0; j < classes; ++j) r.values.push_back(static_cast<float>(g.normal()));
    f.logits.push_back(r);
  }
  f.head = g.head(c, classes);
  return f;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("round-trip preserves every value and the head") {
  testing::Gen g(1);
  const auto f = make(g, 7, 5, 3, 4);
  testing::TempDir dir;
  const auto m = save_dump(f.maps, f.logits, f.head, dir.path() / "split", "cifar10", SplitRole::kIdTest);
  const auto d = load_dump(read_manifest(dir.path() / "split"));
  CHECK(d.maps == f.maps);
  CHECK(d.logits == f.logits);
  REQUIRE(d.head);
  CHECK(*d.head == f.head);
  CHECK(d.manifest.name == "cifar10");
  CHECK(d.manifest.role == SplitRole::kIdTest);
  CHECK(validate_dump(m).empty());
}

TEST_CASE("2048x7x7 single sample") {
  testing::Gen g(2);
  const auto f = make(g, 1, 2048, 7, 10);
  testing::TempDir dir;
  const auto m = save_dump(f.maps, f.logits, std::nullopt, dir.path(), "big", SplitRole::kOod);
  CHECK(fs::file_size(dir.path() / "activations.catf") == 20 + 2048 * 49 * 4);
  const auto d = load_dump(m);
  CHECK(d.maps.size() == 1);
  CHECK_FALSE(d.head);
}

TEST_CASE("manifest JSON has a fixed key order") {
  testing::Gen g(3);
  const auto f = make(g, 2, 2, 2, 2);
  testing::TempDir dir;
  const auto m = save_dump(f.maps, f.logits, f.head, dir.path(), "x", SplitRole::kIdTrain);
  const std::string j = manifest_to_json(m);
  CHECK(j.find("format_version") < j.find("name"));
  CHECK(j.find("n_classes") < j.find("files"));
  CHECK(read_manifest(dir.path() / "manifest.json").n_samples == 2);
}

TEST_CASE("header/manifest mismatch names both values") {
  testing::Gen g(4);
  const auto f = make(g, 3, 4, 2, 3);
  testing::TempDir dir;
  auto m = save_dump(f.maps, f.logits, f.head, dir.path(), "x", SplitRole::kIdTest);
  m.n_channels = 5;
  try {
    load_dump(m);
    FAIL("expected mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
    CHECK(std::string(e.what()).find("(4)") != std::string::npos);
    CHECK(std::string(e.what()).find("(5)") != std::string::npos);
  }
  CHECK_FALSE(validate_dump(m).empty());
}

TEST_CASE("NaN activation is reported with sample and channel") {
  testing::Gen g(5);
  auto f = make(g, 3, 4, 2, 3);
  f.maps[1].mutable_values()[2 * 4 + 1] = std::numeric_limits<float>::quiet_NaN();
  testing::TempDir dir;
  const auto m = save_dump(f.maps, f.logits, f.head, dir.path(), "x", SplitRole::kIdTest);
  const auto v = validate_dump(m);
  REQUIRE(v.size() == 1);
  CHECK(v[0].sample == 1u);
  CHECK(v[0].channel == 2u);
  CHECK_THROWS_AS(load_dump(m), Error);
}

TEST_CASE("negative activations need the override") {
  testing::Gen g(6);
  auto f = make(g, 2, 2, 2, 2);
  f.maps[0].mutable_values()[0] = -1.0f;
  testing::TempDir dir;
  const auto m = save_dump(f.maps, f.logits, f.head, dir.path(), "x", SplitRole::kIdTest);
  CHECK_THROWS_AS(load_dump(m), Error);
  CHECK_NOTHROW(load_dump(m, LoadOptions{true}));
  CHECK(validate_dump(m, LoadOptions{true}).empty());
}

TEST_CASE("bad magic, truncation and trailing bytes") {
  testing::Gen g(7);
  const auto f = make(g, 2, 3, 2, 2);
  testing::TempDir dir;
  const auto m = save_dump(f.maps, f.logits, f.head, dir.path(), "x", SplitRole::kIdTest);
  const fs::path act = dir.path() / "activations.catf";
  const auto orig = slurp(act);

  auto bad = orig;
  bad[0] = 'X';
  spit(act, bad);
  try {
    load_dump(m);
    FAIL("expected bad magic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBadMagic);
  }

  spit(act, std::vector<char>(orig.begin(), orig.end() - 4));
  try {
    load_dump(m);
    FAIL("expected truncation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTruncated);
  }

  auto longer = orig;
  longer.push_back(0);
  spit(act, longer);
  CHECK_THROWS_AS(load_dump(m), Error);
  CHECK_FALSE(validate_dump(m).empty());
}

TEST_CASE("validate_dump is empty exactly when load_dump succeeds") {
  testing::Gen g(8);
  for (int t = 0; t < 30; ++t) {
    auto f = make(g, g.index(1, 4), static_cast<std::uint32_t>(g.index(1, 4)), 2, 2);
    if (g.coin(0.3)) f.maps[0].mutable_values()[0] = -0.5f;
    if (g.coin(0.3)) f.maps[0].mutable_values()[1] = std::numeric_limits<float>::infinity();
    testing::TempDir dir;
    auto m = save_dump(f.maps, f.logits, f.head, dir.path(), "x", SplitRole::kIdTest);
    if (g.coin(0.3)) m.n_samples += 1;
    bool loaded = true;
    try {
      load_dump(m);
    } catch (const Error&) {
      loaded = false;
    }
    CHECK(loaded == validate_dump(m).empty());
  }
}

TEST_CASE("save_dump argument checks") {
  testing::Gen g(9);
  const auto f = make(g, 2, 2, 2, 2);
  testing::TempDir dir;
  CHECK_THROWS_AS(save_dump({}, {}, std::nullopt, dir.path(), "x", SplitRole::kOod), Error);
  CHECK_THROWS_AS(save_dump(f.maps, std::span(f.logits).first(1), std::nullopt, dir.path(), "x",
                            SplitRole::kOod),
                  Error);
  CHECK_THROWS_AS(ActivationMap(2, 2, std::vector<float>(7)), Error);
  CHECK_THROWS_AS(read_manifest(dir.path() / "missing"), Error);
}

TEST_CASE("split roles round-trip") {
  for (auto r : {SplitRole::kIdTrain, SplitRole::kIdVal, SplitRole::kIdTest, SplitRole::kOod}) {
    CHECK(parse_split_role(to_string(r)) == r);
  }
  CHECK_THROWS_AS(parse_split_role("test"), Error);
}
