#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sslab/cache_file.hpp"
#include "sslab/io.hpp"

using namespace sslab;
namespace fs = std::filesystem;

TEST_SUITE("cache-io") {

TEST_CASE("cache save / load / verify round trip") {
  fs::path dir = fs::temp_directory_path() / "sslab-cache-test";
  fs::remove_all(dir);

  GenericProductCache cache(10000, 6);
  fs::path file = cache_file_path(dir, 10000, 6);
  save_cache(cache, file);
  CHECK(fs::exists(file));

  GenericProductCache loaded = load_cache(file);
  CHECK(loaded.truncation() == 10000);
  CHECK(loaded.k_max() == 6);
  for (int k = 0; k <= 6; ++k)
    CHECK(loaded.generic_product(k) == cache.generic_product(k));
  CHECK(loaded.generic_product(1) == 1.0);

  CHECK_NOTHROW(verify_cache(file));
  CHECK(cache_fingerprint(file) != 0);

  // corrupt one payload byte: checksum must catch it
  {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(20);
    char b;
    f.seekg(20);
    f.get(b);
    f.seekp(20);
    f.put(static_cast<char>(b ^ 0x40));
  }
  CHECK_THROWS_AS(load_cache(file), CacheError);
  CHECK_THROWS_AS(verify_cache(file), CacheError);

  fs::remove_all(dir);
}

TEST_CASE("cache dir resolution order") {
  CHECK(resolve_cache_dir("explicit-dir") == fs::path("explicit-dir"));
  setenv("SSLAB_CACHE", "/tmp/sslab-env-cache", 1);
  CHECK(resolve_cache_dir("") == fs::path("/tmp/sslab-env-cache"));
  unsetenv("SSLAB_CACHE");
  CHECK(resolve_cache_dir("") == fs::path("sslab-cache"));
}

TEST_CASE("load rejects malformed files") {
  fs::path dir = fs::temp_directory_path() / "sslab-cache-test2";
  fs::create_directories(dir);
  fs::path file = dir / "bad.sslab";
  {
    std::ofstream f(file, std::ios::binary);
    f << "not a cache";
  }
  CHECK_THROWS_AS(load_cache(file), CacheError);
  fs::remove_all(dir);
}

TEST_CASE("double formatting round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, 745800.256789012345, -2.2250738585072014e-308,
                   1.7976931348623157e308, 0.0, 2.5e-15}) {
    std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
}

}  // TEST_SUITE
