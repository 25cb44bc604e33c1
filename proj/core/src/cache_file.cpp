#include "sslab/cache_file.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <vector>

namespace sslab {

namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

uint64_t fnv1a(const std::vector<unsigned char>& bytes) {
  uint64_t h = kFnvOffset;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

void put_u32(std::vector<unsigned char>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
void put_u64(std::vector<unsigned char>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
void put_f64(std::vector<unsigned char>& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

struct Reader {
  const std::vector<unsigned char>& bytes;
  size_t pos = 0;

  uint32_t u32() {
    if (pos + 4 > bytes.size()) throw CacheError("cache file truncated");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    if (pos + 8 > bytes.size()) throw CacheError("cache file truncated");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(bytes[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
};

std::vector<unsigned char> serialize_payload(const GenericProductCache& c) {
  std::vector<unsigned char> out;
  out.insert(out.end(), kCacheMagic, kCacheMagic + 4);
  put_u32(out, kCacheVersion);
  put_u64(out, c.truncation());
  put_u32(out, static_cast<uint32_t>(c.k_max()));
  const auto& primes = c.table().primes();
  put_u64(out, primes.size());
  for (uint32_t p : primes) put_u32(out, p);
  for (int k = 0; k <= c.k_max(); ++k) put_f64(out, c.generic_product(k));
  return out;
}

std::vector<unsigned char> read_all(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw CacheError("cannot open cache file " + file.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

struct ParsedCache {
  uint64_t P;
  uint32_t k_max;
  std::vector<uint32_t> primes;
  std::vector<double> gk;
  uint64_t checksum;
};

ParsedCache parse(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 12 + 8) throw CacheError("cache file truncated");
  if (std::memcmp(bytes.data(), kCacheMagic, 4) != 0)
    throw CacheError("bad cache magic");
  std::vector<unsigned char> payload(bytes.begin(), bytes.end() - 8);
  Reader r{bytes};
  r.pos = 4;
  ParsedCache c;
  uint32_t version = r.u32();
  if (version != kCacheVersion)
    throw CacheError("unsupported cache version " + std::to_string(version));
  c.P = r.u64();
  c.k_max = r.u32();
  uint64_t n_primes = r.u64();
  if (n_primes > c.P) throw CacheError("cache prime count implausible");
  c.primes.reserve(n_primes);
  for (uint64_t i = 0; i < n_primes; ++i) c.primes.push_back(r.u32());
  for (uint32_t k = 0; k <= c.k_max; ++k) c.gk.push_back(r.f64());
  c.checksum = r.u64();
  if (r.pos != bytes.size()) throw CacheError("trailing bytes in cache file");
  if (fnv1a(payload) != c.checksum)
    throw CacheError("cache checksum mismatch (file corrupted)");
  return c;
}

}  // namespace

std::filesystem::path resolve_cache_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("SSLAB_CACHE"); env && *env) return env;
  return "sslab-cache";
}

std::filesystem::path cache_file_path(const std::filesystem::path& dir,
                                      uint64_t truncation_prime, int k_max) {
  return dir / ("gk_P" + std::to_string(truncation_prime) + "_K" +
                std::to_string(k_max) + ".sslab");
}

void save_cache(const GenericProductCache& cache,
                const std::filesystem::path& file) {
  auto payload = serialize_payload(cache);
  uint64_t checksum = fnv1a(payload);
  put_u64(payload, checksum);
  std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw CacheError("cannot write cache file " + file.string());
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw CacheError("short write to cache file " + file.string());
}

GenericProductCache load_cache(const std::filesystem::path& file) {
  ParsedCache c = parse(read_all(file));
  PrimeTable table(c.P);
  if (table.primes() != c.primes)
    throw CacheError("cache prime list does not match a fresh sieve");
  return GenericProductCache::from_parts(c.P, static_cast<int>(c.k_max),
                                         std::move(c.gk), std::move(table));
}

uint64_t cache_fingerprint(const std::filesystem::path& file) {
  ParsedCache c = parse(read_all(file));
  return c.checksum;
}

uint64_t cache_fingerprint(const GenericProductCache& cache) {
  return fnv1a(serialize_payload(cache));
}

void verify_cache(const std::filesystem::path& file) {
  ParsedCache c = parse(read_all(file));
  GenericProductCache fresh(c.P, static_cast<int>(c.k_max));
  if (fresh.table().primes() != c.primes)
    throw CacheError("cache prime list does not match a fresh sieve");
  for (uint32_t k = 0; k <= c.k_max; ++k)
    if (fresh.generic_product(static_cast<int>(k)) != c.gk[k])
      throw CacheError("cache G_k mismatch at k = " + std::to_string(k));
  if (c.gk.size() > 1 && c.gk[1] != 1.0)
    throw CacheError("cache G_1 must be exactly 1");
}

}  // namespace sslab
