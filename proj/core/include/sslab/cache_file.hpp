#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sslab/singular_series.hpp"

namespace sslab {

// Versioned little-endian cache file: magic "SSL1", u32 version, u64 P,
// u32 k_max, u64 prime count, the primes as u32, the G_k values as f64 bit
// patterns, and a trailing FNV-1a checksum over everything before it.
inline constexpr char kCacheMagic[4] = {'S', 'S', 'L', '1'};
inline constexpr uint32_t kCacheVersion = 1;

// Resolves the cache directory: explicit flag > SSLAB_CACHE env > default.
std::filesystem::path resolve_cache_dir(const std::string& flag_value);

std::filesystem::path cache_file_path(const std::filesystem::path& dir,
                                      uint64_t truncation_prime, int k_max);

void save_cache(const GenericProductCache& cache,
                const std::filesystem::path& file);

// Restores a cache, validating magic, version and checksum. The prime table
// is resieved and cross-checked against the stored prime list.
GenericProductCache load_cache(const std::filesystem::path& file);

// Checksum of the file payload as stored; CacheError on a malformed file.
uint64_t cache_fingerprint(const std::filesystem::path& file);

// Checksum an in-memory cache as if it were serialized; matches the file
// fingerprint written by save_cache.
uint64_t cache_fingerprint(const GenericProductCache& cache);

// Full verification: checksum plus a bitwise compare of the stored G_k
// against values recomputed from the resieved table.
void verify_cache(const std::filesystem::path& file);

}  // namespace sslab
