// sslab: singular-series laboratory command line.
//
// Subcommands compute sums of k-fold singular series (R_k), reduced-residue
// window moments and their exponential-sum identities, prime window moments,
// and the function-field analogs; every run writes a CSV plus a JSON
// manifest with the full parameter map and cache fingerprint.
//
// Exit codes: 0 success, 2 identity violation, 3 budget error, 64 usage.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sslab/arith.hpp"
#include "sslab/cache_file.hpp"
#include "sslab/function_field.hpp"
#include "sslab/io.hpp"
#include "sslab/prime_moments.hpp"
#include "sslab/rational.hpp"
#include "sslab/reduced_residues.hpp"
#include "sslab/rk_sums.hpp"
#include "sslab/singular_series.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace sslab;

namespace {

constexpr const char* kVersion = "sslab 0.1.0";
constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kLog2Pi = 1.8378770664093454836;

struct RunContext {
  int threads = 0;
  std::string cache_dir;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Loads the on-disk cache when present, otherwise builds in memory.
struct CacheHandle {
  GenericProductCache cache;
  std::string fingerprint;
};

CacheHandle obtain_cache(const RunContext& ctx, uint64_t P, int k_max) {
  fs::path file = cache_file_path(resolve_cache_dir(ctx.cache_dir), P, k_max);
  if (fs::exists(file)) {
    std::string fp = hex64(cache_fingerprint(file));
    return {load_cache(file), std::move(fp)};
  }
  GenericProductCache c(P, k_max);
  std::string fp = hex64(cache_fingerprint(c));
  return {std::move(c), std::move(fp)};
}

void write_manifest(const RunContext& ctx, const std::string& subcommand,
                    const json& params, const std::string& fingerprint,
                    const std::vector<std::string>& outputs,
                    const json& results = json::object()) {
  json m;
  m["subcommand"] = subcommand;
  m["parameters"] = params;
  m["artifact_version"] = kVersion;
  m["cache_fingerprint"] = fingerprint;
  m["wall_time_s"] = ctx.elapsed();
  m["outputs"] = outputs;
  if (!results.empty()) m["results"] = results;
  std::string path = outputs.empty() ? subcommand + ".manifest.json"
                                     : outputs.front() + ".manifest.json";
  std::ofstream out(path, std::ios::trunc);
  out << m.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write manifest " + path);
  std::cout << "manifest: " << path << "\n";
}

std::pair<uint64_t, uint64_t> parse_window(const std::string& s,
                                           uint64_t h_max) {
  if (s.empty()) return {h_max < 100 ? 3 : 100, h_max};
  auto colon = s.find(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--window expects lo:hi");
  return {std::stoull(s.substr(0, colon)), std::stoull(s.substr(colon + 1))};
}

uint64_t parse_count(const std::string& s) {
  // accepts 20000 or 2e4 or 1e7
  double v = std::stod(s);
  if (!(v >= 0 && v < 9.3e18)) throw CLI::ValidationError("bad count " + s);
  return static_cast<uint64_t>(std::llround(v));
}

std::vector<uint64_t> parse_prime_list(const std::string& s) {
  std::vector<uint64_t> ps;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) ps.push_back(std::stoull(tok));
  return ps;
}

BigRational parse_rational(const std::string& s) {
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    BigInt num(s.substr(0, slash));
    BigInt den(s.substr(slash + 1));
    return BigRational(num, den);
  }
  auto dot = s.find('.');
  if (dot == std::string::npos) return BigRational(BigInt(s));
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  BigInt den = 1;
  for (size_t i = dot + 1; i < s.size(); ++i) den *= 10;
  return BigRational(BigInt(digits), den);
}

ff::Poly parse_poly(uint32_t q, const std::string& s) {
  std::vector<uint32_t> coeffs;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) coeffs.push_back(std::stoul(tok) % q);
  return ff::Poly(q, std::move(coeffs));
}

// ---------------------------------------------------------------- r3-series

int cmd_r3_series(RunContext& ctx, uint64_t h_max, uint64_t P,
                  const std::string& window, bool oracle, std::string out) {
  CacheHandle ch = obtain_cache(ctx, P, GenericProductCache::kDefaultKMax);
  RkSeries series = r3_series_fast(h_max, ch.cache, ctx.threads);
  auto [lo, hi] = parse_window(window, h_max);
  GrowthFit fit = fit_growth_law(series, lo, hi);
  LeadingFit lead = fit_growth_law_leading(series, lo, hi);

  std::vector<std::string> header = {"h", "r3_over_6", "fit", "resid",
                                     "tail_bound"};
  if (oracle) header.push_back("oracle_r3_over_6");
  if (out.empty()) out = "r3.csv";
  CsvWriter csv(out, header);
  bool oracle_ok = true;
  for (uint64_t h = 1; h <= h_max; ++h) {
    double lg = std::log(static_cast<double>(h));
    double model = fit.A * static_cast<double>(h) * lg * lg;
    std::vector<std::string> row = {cell(h), cell(series.values[h]),
                                    cell(model),
                                    cell(series.values[h] - model),
                                    cell(series.tail_abs[h])};
    if (oracle) {
      if (h <= 30 && h >= 3) {
        SeriesValue brute = rk_bruteforce(3, h, ch.cache);
        double ref = brute.value / 6.0;
        row.push_back(cell(ref));
        if (std::abs(series.values[h] * 6.0 - brute.value) >
            1e-9 * std::max(1.0, std::abs(brute.value)))
          oracle_ok = false;
      } else {
        row.push_back("");
      }
    }
    csv.row(row);
  }

  json params = {{"h_max", h_max}, {"P", P},
                 {"window", std::to_string(lo) + ":" + std::to_string(hi)},
                 {"oracle", oracle}, {"threads", ctx.threads}};
  json results = {{"k", 3},
                  {"h_max", h_max},
                  {"P", P},
                  {"window", std::to_string(lo) + ":" + std::to_string(hi)},
                  {"A", fit.A},
                  {"rss", fit.rss},
                  {"A_leading", lead.A},
                  {"B_leading", lead.B},
                  {"rss_leading", lead.rss},
                  {"runtime_s", ctx.elapsed()}};
  write_manifest(ctx, "r3-series", params, ch.fingerprint, {out}, results);
  std::printf("r3-series: h_max=%llu  A=%.6f (one-term)  A=%.6f (leading)\n",
              static_cast<unsigned long long>(h_max), fit.A, lead.A);
  if (oracle && !oracle_ok)
    throw IdentityError("r3-series: fast path disagrees with brute force");
  return 0;
}

// ---------------------------------------------------------------- r2-series

int cmd_r2_series(RunContext& ctx, uint64_t h_max, uint64_t P,
                  std::string out) {
  CacheHandle ch = obtain_cache(ctx, P, GenericProductCache::kDefaultKMax);
  RkSeries series = r2_exact_series(h_max, ch.cache, ctx.threads);
  const double A = 2.0 - kEulerGamma - kLog2Pi;

  if (out.empty()) out = "r2.csv";
  CsvWriter csv(out, {"h", "r2", "asymptotic", "resid", "tail_bound"});
  for (uint64_t h = 1; h <= h_max; ++h) {
    double model =
        -static_cast<double>(h) * std::log(static_cast<double>(h)) +
        A * static_cast<double>(h);
    csv.row({cell(h), cell(series.values[h]), cell(model),
             cell(series.values[h] - model), cell(series.tail_abs[h])});
  }
  json params = {{"h_max", h_max}, {"P", P}, {"threads", ctx.threads}};
  json results = {{"k", 2}, {"A_model", A}, {"runtime_s", ctx.elapsed()}};
  write_manifest(ctx, "r2-series", params, ch.fingerprint, {out}, results);
  std::printf("r2-series: h_max=%llu written to %s\n",
              static_cast<unsigned long long>(h_max), out.c_str());
  return 0;
}

// ---------------------------------------------------------------------- fit

int cmd_fit(RunContext& ctx, const std::string& input,
            const std::string& window, const std::string& column) {
  std::ifstream in(input);
  if (!in) throw std::runtime_error("cannot open " + input);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty input CSV");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  auto find_col = [&](const std::string& name) {
    for (size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return i;
    throw std::runtime_error("column " + name + " not found in " + input);
  };
  size_t hcol = find_col("h");
  size_t vcol = find_col(column);

  std::vector<double> values;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string tok;
    uint64_t h = 0;
    double v = 0;
    for (size_t i = 0; std::getline(ss, tok, ','); ++i) {
      if (i == hcol) h = std::stoull(tok);
      if (i == vcol) v = tok.empty() ? 0.0 : std::stod(tok);
    }
    if (h >= values.size()) values.resize(h + 1, 0.0);
    values[h] = v;
  }
  uint64_t h_max = values.empty() ? 0 : values.size() - 1;
  auto [lo, hi] = parse_window(window, h_max);
  GrowthFit fit = fit_growth_law(values, lo, hi);
  LeadingFit lead = fit_growth_law_leading(values, lo, hi);
  std::printf("fit %s[%s] over [%llu,%llu]: A=%.6f rss=%.6g | leading A=%.6f "
              "B=%.4f\n",
              input.c_str(), column.c_str(), static_cast<unsigned long long>(lo),
              static_cast<unsigned long long>(hi), fit.A, fit.rss, lead.A,
              lead.B);
  std::string out = input + ".fit.csv";
  CsvWriter csv(out, {"window_lo", "window_hi", "A", "rss", "A_leading",
                      "B_leading", "rss_leading"});
  csv.row({cell(lo), cell(hi), cell(fit.A), cell(fit.rss), cell(lead.A),
           cell(lead.B), cell(lead.rss)});
  json params = {{"input", input}, {"column", column},
                 {"window", std::to_string(lo) + ":" + std::to_string(hi)}};
  json results = {{"A", fit.A},
                  {"rss", fit.rss},
                  {"A_leading", lead.A},
                  {"B_leading", lead.B},
                  {"runtime_s", ctx.elapsed()}};
  write_manifest(ctx, "fit", params, "none", {out}, results);
  return 0;
}

// ----------------------------------------------------------------- rk-brute

int cmd_rk_brute(RunContext& ctx, int k, uint64_t h, uint64_t P,
                 std::string out) {
  CacheHandle ch = obtain_cache(ctx, P, GenericProductCache::kDefaultKMax);
  SeriesValue v = rk_bruteforce(k, h, ch.cache);
  if (out.empty()) out = "rk_brute.csv";
  CsvWriter csv(out, {"k", "h", "value", "value_over_kfact", "tail_bound"});
  double kfact = 1;
  for (int i = 2; i <= k; ++i) kfact *= i;
  csv.row({cell(k), cell(h), cell(v.value), cell(v.value / kfact),
           cell(v.tail_bound)});
  json params = {{"k", k}, {"h", h}, {"P", P}};
  json results = {{"value", v.value}, {"runtime_s", ctx.elapsed()}};
  write_manifest(ctx, "rk-brute", params, ch.fingerprint, {out}, results);
  std::printf("R_%d(%llu) = %.12g\n", k, static_cast<unsigned long long>(h),
              v.value);
  return 0;
}

// ------------------------------------------------------------------- mk-int

int cmd_mk_int(RunContext& ctx, const std::string& qspec, uint64_t h,
               const std::vector<int>& ks, std::string out) {
  SquarefreeModulus q = squarefree_modulus_from_primes(parse_prime_list(qspec));
  if (out.empty()) out = "mk_int.csv";
  CsvWriter csv(out, {"q", "h", "k", "m_k_num", "m_k_den", "float"});
  for (int k : ks) {
    MomentRecord rec = mk_int(q, h, k, ctx.threads);
    csv.row({cell(*q.value), cell(h), cell(k),
             numerator(rec.value).str(), denominator(rec.value).str(),
             cell(rec.float_value)});
    std::printf("m_%d(%llu;%llu) = %s/%s\n", k,
                static_cast<unsigned long long>(*q.value),
                static_cast<unsigned long long>(h),
                numerator(rec.value).str().c_str(),
                denominator(rec.value).str().c_str());
  }
  json params = {{"q", qspec}, {"h", h}, {"k", ks}, {"threads", ctx.threads}};
  write_manifest(ctx, "mk-int", params, "none", {out});
  return 0;
}

// ------------------------------------------------------------------- vk-int

int cmd_vk_int(RunContext& ctx, const std::string& qspec, uint64_t h,
               const std::vector<int>& ks, std::string out) {
  SquarefreeModulus q = squarefree_modulus_from_primes(parse_prime_list(qspec));
  if (out.empty()) out = "vk_int.csv";
  CsvWriter csv(out,
                {"q", "h", "k", "v_k_num", "v_k_den", "m_k_num", "m_k_den"});
  for (int k : ks) {
    BigRational vk = vk_int_bruteforce(q, h, k);
    BigRational mk = vk_to_mk(q, k, vk);
    MomentRecord direct = mk_int(q, h, k, ctx.threads);
    if (mk != direct.value)
      throw IdentityError("vk-int: m_k = q (phi/q)^k V_k identity failed at k=" +
                          std::to_string(k));
    csv.row({cell(*q.value), cell(h), cell(k), numerator(vk).str(),
             denominator(vk).str(), numerator(mk).str(),
             denominator(mk).str()});
    std::printf("V_%d(%llu;%llu) = %s/%s (identity ok)\n", k,
                static_cast<unsigned long long>(*q.value),
                static_cast<unsigned long long>(h),
                numerator(vk).str().c_str(), denominator(vk).str().c_str());
  }
  json params = {{"q", qspec}, {"h", h}, {"k", ks}};
  write_manifest(ctx, "vk-int", params, "none", {out});
  return 0;
}

// --------------------------------------------------------------- identities

int cmd_identities(RunContext& ctx, const std::string& qspec, uint64_t h,
                   int kmax, bool inject_failure, std::string out) {
  SquarefreeModulus q = squarefree_modulus_from_primes(parse_prime_list(qspec));
  json checks = json::array();
  bool all_pass = true;

  auto add = [&](const std::string& name, uint64_t hh, bool pass,
                 const std::string& witness) {
    checks.push_back({{"check", name},
                      {"q", *q.value},
                      {"h", hh},
                      {"pass", pass},
                      {"witness", witness}});
    all_pass = all_pass && pass;
  };

  for (uint64_t hh = 1; hh <= h; ++hh) {
    try {
      diagonal_identity_checks(q, hh);
      add("diagonal-triple", hh, true, "");
      add("diagonal-pair", hh, true, "");
    } catch (const IdentityError& e) {
      add("diagonal", hh, false, e.what());
    }
  }
  // the V_k enumeration is budgeted to three primes; diagonal checks above
  // run for any squarefree q
  if (q.primes.size() <= 3) {
    uint64_t h_ident = std::min<uint64_t>(h, 6);
    for (int k = 1; k <= kmax; ++k) {
      for (uint64_t hh = 1; hh <= h_ident; ++hh) {
        BigRational vk = vk_int_bruteforce(q, hh, k);
        bool pass = vk_to_mk(q, k, vk) == mk_int(q, hh, k, ctx.threads).value;
        add("mk-vk-k" + std::to_string(k), hh, pass,
            pass ? "" : "V_k transform mismatch");
      }
    }
  }
  if (inject_failure)
    add("self-test", 0, false, "injected failure fixture");

  if (out.empty()) out = "identities.json";
  std::ofstream o(out, std::ios::trunc);
  o << json{{"q", *q.value}, {"all_pass", all_pass}, {"checks", checks}}.dump(2)
    << "\n";
  json params = {{"q", qspec}, {"h", h}, {"kmax", kmax}};
  json results = {{"all_pass", all_pass}, {"runtime_s", ctx.elapsed()}};
  write_manifest(ctx, "identities", params, "none", {out}, results);
  std::printf("identities: %s\n", all_pass ? "all pass" : "VIOLATION");
  if (!all_pass) throw IdentityError("identity battery found a violation");
  return 0;
}

// ------------------------------------------------------------------- bridge

int cmd_bridge(RunContext& ctx, uint64_t primes_upto, uint64_t h, uint64_t P,
               std::string out) {
  CacheHandle ch = obtain_cache(ctx, P, GenericProductCache::kDefaultKMax);
  SquarefreeModulus q = primorial_modulus(primes_upto, ch.cache.table());

  double r3;
  if (h <= 80) {
    r3 = rk_bruteforce(3, h, ch.cache).value;
  } else {
    RkSeries series = r3_series_fast(h, ch.cache, ctx.threads);
    r3 = series.values[h] * 6.0;
  }
  BridgeReport rep = r3_v3_bridge(q, h, r3, ctx.threads);

  if (out.empty()) out = "bridge.csv";
  CsvWriter csv(out, {"q", "h", "v3", "assembled", "r3", "residual", "budget"});
  csv.row({cell(*q.value), cell(h), cell(rep.v3), cell(rep.assembled),
           cell(rep.r3), cell(rep.residual), cell(rep.budget)});
  json params = {{"primes_upto", primes_upto}, {"h", h}, {"P", P},
                 {"threads", ctx.threads}};
  json results = {{"v3", rep.v3},
                  {"assembled", rep.assembled},
                  {"r3", rep.r3},
                  {"residual", rep.residual},
                  {"budget", rep.budget},
                  {"runtime_s", ctx.elapsed()}};
  write_manifest(ctx, "bridge", params, ch.fingerprint, {out}, results);
  std::printf("bridge: q=%llu h=%llu residual=%.4f (budget %.4f)\n",
              static_cast<unsigned long long>(*q.value),
              static_cast<unsigned long long>(h), rep.residual, rep.budget);
  return 0;
}

// ------------------------------------------------------------ prime-moments

int cmd_prime_moments(RunContext& ctx, const std::string& deltas_s,
                      const std::string& ks_s, const std::string& nmax_s,
                      uint64_t nmin, double ratio, bool from_one,
                      std::string out) {
  std::vector<double> deltas;
  {
    std::stringstream ss(deltas_s);
    std::string tok;
    while (std::getline(ss, tok, ',')) deltas.push_back(std::stod(tok));
  }
  std::vector<int> ks;
  {
    std::stringstream ss(ks_s);
    std::string tok;
    while (std::getline(ss, tok, ',')) ks.push_back(std::stoi(tok));
  }
  uint64_t nmax = parse_count(nmax_s);

  // exponentially spaced grid: N_j = ceil(ratio^j), deduplicated, capped
  std::vector<uint64_t> grid;
  for (double n = static_cast<double>(nmin); n <= static_cast<double>(nmax);
       n *= ratio) {
    uint64_t N = static_cast<uint64_t>(std::ceil(n));
    if (N > nmax) break;
    if (grid.empty() || grid.back() != N) grid.push_back(N);
  }
  if (grid.empty() || grid.back() != nmax) grid.push_back(nmax);

  double max_delta = *std::max_element(deltas.begin(), deltas.end());
  uint64_t H_top = static_cast<uint64_t>(
      std::floor(std::pow(static_cast<double>(nmax), max_delta)));
  uint64_t limit = (from_one ? nmax : 2 * nmax) + H_top + 1;
  PrimeWindowMoments pw(limit, ctx.threads, 23000000);

  struct Job {
    double delta;
    uint64_t N;
  };
  std::vector<Job> jobs;
  for (double d : deltas)
    for (uint64_t N : grid) jobs.push_back({d, N});
  std::vector<std::vector<MomentRow>> rows(jobs.size());
  parallel_blocks(jobs.size(), ctx.threads, [&](uint64_t j) {
    rows[j] = pw.moments(jobs[j].N, jobs[j].delta, ks, from_one);
  });

  if (out.empty()) out = "prime_moments.csv";
  CsvWriter csv(out, {"N", "delta", "H", "k", "moment", "guide", "neg_guide"});
  for (size_t j = 0; j < jobs.size(); ++j)
    for (const MomentRow& r : rows[j])
      csv.row({cell(r.N), cell(r.delta), cell(r.H), cell(r.k), cell(r.value),
               cell(r.guide), cell(-r.guide)});

  json params = {{"delta", deltas_s}, {"k", ks_s},    {"nmax", nmax},
                 {"nmin", nmin},      {"ratio", ratio}, {"from_one", from_one},
                 {"threads", ctx.threads}};
  json results = {{"grid_points", grid.size()}, {"runtime_s", ctx.elapsed()}};
  write_manifest(ctx, "prime-moments", params, "none", {out}, results);
  std::printf("prime-moments: %zu (N,delta) jobs, %zu ks -> %s\n", jobs.size(),
              ks.size(), out.c_str());
  return 0;
}

// -------------------------------------------------------------------- ff-mk

int cmd_ff_mk(RunContext& ctx, uint32_t qfield, const std::string& Qspec,
              int h, const std::vector<int>& ks, bool with_vk,
              std::string out) {
  ff::Poly Qp = parse_poly(qfield, Qspec);
  ff::Modulus Q = ff::Modulus::of(Qp);
  if (out.empty()) out = "ff_mk.csv";
  CsvWriter csv(out, {"q", "Q", "degQ", "h", "k", "mk_num", "mk_den"});
  for (int k : ks) {
    BigRational mk = ff::mk_ff(Q, h, k, ctx.threads);
    if (with_vk) {
      BigRational vk = ff::vk_ff_bruteforce(Q, h, k);
      if (ff::vk_to_mk_ff(Q, k, vk) != mk)
        throw IdentityError("ff-mk: m_k identity with V_k failed at k=" +
                            std::to_string(k));
    }
    csv.row({cell(static_cast<uint64_t>(qfield)), Qp.str(), cell(Qp.deg()), cell(h), cell(k),
             numerator(mk).str(), denominator(mk).str()});
    std::printf("ff m_%d(%s;%d) = %s/%s\n", k, Qp.str().c_str(), h,
                numerator(mk).str().c_str(), denominator(mk).str().c_str());
  }
  json params = {{"q", qfield}, {"Q", Qspec}, {"h", h}, {"k", ks},
                 {"check_vk", with_vk}};
  write_manifest(ctx, "ff-mk", params, "none", {out});
  return 0;
}

// ---------------------------------------------------------------- ff-lemmas

int cmd_ff_lemmas(RunContext& ctx, const std::string& fields_s, int max_deg,
                  int max_h, uint64_t draws, uint64_t seed, std::string out) {
  ff::LemmaBatteryOptions opts;
  opts.fields.clear();
  for (uint64_t p : parse_prime_list(fields_s))
    opts.fields.push_back(static_cast<uint32_t>(p));
  opts.max_deg = max_deg;
  opts.max_h = max_h;
  opts.fundamental_draws = draws;
  opts.seed = seed;

  ff::LemmaBatteryReport rep = ff::lemma_battery(opts);
  json entries = json::array();
  for (const auto& e : rep.entries) {
    entries.push_back({{"lemma", e.name},
                       {"instances", e.instances},
                       {"violations", e.violations},
                       {"witness", e.witness}});
    std::printf("%-24s instances=%-8llu violations=%llu\n", e.name.c_str(),
                static_cast<unsigned long long>(e.instances),
                static_cast<unsigned long long>(e.violations));
  }
  if (out.empty()) out = "ff_lemmas.json";
  std::ofstream o(out, std::ios::trunc);
  o << json{{"all_pass", rep.all_pass()}, {"lemmas", entries}}.dump(2) << "\n";
  json params = {{"fields", fields_s}, {"max_deg", max_deg}, {"max_h", max_h},
                 {"draws", draws},     {"seed", seed}};
  json results = {{"all_pass", rep.all_pass()}, {"runtime_s", ctx.elapsed()}};
  write_manifest(ctx, "ff-lemmas", params, "none", {out}, results);
  if (!rep.all_pass())
    throw IdentityError("ff-lemmas: battery found a violation");
  return 0;
}

// -------------------------------------------------------------- ff-singular

int cmd_ff_singular(RunContext& ctx, uint32_t qfield, const std::string& Dspec,
                    int dP, std::string out) {
  std::vector<ff::Poly> D;
  {
    std::stringstream ss(Dspec);
    std::string tok;
    while (std::getline(ss, tok, ';')) D.push_back(parse_poly(qfield, tok));
  }
  ff::FFProductCache cache(qfield, dP,
                           std::max<int>(8, static_cast<int>(D.size())));
  SeriesValue s = ff::ff_singular_series(D, cache);
  SeriesValue s0 = ff::ff_singular_series_zero(D, cache);

  std::string dstr;
  for (size_t i = 0; i < D.size(); ++i)
    dstr += (i ? ";" : "") + D[i].str();
  if (out.empty()) out = "ff_singular.csv";
  CsvWriter csv(out,
                {"q", "D", "dP", "value", "tail_bound", "s0_value", "s0_tail"});
  csv.row({cell(static_cast<uint64_t>(qfield)), dstr, cell(dP), cell(s.value), cell(s.tail_bound),
           cell(s0.value), cell(s0.tail_bound)});
  json params = {{"q", qfield}, {"D", Dspec}, {"dP", dP}};
  json results = {{"value", s.value},
                  {"s0_value", s0.value},
                  {"runtime_s", ctx.elapsed()}};
  write_manifest(ctx, "ff-singular", params, "none", {out}, results);
  std::printf("ff S(%s) = %.12g (tail %.3g)\n", dstr.c_str(), s.value,
              s.tail_bound);
  return 0;
}

// ----------------------------------------------------------- fraction-count

int cmd_fraction_count(RunContext& ctx, int k, const std::string& Q,
                       const std::string& qlo_s, const std::string& qhi_s,
                       const std::string& delta_s, std::string out) {
  uint64_t qlo, qhi;
  if (!qlo_s.empty() || !qhi_s.empty()) {
    if (qlo_s.empty() || qhi_s.empty())
      throw CLI::ValidationError("--qlo and --qhi go together");
    qlo = parse_count(qlo_s);
    qhi = parse_count(qhi_s);
  } else if (!Q.empty()) {
    qlo = parse_count(Q);
    qhi = 2 * qlo;
  } else {
    throw CLI::ValidationError("need --Q or --qlo/--qhi");
  }
  BigRational delta = parse_rational(delta_s);
  FractionCount fc = fraction_tuple_count(k, qlo, qhi, delta);

  if (out.empty()) out = "fraction_count.csv";
  CsvWriter csv(out, {"k", "q_lo", "q_hi", "delta", "count", "envelope"});
  csv.row({cell(k), cell(qlo), cell(qhi), delta_s, cell(fc.count),
           cell(fc.envelope)});
  json params = {{"k", k}, {"q_lo", qlo}, {"q_hi", qhi}, {"delta", delta_s}};
  json results = {{"count", fc.count},
                  {"envelope", fc.envelope},
                  {"runtime_s", ctx.elapsed()}};
  write_manifest(ctx, "fraction-count", params, "none", {out}, results);
  std::printf("fraction-count: k=%d q in [%llu,%llu] delta=%s -> %llu "
              "(envelope %.4g)\n",
              k, static_cast<unsigned long long>(qlo),
              static_cast<unsigned long long>(qhi), delta_s.c_str(),
              static_cast<unsigned long long>(fc.count), fc.envelope);
  return 0;
}

// ------------------------------------------------------------ rk-restricted

CoordinateConstraint parse_coord(const std::string& s) {
  // forms: "lo:hi[:w]" or "a%m:lo:hi[:w]" with w in {sharp, tri}
  CoordinateConstraint c;
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ':')) parts.push_back(tok);
  size_t base = 0;
  if (!parts.empty() && parts[0].find('%') != std::string::npos) {
    auto pct = parts[0].find('%');
    c.residue = std::stoll(parts[0].substr(0, pct));
    c.modulus = std::stoll(parts[0].substr(pct + 1));
    base = 1;
  }
  if (parts.size() < base + 2)
    throw CLI::ValidationError("coordinate spec needs lo:hi");
  c.lo = std::stoll(parts[base]);
  c.hi = std::stoll(parts[base + 1]);
  if (parts.size() > base + 2) {
    const std::string& w = parts[base + 2];
    if (w == "tri" || w == "triangular")
      c.weight = CoordinateConstraint::Weight::triangular;
    else if (w == "sharp")
      c.weight = CoordinateConstraint::Weight::sharp;
    else
      throw CLI::ValidationError("weight must be sharp or tri");
  }
  return c;
}

int cmd_rk_restricted(RunContext& ctx, const std::vector<std::string>& coords,
                      uint64_t P, std::string out) {
  RestrictionSpec spec;
  for (const auto& s : coords) spec.coords.push_back(parse_coord(s));
  CacheHandle ch = obtain_cache(ctx, P, GenericProductCache::kDefaultKMax);
  SeriesValue v = rk_restricted(spec, ch.cache);

  if (out.empty()) out = "rk_restricted.csv";
  CsvWriter csv(out, {"k", "value", "tail_bound"});
  csv.row({cell(static_cast<int>(spec.coords.size())), cell(v.value),
           cell(v.tail_bound)});
  json params = {{"coords", coords}, {"P", P}};
  json results = {{"value", v.value}, {"runtime_s", ctx.elapsed()}};
  write_manifest(ctx, "rk-restricted", params, ch.fingerprint, {out}, results);
  std::printf("rk-restricted: k=%zu value=%.12g\n", spec.coords.size(),
              v.value);
  return 0;
}

// -------------------------------------------------------------------- cache

int cmd_cache(RunContext& ctx, const std::string& verb, uint64_t P, int kmax) {
  fs::path dir = resolve_cache_dir(ctx.cache_dir);
  if (verb == "build") {
    GenericProductCache cache(P, kmax);
    fs::path file = cache_file_path(dir, P, kmax);
    save_cache(cache, file);
    std::printf("cache built: %s (fingerprint %s)\n", file.string().c_str(),
                hex64(cache_fingerprint(file)).c_str());
  } else if (verb == "verify") {
    fs::path file = cache_file_path(dir, P, kmax);
    verify_cache(file);
    std::printf("cache ok: %s (fingerprint %s)\n", file.string().c_str(),
                hex64(cache_fingerprint(file)).c_str());
  } else if (verb == "purge") {
    uint64_t removed = 0;
    if (fs::exists(dir))
      for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".sslab") {
          fs::remove(entry.path());
          ++removed;
        }
    std::printf("cache purge: removed %llu file(s) from %s\n",
                static_cast<unsigned long long>(removed),
                dir.string().c_str());
  } else {
    throw CLI::ValidationError("cache verb must be build, verify or purge");
  }
  (void)ctx;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sslab: singular series, reduced residues and prime window "
               "moments workbench"};
  app.require_subcommand(1);
  // --h is a real option on several subcommands, so help is --help only
  app.set_help_flag("--help", "print help");
  auto add_sub = [&](const std::string& name, const std::string& desc) {
    auto* s = app.add_subcommand(name, desc);
    s->set_help_flag("--help", "print help");
    s->fallthrough();  // global --threads / --cache-dir after the subcommand
    return s;
  };

  RunContext ctx;
  app.add_option("--threads", ctx.threads, "worker threads (0 = auto)")
      ->capture_default_str();
  app.add_option("--cache-dir", ctx.cache_dir,
                 "cache directory (default: $SSLAB_CACHE or ./sslab-cache)");

  // r3-series
  uint64_t r3_hmax = 20000, r3_P = 1000000;
  std::string r3_window, r3_out;
  bool r3_oracle = false;
  auto* r3 = add_sub("r3-series", "R_3(h)/6 for every h <= hmax");
  r3->add_option("--hmax", r3_hmax)->capture_default_str();
  r3->add_option("--P", r3_P)->capture_default_str();
  r3->add_option("--window", r3_window, "fit window lo:hi (default 100:hmax)");
  r3->add_flag("--oracle", r3_oracle, "add a brute-force comparison column");
  r3->add_option("-o,--output", r3_out);

  // r2-series
  uint64_t r2_hmax = 4000, r2_P = 1000000;
  std::string r2_out;
  auto* r2 = add_sub("r2-series", "R_2(h) for every h <= hmax");
  r2->add_option("--hmax", r2_hmax)->capture_default_str();
  r2->add_option("--P", r2_P)->capture_default_str();
  r2->add_option("-o,--output", r2_out);

  // fit
  std::string fit_input, fit_window, fit_column = "r3_over_6";
  auto* fit = add_sub("fit", "least-squares growth-law fit of a CSV");
  fit->add_option("--input", fit_input)->required();
  fit->add_option("--window", fit_window);
  fit->add_option("--column", fit_column)->capture_default_str();

  // rk-brute
  int rkb_k = 3;
  uint64_t rkb_h = 10, rkb_P = 1000000;
  std::string rkb_out;
  auto* rkb = add_sub("rk-brute", "R_k(h) by subset enumeration");
  rkb->add_option("--k", rkb_k)->capture_default_str();
  rkb->add_option("--h", rkb_h)->capture_default_str();
  rkb->add_option("--P", rkb_P)->capture_default_str();
  rkb->add_option("-o,--output", rkb_out);

  // mk-int / vk-int
  std::string mk_q = "2,3", mk_out, vk_q = "2,3", vk_out;
  uint64_t mk_h = 1, vk_h = 1;
  std::vector<int> mk_ks = {2}, vk_ks = {2};
  auto* mk = add_sub("mk-int", "reduced-residue window moments");
  mk->add_option("--q", mk_q, "prime list, e.g. 2,3,5")->capture_default_str();
  mk->add_option("--h", mk_h)->capture_default_str();
  mk->add_option("--k", mk_ks)->delimiter(',')->capture_default_str();
  mk->add_option("-o,--output", mk_out);
  auto* vk = add_sub("vk-int", "singular series sum V_k and the "
                                          "moment identity");
  vk->add_option("--q", vk_q)->capture_default_str();
  vk->add_option("--h", vk_h)->capture_default_str();
  vk->add_option("--k", vk_ks)->delimiter(',')->capture_default_str();
  vk->add_option("-o,--output", vk_out);

  // identities
  std::string id_q = "2,3,5", id_out;
  uint64_t id_h = 20;
  int id_kmax = 4;
  auto* ident = add_sub("identities",
                                   "exact diagonal and moment identities");
  ident->add_option("--q", id_q)->capture_default_str();
  ident->add_option("--h", id_h)->capture_default_str();
  ident->add_option("--kmax", id_kmax)->capture_default_str();
  bool id_inject = false;
  ident->add_flag("--self-test-fail", id_inject,
                  "emit one failing check (exit-code plumbing test)");
  ident->add_option("-o,--output", id_out);

  // bridge
  uint64_t br_primes = 17, br_h = 50, br_P = 1000000;
  std::string br_out;
  auto* br = add_sub("bridge", "R_3 vs V_3 with exact corrections");
  br->add_option("--primes-upto", br_primes)->capture_default_str();
  br->add_option("--h", br_h)->capture_default_str();
  br->add_option("--P", br_P)->capture_default_str();
  br->add_option("-o,--output", br_out);

  // prime-moments
  std::string pm_delta = "0.25,0.5,0.75", pm_k = "3,5,7", pm_nmax = "1e7",
              pm_out;
  uint64_t pm_nmin = 10;
  double pm_ratio = 1.25;
  bool pm_from_one = false;
  auto* pm = add_sub("prime-moments",
                                "sliding-window moments of psi with guides");
  pm->alias("moments");
  pm->add_option("--delta", pm_delta)->capture_default_str();
  pm->add_option("--k", pm_k)->capture_default_str();
  pm->add_option("--nmax", pm_nmax)->capture_default_str();
  pm->add_option("--nmin", pm_nmin)->capture_default_str();
  pm->add_option("--ratio", pm_ratio)->capture_default_str();
  pm->add_flag("--from-one", pm_from_one,
               "sum n over [1, N] instead of [N, 2N]");
  pm->add_option("-o,--output", pm_out);

  // ff-mk
  uint32_t ffmk_q = 2;
  std::string ffmk_Q = "0,1,1", ffmk_out;
  int ffmk_h = 1;
  std::vector<int> ffmk_ks = {2};
  bool ffmk_vk = false;
  auto* ffmk = add_sub("ff-mk", "function-field window moments");
  ffmk->add_option("--q", ffmk_q, "field size (prime <= 61)")
      ->capture_default_str();
  ffmk->add_option("--Q", ffmk_Q, "modulus coefficients c0,c1,...")
      ->capture_default_str();
  ffmk->add_option("--h", ffmk_h)->capture_default_str();
  ffmk->add_option("--k", ffmk_ks)->delimiter(',')->capture_default_str();
  ffmk->add_flag("--vk", ffmk_vk, "also check the V_k identity");
  ffmk->add_option("-o,--output", ffmk_out);

  // ff-lemmas
  std::string ffl_fields = "2,3", ffl_out;
  int ffl_maxdeg = 4, ffl_maxh = 3;
  uint64_t ffl_draws = 1000, ffl_seed = 0x5eed;
  auto* ffl = add_sub("ff-lemmas", "exponential-sum lemma battery");
  ffl->add_option("--fields", ffl_fields)->capture_default_str();
  ffl->add_option("--max-deg", ffl_maxdeg)->capture_default_str();
  ffl->add_option("--max-h", ffl_maxh)->capture_default_str();
  ffl->add_option("--draws", ffl_draws)->capture_default_str();
  ffl->add_option("--seed", ffl_seed)->capture_default_str();
  ffl->add_option("-o,--output", ffl_out);

  // ff-singular
  uint32_t ffs_q = 2;
  std::string ffs_D = "0;0,1,1", ffs_out;
  int ffs_dP = 10;
  auto* ffs = add_sub("ff-singular",
                                 "function-field singular series");
  ffs->add_option("--q", ffs_q)->capture_default_str();
  ffs->add_option("--D", ffs_D, "tuple, ';'-separated coefficient lists")
      ->capture_default_str();
  ffs->add_option("--dP", ffs_dP)->capture_default_str();
  ffs->add_option("-o,--output", ffs_out);

  // fraction-count
  int fc_k = 2;
  std::string fc_Q, fc_qlo, fc_qhi, fc_delta = "1/2", fc_out;
  auto* fc = add_sub("fraction-count",
                                "integral fraction tuples in [Q,2Q]");
  fc->add_option("--k", fc_k)->capture_default_str();
  fc->add_option("--Q", fc_Q, "modulus range [Q, 2Q]");
  fc->add_option("--qlo", fc_qlo);
  fc->add_option("--qhi", fc_qhi);
  fc->add_option("--delta", fc_delta)->capture_default_str();
  fc->add_option("-o,--output", fc_out);

  // rk-restricted
  std::vector<std::string> rr_coords;
  uint64_t rr_P = 1000000;
  std::string rr_out;
  auto* rr = add_sub("rk-restricted",
                                "restricted / weighted singular series sums");
  rr->add_option("--coord", rr_coords,
                 "per-coordinate spec lo:hi[:w] or a%m:lo:hi[:w]")
      ->required();
  rr->add_option("--P", rr_P)->capture_default_str();
  rr->add_option("-o,--output", rr_out);

  // cache
  std::string cache_verb;
  uint64_t cache_P = 1000000;
  int cache_kmax = GenericProductCache::kDefaultKMax;
  auto* cc = add_sub("cache", "cache administration");
  cc->add_option("verb", cache_verb, "build | verify | purge")->required();
  cc->add_option("--P", cache_P)->capture_default_str();
  cc->add_option("--kmax", cache_kmax)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 64;
  }

  try {
    if (r3->parsed())
      return cmd_r3_series(ctx, r3_hmax, r3_P, r3_window, r3_oracle, r3_out);
    if (r2->parsed()) return cmd_r2_series(ctx, r2_hmax, r2_P, r2_out);
    if (fit->parsed()) return cmd_fit(ctx, fit_input, fit_window, fit_column);
    if (rkb->parsed()) return cmd_rk_brute(ctx, rkb_k, rkb_h, rkb_P, rkb_out);
    if (mk->parsed()) return cmd_mk_int(ctx, mk_q, mk_h, mk_ks, mk_out);
    if (vk->parsed()) return cmd_vk_int(ctx, vk_q, vk_h, vk_ks, vk_out);
    if (ident->parsed())
      return cmd_identities(ctx, id_q, id_h, id_kmax, id_inject, id_out);
    if (br->parsed()) return cmd_bridge(ctx, br_primes, br_h, br_P, br_out);
    if (pm->parsed())
      return cmd_prime_moments(ctx, pm_delta, pm_k, pm_nmax, pm_nmin, pm_ratio,
                               pm_from_one, pm_out);
    if (ffmk->parsed())
      return cmd_ff_mk(ctx, ffmk_q, ffmk_Q, ffmk_h, ffmk_ks, ffmk_vk,
                       ffmk_out);
    if (ffl->parsed())
      return cmd_ff_lemmas(ctx, ffl_fields, ffl_maxdeg, ffl_maxh, ffl_draws,
                           ffl_seed, ffl_out);
    if (ffs->parsed()) return cmd_ff_singular(ctx, ffs_q, ffs_D, ffs_dP, ffs_out);
    if (fc->parsed())
      return cmd_fraction_count(ctx, fc_k, fc_Q, fc_qlo, fc_qhi, fc_delta,
                                fc_out);
    if (rr->parsed()) return cmd_rk_restricted(ctx, rr_coords, rr_P, rr_out);
    if (cc->parsed()) return cmd_cache(ctx, cache_verb, cache_P, cache_kmax);
  } catch (const IdentityError& e) {
    std::cerr << "identity violation: " << e.what() << "\n";
    return 2;
  } catch (const ConsistencyError& e) {
    std::cerr << "consistency error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetError& e) {
    std::cerr << "budget error: " << e.what() << "\n";
    return 3;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
