#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "paraspec/experiments.hpp"
#include "paraspec/hash.hpp"

using namespace paraspec;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.N = 32;
  c.coarsest = 16;
  c.epsilons = {0.5, 0.25};
  c.epsilon = 0.25;
  c.seeds = {1, 2};
  c.tol = 1e-8;
  return c;
}

fs::path scratch_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("paraspec_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

TEST(Config, ParsesValuesAndDefaults) {
  const auto c = parse_config(R"(
# comment line
experiment = "renorm-sweep"
N = 128            # trailing comment
epsilons = [0.125, 0.0625]
seeds = [3, 5, 8]
mollifiers = ["sharp", "gaussian"]
zero_noise = true
)");
  EXPECT_EQ(c.experiment, "renorm-sweep");
  EXPECT_EQ(c.N, 128);
  EXPECT_EQ(c.epsilons, (std::vector<double>{0.125, 0.0625}));
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 5, 8}));
  EXPECT_EQ(c.mollifiers.size(), 2u);
  EXPECT_TRUE(c.zero_noise);
  EXPECT_EQ(c.L, 1.0);
  EXPECT_EQ(c.r, 0.5);
}

TEST(Config, SeedRange) {
  const auto c = parse_config("seed_start = 10\nseed_count = 3\n");
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{10, 11, 12}));
  EXPECT_THROW(parse_config("seeds = [1]\nseed_count = 3\n"), ConfigError);
}

TEST(Config, ErrorsNameTheField) {
  auto field_of = [](const std::string& text) {
    try {
      validate(parse_config(text));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(field_of("N = 7\n"), "N");
  EXPECT_EQ(field_of("epsilons = [0.1, 0.2]\n"), "epsilons");
  EXPECT_EQ(field_of("seeds = [1, 2, 1]\n"), "seeds");
  EXPECT_EQ(field_of("L_values = [4, 2]\n"), "L_values");
  EXPECT_EQ(field_of("alpha = -0.9\n"), "alpha");
  EXPECT_EQ(field_of("bogus = 1\n"), "bogus");
  EXPECT_EQ(field_of("N = \"many\"\n"), "N");
  EXPECT_EQ(field_of("mollifiers = [\"boxcar\"]\n"), "mollifiers");
  EXPECT_THROW(parse_config("N = 8\nN = 16\n"), ConfigError);
  EXPECT_THROW(parse_config("[table]\nN = 8\n"), ConfigError);
}

TEST(Config, HashIgnoresKeyOrderCommentsAndOutput) {
  const auto a = parse_config("N = 64\nL = 2.0\nseeds = [1, 2]\n");
  const auto b = parse_config("# reordered\nseeds = [ 1,2 ]\nL = 2\n\nN = 64 # same\noutput = \"elsewhere\"\n");
  EXPECT_EQ(config_hash(a), config_hash(b));
  const auto c = parse_config("N = 64\nL = 2.0\nseeds = [1, 3]\n");
  EXPECT_NE(config_hash(a), config_hash(c));
  // Defaults are part of the hash, so stating a default explicitly changes nothing.
  EXPECT_EQ(config_hash(a), config_hash(parse_config("N = 64\nL = 2.0\nseeds = [1, 2]\nr = 0.5\n")));
  EXPECT_EQ(config_hash(a).size(), 64u);
}

TEST(Config, SeedOffset) {
  auto c = with_seed_offset(parse_config("seeds = [1, 2]\n"), 100);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{101, 102}));
  EXPECT_THROW(with_seed_offset(c, -200), ConfigError);
}

TEST(Hash, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

// ---------------------------------------------------------------------------
// Records

TEST(Record, CsvQuotingAndPrecision) {
  Table t;
  t.columns = {"a", "b,c", "d"};
  t.add({0.1, std::int64_t(-3), std::string("say \"hi\"")});
  t.add({1.0 / 3.0, std::int64_t(7), std::string("plain")});
  const auto csv = to_csv(t);
  EXPECT_EQ(csv, "a,\"b,c\",d\r\n0.1,-3,\"say \"\"hi\"\"\"\r\n0.3333333333333333,7,plain\r\n");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_THROW(t.add({1.0}), InvalidInput);
}

// ---------------------------------------------------------------------------
// Renormalized sweep

TEST(RenormSweep, ZeroNoiseBookkeeping) {
  auto c = small_config();
  c.zero_noise = true;
  c.n_eigen = 5;
  const auto rec = renorm_sweep(c);
  ASSERT_TRUE(rec.complete);
  ASSERT_EQ(rec.runs.rows.size(), 2u * 2u * 5u);
  const double lap[5] = {0.0, 4 * pi * pi, 4 * pi * pi, 4 * pi * pi, 4 * pi * pi};
  for (std::size_t i = 0; i < rec.runs.rows.size(); ++i) {
    const auto k = std::size_t(rec.runs.number(i, "k"));
    const double raw = rec.runs.number(i, "lambda_raw"), ren = rec.runs.number(i, "lambda_renorm");
    const double ce = rec.runs.number(i, "c_eps");
    EXPECT_EQ(raw, ren - ce);
    EXPECT_NEAR(raw, lap[k - 1], 1e-8);
    const TorusGrid g(2, 1.0, 32);
    EXPECT_EQ(ce, renorm_constant(g, MollifierSpec{MollifierSpec::Kind::sharp, rec.runs.number(i, "epsilon")}));
  }
}

TEST(RenormSweep, ReplayIsIdentical) {
  auto c = small_config();
  c.n_eigen = 2;
  const auto a = renorm_sweep(c), b = renorm_sweep(c);
  EXPECT_EQ(to_csv(a.runs), to_csv(b.runs));
  EXPECT_EQ(a.config_hash, b.config_hash);
  RunContext ctx;
  ctx.threads = 2;
  EXPECT_EQ(to_csv(renorm_sweep(c, ctx).runs), to_csv(a.runs));
}

TEST(RenormSweep, UnresolvableEpsilonSkipped) {
  auto c = small_config();
  c.epsilons = {0.5, 0.25, 0.01};
  const auto rec = renorm_sweep(c);
  EXPECT_EQ(rec.summary["epsilons"].size(), 2u);
  ASSERT_FALSE(rec.diagnostics.empty());
  EXPECT_NE(rec.diagnostics.front().find("skipped"), std::string::npos);
}

TEST(RenormSweep, CancelledBeforeStart) {
  std::atomic<bool> stop{true};
  RunContext ctx;
  ctx.cancel = &stop;
  const auto rec = renorm_sweep(small_config(), ctx);
  EXPECT_FALSE(rec.complete);
  EXPECT_TRUE(rec.runs.empty());
}

TEST(MemoryGuard, RefusesLargeGrids) {
  auto c = small_config();
  c.N = 4096;
  c.memory_budget_mb = 100;
  EXPECT_THROW(renorm_sweep(c), BudgetExceeded);
  EXPECT_GT(estimate_memory_mb(1024, 1), estimate_memory_mb(512, 1));
}

// ---------------------------------------------------------------------------
// Lipschitz probe

TEST(Lipschitz, ZeroModeShiftIsExact) {
  auto c = small_config();
  c.L = 2.0;
  c.N = 32;
  c.seeds = {4};
  c.n_eigen = 2;
  c.tol = 1e-10;
  const auto rec = lipschitz_probe(c, {}, Perturbation::zero_mode);
  for (std::size_t i = 0; i < rec.runs.rows.size(); ++i) {
    const double delta = rec.runs.number(i, "delta");
    // delta e_0 is the constant delta / L.
    EXPECT_NEAR(rec.runs.number(i, "difference"), delta / c.L, 1e-9);
  }
  const auto& r = rec.summary["max_ratio_per_k"];
  for (const auto& row : r) EXPECT_NEAR(row[2].get<double>() / row[0].get<double>(), 1.0, 1e-5);
}

TEST(Lipschitz, RatiosBoundedForSmallDeltas) {
  auto c = small_config();
  c.seeds = {1, 2, 3};
  const auto rec = lipschitz_probe(c);
  EXPECT_EQ(rec.runs.rows.size(), 3u * 3u);
  EXPECT_TRUE(rec.summary["bounded"].get<bool>());
}

// ---------------------------------------------------------------------------
// Scaling identity

namespace {

/// Same lattice sum, rows summed in the opposite order in long double, tail added first.
double scaling_constant_reversed(double r, double L, int K) {
  const long double u = 2.0L * std::numbers::pi_v<long double> / L;
  long double s = (long double)std::pow(L, 4) / (16.0L * std::pow(std::numbers::pi_v<long double>, 4) * r * r) *
                  (std::numbers::pi_v<long double> / 2.0L + 1.0L) / ((K + 0.5L) * (K + 0.5L));
  for (int b = K; b >= -K; --b)
    for (int a = K; a >= -K; --a) {
      const long double w2 = u * u * ((long double)a * a + (long double)b * b);
      s += 1.0L / ((1.0L + w2) * (1.0L + (long double)r * r * w2));
    }
  return double((1.0L - (long double)r * r) / ((long double)L * L) * s);
}

}  // namespace

TEST(Scaling, ConstantReproducibleByIndependentSummation) {
  const double a = scaling_constant(0.5, 1.0, 600), b = scaling_constant_reversed(0.5, 1.0, 600);
  EXPECT_NEAR(a, b, 1e-12);
  // Truncation: the tail correction makes K = 300 and K = 1200 agree far beyond the raw 1/K^2 error.
  const double coarse = scaling_constant(0.5, 1.0, 300), fine = scaling_constant(0.5, 1.0, 1200);
  EXPECT_NEAR(coarse, fine, 1e-8);
  EXPECT_GT(a, 0.0);
  EXPECT_THROW(scaling_constant(1.5, 1.0), InvalidInput);
}

TEST(Scaling, ConstantIdentityOnTheGrid) {
  auto c = small_config();
  c.N = 64;
  c.epsilon = 0.1;
  c.seeds = {1, 2};
  c.n_eigen = 2;
  const auto rec = scaling_identity_check(c);
  EXPECT_NEAR(rec.summary["constant_identity_difference"].get<double>(), 0.0, 1e-13);
  // Grid-truncated m_eps approaches m_{r,L} as epsilon -> 0.
  EXPECT_LT(rec.summary["m_eps"].get<double>(), rec.summary["m_rL"].get<double>());
}

TEST(Scaling, DeterministicIdentity) {
  for (const char* pot : {"zero", "cosine", "smooth"}) {
    auto c = small_config();
    c.N = 64;
    c.n_eigen = 4;
    c.potential = pot;
    c.seeds = {1, 2};
    c.tol = 1e-10;
    const auto rec = scaling_identity_check(c);
    EXPECT_LT(rec.summary["deterministic_max_difference"].get<double>(), 1e-8) << pot;
  }
}

// ---------------------------------------------------------------------------
// Growth

TEST(Growth, ZeroNoiseRatioIsZero) {
  auto c = small_config();
  c.zero_noise = true;
  c.L_values = {2.0, 4.0};
  c.n_per_unit = 8;
  c.epsilon = 0.5;
  const auto rec = growth_study(c);
  for (std::size_t i = 0; i < rec.runs.rows.size(); ++i) {
    EXPECT_NEAR(rec.runs.number(i, "abs_lambda1_over_log_L"), 0.0, 1e-9);
    EXPECT_EQ(rec.runs.number(i, "xi_norm_over_sqrt_log_L"), 0.0);
  }
  c.L_values = {1.0, 2.0};
  EXPECT_THROW(growth_study(c), ConfigError);
}

TEST(Growth, TrendTestOnSyntheticData) {
  const std::vector<double> L{2, 4, 8, 16}, se{0.01, 0.01, 0.01, 0.01};
  EXPECT_TRUE(trend_test(L, {1.0, 1.1, 1.2, 1.3}, se).increasing);
  EXPECT_FALSE(trend_test(L, {1.0, 1.0, 1.005, 0.995}, se).increasing);
  EXPECT_FALSE(trend_test(L, {1.3, 1.2, 1.1, 1.0}, se).increasing);
}

// ---------------------------------------------------------------------------
// Tails

TEST(TailFit, ExponentialTailIsLinear) {
  // X = log U has P(X <= x) = e^x for x <= 0.
  rng::Stream s(rng::key(9, 1));
  std::vector<double> x(20000);
  for (auto& v : x) v = std::log(s.uniform());
  const auto f = tail_fit(x, 0.003, 0.25, 20);
  EXPECT_GT(f.r2, 0.99);
  EXPECT_NEAR(f.slope, 1.0, 0.1);
  EXPECT_FALSE(f.curved);
}

TEST(TailFit, GaussianControlIsFlaggedCurved) {
  const auto f = tail_fit(gaussian_control_samples(10000, 3), 0.003, 0.25, 20);
  EXPECT_TRUE(f.curved);
  EXPECT_LT(f.curvature, 0.0);
}

TEST(TailFit, UndersamplingWidensWindow) {
  const auto f = tail_fit(gaussian_control_samples(500, 1), 0.003, 0.25, 10);
  EXPECT_DOUBLE_EQ(f.p_min, 10.0 / 500.0);
  ASSERT_EQ(f.notes.size(), 1u);
  EXPECT_THROW(tail_fit(gaussian_control_samples(10, 1), 0.003, 0.25, 10), InvalidInput);
}

TEST(TailFit, EmpiricalCdfMonotone) {
  const auto f = tail_fit(gaussian_control_samples(5000, 2), 0.01, 0.3, 15);
  for (std::size_t i = 1; i < f.log_cdf.size(); ++i) EXPECT_GE(f.log_cdf[i], f.log_cdf[i - 1]);
  EXPECT_GT(f.slope, 0.0);
  for (std::size_t i = 0; i < f.x.size(); ++i) {
    EXPECT_LE(f.envelope_low + f.slope * f.x[i], f.log_cdf[i] + 1e-12);
    EXPECT_GE(f.envelope_high + f.slope * f.x[i], f.log_cdf[i] - 1e-12);
  }
}

TEST(TailStudy, DeterministicGivenSeeds) {
  auto c = small_config();
  c.N = 16;
  c.coarsest = 8;
  c.epsilon = 0.25;
  c.seeds.clear();
  for (std::uint64_t s = 1; s <= 40; ++s) c.seeds.push_back(s);
  c.tail_p_min = 0.25;
  c.tail_p_max = 0.75;
  c.tail_points = 5;
  const auto a = tail_study(c), b = tail_study(c);
  EXPECT_EQ(to_csv(a.runs), to_csv(b.runs));
  ASSERT_TRUE(a.summary.contains("fit"));
  EXPECT_GT(a.summary["fit"]["slope"].get<double>(), 0.0);
  c.zero_noise = true;
  const auto z = tail_study(c);
  EXPECT_FALSE(z.summary.contains("fit"));
  EXPECT_FALSE(z.diagnostics.empty());
}

// ---------------------------------------------------------------------------
// Localization

TEST(Localization, ZeroNoiseIprIsInverseArea) {
  for (double L : {1.0, 3.0}) {
    const TorusGrid g(2, L, 16);
    EXPECT_NEAR(inverse_participation_ratio(Field::constant(g, 2.5)), 1.0 / (L * L), 1e-14);
  }
  auto c = small_config();
  c.zero_noise = true;
  c.L_values = {1.0, 2.0};
  c.n_per_unit = 16;
  const auto rec = localization_diagnostic(c);
  const auto med = rec.summary["median_ipr"].get<std::vector<double>>();
  EXPECT_NEAR(med[0], 1.0, 1e-8);
  EXPECT_NEAR(med[1], 0.25, 1e-8);
}

TEST(Localization, PotentialWellConcentratesGroundState) {
  const TorusGrid g(2, 1.0, 32);
  std::vector<double> v(g.size());
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      const double x = i / 32.0 - 0.5, y = j / 32.0 - 0.5;
      v[std::size_t(i) * 32 + j] = -400.0 * std::exp(-(x * x + y * y) / (2 * 0.05 * 0.05));
    }
  const Field V = from_physical(g, v, "well");
  const auto sp = lowest_eigenpairs(HamiltonianOp(V, 0.0), 1, 1e-9);
  EXPECT_GT(inverse_participation_ratio(sp.eigenvectors[0]), 2.0);
}

// ---------------------------------------------------------------------------
// Plot data

TEST(PlotData, EmptyRecordWritesNothing) {
  const auto dir = scratch_dir("empty");
  ExperimentRecord rec;
  rec.experiment = "tails";
  EXPECT_THROW(emit_plotdata(rec, "tail", dir.string()), InvalidInput);
  EXPECT_TRUE(fs::is_empty(dir));
}

TEST(PlotData, TailColumnsAndZeroNoiseHeatmap) {
  const auto dir = scratch_dir("plots");
  ExperimentRecord tail;
  tail.experiment = "tails";
  tail.runs.columns = {"seed", "lambda1"};
  tail.runs.add({std::int64_t(1), 0.0});
  tail.summary["fit"] = to_json(tail_fit(gaussian_control_samples(2000, 5), 0.01, 0.25, 8));
  const auto e = emit_plotdata(tail, "tail", dir.string());
  ASSERT_EQ(e.files.size(), 1u);
  EXPECT_TRUE(e.partial);
  std::ifstream in(e.files[0]);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x,log_survival,fit_value\r");

  auto c = small_config();
  c.zero_noise = true;
  c.L_values = {1.0};
  c.n_per_unit = 16;
  c.seeds = {1};
  const auto loc = localization_diagnostic(c);
  const auto t = plot_table(loc, "heatmap");
  ASSERT_EQ(t.rows.size(), 256u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) EXPECT_NEAR(std::abs(t.number(i, "value")), 1.0, 1e-8);
  EXPECT_THROW(plot_table(loc, "nonsense"), InvalidInput);
}
