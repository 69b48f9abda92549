#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <tuple>

#include <gtest/gtest.h>

#include "json.hpp"
#include "taskshift/csv.hpp"
#include "taskshift/error.hpp"
#include "taskshift/harness.hpp"
#include "taskshift/presets.hpp"

using namespace taskshift;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.name = "small";
  cfg.ensemble = Spiked{1.5, 0.5, 0.25};
  cfg.signal.support = {0, 1};
  cfg.signal.coeffs = {1.0, -0.5};
  cfg.n_grid = {40, 80};
  cfg.m_grid = {5, 20};
  cfg.draws = 3;
  cfg.base_seed = 99;
  cfg.estimators = {EstimatorId::RegMni, EstimatorId::ClsMni, EstimatorId::ToptPost,
                    EstimatorId::ThresholdPost, EstimatorId::Rescaled};
  cfg.fixed_n_for_m_sweep = 60;
  cfg.fewshot_m = 20;
  return cfg;
}

RunOptions quiet(std::size_t jobs = 1) {
  RunOptions o;
  o.jobs = jobs;
  o.record_wall_time = false;
  return o;
}

std::string rows_csv(const ExperimentConfig& cfg, const SweepResult& r) {
  return to_csv(rows_table(cfg, r.schema, r.rows));
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Io;
}

}  // namespace

TEST(Csv, RoundTripWithQuoting) {
  Table t;
  t.header = {"a", "b,c", "d"};
  t.rows = {{"1", "say \"hi\"", "line\nbreak"}, {"", "nan", "-inf"}};
  const auto text = to_csv(t);
  EXPECT_NE(text.find("\"b,c\""), std::string::npos);
  const auto back = parse_csv(text);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.column("d"), 2u);
}

TEST(Csv, Errors) {
  EXPECT_EQ(code_of([] { parse_csv("a,b\n1\n"); }), ErrorCode::Io);
  EXPECT_EQ(code_of([] { parse_csv("a,b\n\"1,2\n"); }), ErrorCode::Io);
}

TEST(Csv, DoublesRoundTripExactly) {
  for (double x : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::nextafter(1.0, 2.0)}) {
    EXPECT_EQ(*parse_optional(format_double(x)), x);
  }
  EXPECT_TRUE(std::isnan(*parse_optional(format_double(std::nan("")))));
  EXPECT_EQ(*parse_optional(format_double(-INFINITY)), -INFINITY);
  EXPECT_FALSE(parse_optional("").has_value());
  EXPECT_EQ(format_optional(std::nullopt), "");
}

TEST(Config, Validation) {
  auto cfg = small_config();
  EXPECT_NO_THROW(validate(cfg));
  cfg.estimators.clear();
  EXPECT_EQ(code_of([&] { validate(cfg); }), ErrorCode::InvalidConfig);

  cfg = small_config();
  cfg.n_grid = {80, 40};
  EXPECT_EQ(code_of([&] { validate(cfg); }), ErrorCode::InvalidConfig);

  cfg = small_config();
  cfg.signal.dense_gaussian = true;
  EXPECT_EQ(code_of([&] { validate(cfg); }), ErrorCode::InvalidConfig);
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  const auto cfg = small_config();
  const auto j = to_json(cfg);
  EXPECT_EQ(j.at("signal").at("support"), nlohmann::json({1, 2}));
  const auto back = config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(config_hash(back), config_hash(cfg));

  auto bad = j;
  bad["n_grd"] = {100};
  EXPECT_EQ(code_of([&] { config_from_json(bad); }), ErrorCode::InvalidConfig);
}

TEST(Config, HashIgnoresGridAndDraws) {
  auto a = small_config();
  auto b = small_config();
  b.draws = 20;
  b.n_grid = {40};
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.base_seed = 100;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Harness, SingleRow) {
  auto cfg = small_config();
  cfg.n_grid = {40};
  cfg.m_grid.clear();
  cfg.draws = 1;
  cfg.estimators = {EstimatorId::RegMni};
  const auto r = run_sweep(cfg, quiet());
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_TRUE(r.rows[0].ok());
  EXPECT_EQ(r.failed_cells, 0u);
}

TEST(Harness, RowsAndAggregateCounts) {
  auto cfg = small_config();
  cfg.n_grid = {100};
  cfg.m_grid.clear();
  cfg.draws = 2;
  const auto r = run_sweep(cfg, quiet());
  EXPECT_EQ(r.rows.size(), 2u * cfg.estimators.size());
  ASSERT_EQ(r.agg.size(), cfg.estimators.size());
  for (const auto& a : r.agg) {
    EXPECT_EQ(a.count, 2u);
    EXPECT_EQ(a.failed, 0u);
  }
}

TEST(Harness, MSweepRows) {
  const auto cfg = small_config();
  const auto r = run_sweep(cfg, quiet());
  std::size_t m_rows = 0;
  for (const auto& row : r.rows) {
    if (row.sweep != SweepKind::M) continue;
    ++m_rows;
    EXPECT_EQ(row.n, cfg.fixed_n_for_m_sweep);
    ASSERT_TRUE(row.m.has_value());
    EXPECT_TRUE(row.estimator == EstimatorId::ToptPost || row.estimator == EstimatorId::ThresholdPost);
  }
  EXPECT_EQ(m_rows, cfg.m_grid.size() * cfg.draws * 2);
}

TEST(Harness, DeterministicAcrossRunsAndWorkerCounts) {
  const auto cfg = small_config();
  const auto a = run_sweep(cfg, quiet(1));
  const auto b = run_sweep(cfg, quiet(1));
  const auto c = run_sweep(cfg, quiet(3));
  EXPECT_EQ(rows_csv(cfg, a), rows_csv(cfg, b));
  EXPECT_EQ(rows_csv(cfg, a), rows_csv(cfg, c));
  EXPECT_EQ(to_csv(agg_table(a.schema, a.agg)), to_csv(agg_table(c.schema, c.agg)));
}

TEST(Harness, MoreDrawsKeepEarlierDraws) {
  auto cfg = small_config();
  cfg.m_grid.clear();
  const auto few = run_sweep(cfg, quiet());
  cfg.draws = 5;
  const auto many = run_sweep(cfg, quiet());
  const auto t_few = rows_table(cfg, few.schema, few.rows);
  const auto t_many = rows_table(cfg, many.schema, many.rows);
  const auto draw_col = t_many.column("draw");
  std::vector<std::vector<std::string>> kept;
  for (const auto& row : t_many.rows) {
    if (std::stoul(row[draw_col]) < 3) kept.push_back(row);
  }
  EXPECT_EQ(kept, t_few.rows);
}

TEST(Harness, AggregatesMatchOfflineRecomputation) {
  const auto cfg = small_config();
  const auto r = run_sweep(cfg, quiet());
  const auto rows = parse_csv(rows_csv(cfg, r));
  const auto agg = parse_csv(to_csv(agg_table(r.schema, r.agg)));

  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  const auto key_of = [](const Table& t, const std::vector<std::string>& row) {
    return Key{row[t.column("sweep")], row[t.column("n")], row[t.column("m")], row[t.column("estimator")]};
  };

  std::size_t checked = 0;
  for (const auto& metric : r.schema.metrics) {
    std::map<Key, std::vector<double>> groups;
    for (const auto& row : rows.rows) {
      if (!row[rows.column("error")].empty()) continue;
      const auto v = parse_optional(row[rows.column(metric)]);
      if (v && !std::isnan(*v)) groups[key_of(rows, row)].push_back(*v);
    }
    for (const auto& row : agg.rows) {
      const auto it = groups.find(key_of(agg, row));
      const auto mean = parse_optional(row[agg.column(metric + "_mean")]);
      if (it == groups.end()) {
        EXPECT_FALSE(mean.has_value() && !std::isnan(*mean)) << metric;
        continue;
      }
      auto vals = it->second;
      const double n = static_cast<double>(vals.size());
      double sum = 0.0;
      for (double v : vals) sum += v;
      const double m = sum / n;
      double ss = 0.0;
      for (double v : vals) ss += (v - m) * (v - m);
      std::sort(vals.begin(), vals.end());
      const auto h = vals.size() / 2;
      const double med = vals.size() % 2 ? vals[h] : 0.5 * (vals[h - 1] + vals[h]);

      const auto close = [](double got, double want) {
        if (std::isinf(want)) return got == want;
        return std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want));
      };
      ASSERT_TRUE(mean.has_value()) << metric;
      EXPECT_TRUE(close(*mean, m)) << metric << " mean " << *mean << " vs " << m;
      EXPECT_TRUE(close(*parse_optional(row[agg.column(metric + "_median")]), med)) << metric;
      if (vals.size() > 1 && !std::isinf(m)) {
        const auto sd = parse_optional(row[agg.column(metric + "_std")]);
        ASSERT_TRUE(sd.has_value()) << metric;
        EXPECT_TRUE(close(*sd, std::sqrt(ss / (n - 1)))) << metric;
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 100u);
}

TEST(Harness, FailedCellsBecomeErrorRows) {
  auto cfg = small_config();
  cfg.m_grid.clear();
  cfg.draws = 1;
  cfg.n_grid = {40, 900};
  cfg.dimension_cap = 1000;  // 900^1.5 = 27000 exceeds it
  const auto r = run_sweep(cfg, quiet());
  EXPECT_EQ(r.failed_cells, 1u);
  std::size_t errors = 0;
  for (const auto& row : r.rows) {
    if (!row.ok()) {
      ++errors;
      EXPECT_EQ(row.n, 900u);
      EXPECT_NE(row.error.find("n=900"), std::string::npos);
    }
  }
  EXPECT_EQ(errors, cfg.estimators.size());
  EXPECT_EQ(r.meta.at("failed_cells"), 1);
}

TEST(Harness, SupportRecoveredOnFig2iAt400) {
  // Draws 0..9 of the fig2i preset seed.
  auto cfg = preset("fig2i", 400);
  cfg.n_grid = {400};
  cfg.m_grid.clear();
  cfg.estimators = {EstimatorId::ClsMni};
  const auto r = run_sweep(cfg, quiet());
  int recovered = 0;
  for (const auto& row : r.rows) {
    ASSERT_TRUE(row.ok()) << row.error;
    recovered += *value(r.schema, row, "support_recovered") == 1.0 ? 1 : 0;
  }
  EXPECT_GE(recovered, 9);
}

TEST(Harness, WritesOutputs) {
  auto cfg = small_config();
  cfg.n_grid = {40};
  cfg.draws = 1;
  const auto r = run_sweep(cfg, quiet());
  const auto dir = std::filesystem::temp_directory_path() / "taskshift_harness_test";
  std::filesystem::remove_all(dir);
  write_outputs(dir, cfg, r);
  for (const char* f : {"rows.csv", "agg.csv", "config.json", "meta.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream meta_in(dir / "meta.json");
  const auto meta = nlohmann::json::parse(meta_in);
  EXPECT_EQ(meta.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(meta.at("config_hash"), hex64(config_hash(cfg)));
  std::ifstream cfg_in(dir / "config.json");
  EXPECT_EQ(config_hash(config_from_json(nlohmann::json::parse(cfg_in))), config_hash(cfg));
  std::ifstream rows_in(dir / "rows.csv");
  EXPECT_EQ(read_csv(rows_in).rows.size(), r.rows.size());
  std::filesystem::remove_all(dir);
}

TEST(Presets, Parameters) {
  const auto f = preset("fig2i");
  const auto& s = std::get<Spiked>(f.ensemble);
  EXPECT_EQ(s.p, 1.5);
  EXPECT_EQ(s.q, 0.5);
  EXPECT_EQ(s.r, 0.25);
  EXPECT_EQ(f.signal.coeffs, (std::vector<double>{1.0, -0.5}));
  EXPECT_EQ(f.fewshot_sigma2, 1.0);
  EXPECT_EQ(f.draws, 10u);
  EXPECT_EQ(f.n_grid, (std::vector<std::size_t>{100, 200, 400, 800, 1600}));

  EXPECT_EQ(std::get<Spiked>(preset("fig2ii").ensemble).r, 0.55);
  const auto iso = std::get<Isotropic>(preset("isotropic50").ensemble);
  EXPECT_EQ(iso.scale, 50.0);
  EXPECT_EQ(iso.p, 1.5);
  EXPECT_EQ(preset("fig2i", 1000).n_grid, (std::vector<std::size_t>{100, 200, 400, 800, 1000}));

  for (const auto& name : preset_names()) EXPECT_NO_THROW(validate(preset(name)));
  EXPECT_EQ(code_of([] { preset("fig9"); }), ErrorCode::UnknownPreset);
}
