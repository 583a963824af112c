#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <string>
#include <vector>

#include <json.hpp>

#include "windmix/error.hpp"
#include "windmix/io.hpp"
#include "windmix/rng.hpp"

using namespace windmix;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("windmix_io_" + std::to_string(Rng(::getpid()).next_u64() % 100000000));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const FileStamp kStamp{"0.0-test", 42, "deadbeef00000000"};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

MixtureModel small_model() {
  MixtureModel m;
  m.components = {DirichletComponent({2.5, 3.5, 1.25}),
                  DirichletComponent({0.5, 7.0, 2.0})};
  m.weights = {0.625, 0.375};
  m.bins = BinSpec({0.0, 4.0, 8.0, 12.0});
  m.epsilon = 1e-6;
  m.meta.seed = 99;
  m.meta.iterations = 17;
  m.meta.final_log_likelihood = -123.456789012345;
  m.meta.gamma.burn_in = 25;
  m.meta.gamma.exponent = 0.75;
  return m;
}

}  // namespace

TEST_CASE("series CSV round trip preserves every double") {
  TempDir dir;
  TimeSeries s;
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    s.timestamps.push_back(static_cast<double>(i) + 0.125);
    s.values.push_back(15.0 * rng.uniform());
  }
  const fs::path p = dir.path / "series.csv";
  write_series_csv(p, s, kStamp);
  const TimeSeries back = read_series_csv(p);
  REQUIRE(back.values.size() == s.values.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    CHECK(back.timestamps[i] == s.timestamps[i]);
    CHECK(back.values[i] == s.values[i]);
  }
}

TEST_CASE("series CSV rejects malformed rows with the line number") {
  TempDir dir;
  const fs::path p = dir.path / "bad.csv";

  write_text(p, "timestamp,speed_mps\n0,1.5\n1,oops\n");
  try {
    read_series_csv(p);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  write_text(p, "timestamp,speed_mps\n0,1.5\n1\n");
  CHECK_THROWS_AS(read_series_csv(p), ParseError);

  write_text(p, "timestamp,speed_mps\n0,nan\n");
  CHECK_THROWS_AS(read_series_csv(p), ParseError);

  write_text(p, "timestamp,speed_mps\n0,-0.5\n");
  CHECK_THROWS_AS(read_series_csv(p), ParseError);

  write_text(p, "timestamp,speed_mps\n5,1.0\n4,1.0\n");
  CHECK_THROWS_AS(read_series_csv(p), ParseError);

  write_text(p, "time,speed\n0,1\n");
  CHECK_THROWS_AS(read_series_csv(p), ParseError);

  CHECK_THROWS_AS(read_series_csv(dir.path / "missing.csv"), ParseError);
}

TEST_CASE("labels CSV round trip carries the window geometry") {
  TempDir dir;
  const fs::path p = dir.path / "labels.csv";
  const std::vector<int> labels{1, 2, 2, 3, 1, 1};
  write_labels_csv(p, labels, 600, 300, kStamp);
  const LabelsFile back = read_labels_csv(p);
  CHECK(back.labels == labels);
  REQUIRE(back.window_len.has_value());
  CHECK(*back.window_len == 600);
  REQUIRE(back.stride.has_value());
  CHECK(*back.stride == 300);
}

TEST_CASE("responsibilities CSV is readable as a labels file") {
  TempDir dir;
  Responsibilities t(3, 2);
  t.at(0, 0) = 0.75; t.at(0, 1) = 0.25;
  t.at(1, 0) = 0.1;  t.at(1, 1) = 0.9;
  t.at(2, 0) = 0.6;  t.at(2, 1) = 0.4;
  const std::vector<int> labels{1, 2, 1};
  const fs::path p = dir.path / "resp.csv";
  write_responsibilities_csv(p, t, labels, 600, 600, kStamp);
  const LabelsFile back = read_labels_csv(p);
  CHECK(back.labels == labels);
}

TEST_CASE("model JSON round trip is exact") {
  TempDir dir;
  const MixtureModel m = small_model();
  const fs::path p = dir.path / "model.json";
  save_model(p, m, nullptr, kStamp);
  const MixtureModel back = load_model(p);
  CHECK(back.weights == m.weights);
  CHECK(back.bins.edges() == m.bins.edges());
  CHECK(back.epsilon == m.epsilon);
  CHECK(back.meta.seed == m.meta.seed);
  CHECK(back.meta.iterations == m.meta.iterations);
  CHECK(back.meta.final_log_likelihood == m.meta.final_log_likelihood);
  CHECK(back.meta.gamma.burn_in == 25);
  CHECK(back.meta.gamma.exponent == 0.75);
  CHECK(back.meta.gamma.pure_em == false);
  REQUIRE(back.k() == m.k());
  for (std::size_t c = 0; c < m.k(); ++c)
    CHECK(back.components[c].alpha() == m.components[c].alpha());
}

TEST_CASE("load_model validates the schema") {
  TempDir dir;
  const fs::path p = dir.path / "model.json";

  write_text(p, "{ not json");
  CHECK_THROWS_AS(load_model(p), ParseError);

  write_text(p, R"({"format":"other"})");
  CHECK_THROWS_AS(load_model(p), ParseError);

  // Weights off the simplex.
  nlohmann::json j;
  const MixtureModel m = small_model();
  save_model(p, m, nullptr, kStamp);
  {
    std::ifstream is(p);
    is >> j;
  }
  j["weights"] = std::vector<double>{0.9, 0.9};
  write_text(p, j.dump());
  CHECK_THROWS_AS(load_model(p), ParseError);

  // Alpha dimension vs bin count.
  save_model(p, m, nullptr, kStamp);
  {
    std::ifstream is(p);
    is >> j;
  }
  j["alpha"] = std::vector<std::vector<double>>{{1.0, 2.0}, {3.0, 4.0}};
  write_text(p, j.dump());
  CHECK_THROWS_AS(load_model(p), ParseError);

  // Non-positive alpha entries.
  save_model(p, m, nullptr, kStamp);
  {
    std::ifstream is(p);
    is >> j;
  }
  j["alpha"][0][0] = -1.0;
  write_text(p, j.dump());
  CHECK_THROWS_AS(load_model(p), ParseError);
}

TEST_CASE("scenario JSON parsing") {
  TempDir dir;
  const fs::path p = dir.path / "scenario.json";
  write_text(p, R"({
    "seed": 9, "windows": 12, "window_len": 60,
    "regimes": [
      {"family": "gaussian", "mean": 8.0, "sigma": 0.67},
      {"family": "skewed", "shift": 8.2, "scale": 1.45, "shape": 1.5},
      {"family": "bimodal", "p": 0.5, "c1": 6.2, "k1": 8.0, "c2": 10.5, "k2": 9.0}
    ],
    "transition": [[0.8, 0.1, 0.1], [0.2, 0.7, 0.1], [0.3, 0.2, 0.5]]
  })");
  const ScenarioSpec spec = read_scenario_json(p);
  CHECK(spec.seed == 9);
  CHECK(spec.windows == 12);
  CHECK(spec.k() == 3);
  CHECK(spec.regimes[0].window_len == 60);
  CHECK(spec.transition.size() == 9);
  CHECK(spec.transition[4] == 0.7);
  CHECK_NOTHROW(sample_scenario(spec));

  write_text(p, R"({"regimes": [{"family": "unknown"}], "transition": []})");
  CHECK_THROWS_AS(read_scenario_json(p), ParseError);
}

TEST_CASE("report JSON round-trips through a JSON parser with the expected schema") {
  TempDir dir;
  Report report;
  report.bin_edges = {0.0, 5.0, 10.0};
  ClassReport cr;
  cr.class_id = 1;
  cr.window_count = 42;
  cr.model_weight = 0.9;
  cr.empirical_weight = 0.88;
  cr.mean_pdf = {0.6, 0.4};
  cr.pooled.count = 25200;
  cr.pooled.mean = 8.0;
  cr.pooled.stddev = 0.67;
  cr.pooled.skewness = 0.01;
  cr.pooled.ex_kurtosis = -0.02;
  cr.turbulence_intensity = 0.67 / 8.0;
  FamilyFit gaussian;
  gaussian.family = "gaussian";
  gaussian.fitted = true;
  gaussian.gc = {8.0, 0.67, 0.0, 0.0};
  gaussian.ks = {0.012, 25200, 0.3};
  cr.fits.push_back(gaussian);
  FamilyFit bw;
  bw.family = "biweibull";
  bw.skip_reason = "no antimode";
  cr.fits.push_back(bw);
  report.classes.push_back(cr);

  const fs::path p = dir.path / "report.json";
  write_report_json(p, report, kStamp);

  std::ifstream is(p);
  nlohmann::json j;
  is >> j;
  CHECK(j.at("format") == "windmix-report");
  CHECK(j.at("meta").at("seed") == 42);
  CHECK(j.at("classes").size() == 1);
  const auto& cj = j.at("classes")[0];
  CHECK(cj.at("class") == 1);
  CHECK(cj.at("mean_pdf").size() == 2);
  CHECK(cj.at("fits")[0].at("family") == "gaussian");
  CHECK(cj.at("fits")[0].at("ks_pvalue") == 0.3);
  CHECK(cj.at("fits")[1].at("fitted") == false);
  CHECK(cj.at("fits")[1].at("skip_reason") == "no antimode");
}

TEST_CASE("sequence report JSON schema") {
  TempDir dir;
  ClassSequence seq;
  seq.labels = {1, 1, 2, 2, 2, 1, 3, 3};
  seq.window_len = 600;
  seq.stride = 600;
  const TransitionMatrix tm = transition_matrix(seq);
  const ResidenceSummary res = residence_times(seq, tm.k);
  const auto fits = fit_residence(res, 600.0);
  const fs::path p = dir.path / "seq.json";
  write_sequence_report_json(p, "labels.csv", seq, tm, res, fits, kStamp);

  std::ifstream is(p);
  nlohmann::json j;
  is >> j;
  CHECK(j.at("format") == "windmix-sequence-report");
  CHECK(j.at("k") == 3);
  CHECK(j.at("n_windows") == 8);
  CHECK(j.at("transition").at("probs").size() == 3);
  CHECK(j.at("residence").size() == 3);
  CHECK(j.at("overlapping_windows") == false);
}
