// windmix: wind-regime classification of a sampled speed series.
//
// Subcommands: fit, classify, report, sequence, synth. Exit codes:
//   0 ok, 2 input error, 3 estimation failure, 4 model mismatch,
//   5 insufficient data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "windmix/error.hpp"
#include "windmix/gof.hpp"
#include "windmix/io.hpp"
#include "windmix/math.hpp"
#include "windmix/parallel.hpp"
#include "windmix/parametric.hpp"
#include "windmix/saem.hpp"
#include "windmix/sequence.hpp"
#include "windmix/synth.hpp"
#include "windmix/version.hpp"
#include "windmix/windows.hpp"

namespace fs = std::filesystem;
using namespace windmix;

namespace {

// Failure that already knows its process exit code.
struct ExitError {
  int code;
  std::string message;
};

int guard(const std::string& cmd, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ExitError& e) {
    std::cerr << "windmix " << cmd << ": " << e.message << "\n";
    return e.code;
  } catch (const RestartLimitError& e) {
    std::cerr << "windmix " << cmd << ": " << e.what() << "\n";
    return 3;
  } catch (const ConvergenceError& e) {
    std::cerr << "windmix " << cmd << ": " << e.what() << "\n";
    return 3;
  } catch (const DegenerateClassError& e) {
    std::cerr << "windmix " << cmd << ": " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "windmix " << cmd << ": " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "windmix " << cmd << ": " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "windmix " << cmd << ": " << e.what() << "\n";
    return 2;
  }
}

std::string hash_config(const std::string& canonical) {
  return hex64(fnv1a64(canonical));
}

struct BinFlags {
  std::size_t bin_count = 12;
  std::vector<double> edges;  // overrides bin_count when set

  void add_to(CLI::App* cmd) {
    cmd->add_option("--bins", bin_count,
                    "Number of equal-width bins spanning the input range")
        ->check(CLI::Range(std::size_t{2}, std::size_t{4096}));
    cmd->add_option("--bin-edges", edges,
                    "Explicit bin edges (comma separated, strictly increasing)")
        ->delimiter(',');
  }

  BinSpec resolve(const TimeSeries& series) const {
    if (!edges.empty()) return BinSpec(edges);
    const auto [lo, hi] =
        std::minmax_element(series.values.begin(), series.values.end());
    return BinSpec::equal_width(*lo, *hi, bin_count);
  }
};

// Window census without materializing per-window sample copies, so a
// stride-1 sliding census over a long campaign stays affordable.
struct Census {
  std::size_t window_len = 0;
  std::size_t stride = 0;
  std::vector<Histogram> smoothed;

  std::size_t size() const { return smoothed.size(); }
  std::span<const double> samples_of(const TimeSeries& series,
                                     std::size_t index) const {
    return std::span<const double>(series.values)
        .subspan(index * stride, window_len);
  }
};

Census make_census(const TimeSeries& series, const BinSpec& bins,
                   std::size_t window_len, std::size_t stride, double epsilon) {
  Census c;
  c.window_len = window_len;
  c.stride = stride;
  const std::size_t count = window_count(series.values.size(), window_len, stride);
  if (count == 0)
    throw std::invalid_argument("input series is shorter than one window");
  c.smoothed.resize(count);
  parallel_for(count, [&](std::size_t i) {
    const auto window =
        std::span<const double>(series.values).subspan(i * stride, window_len);
    c.smoothed[i] = smooth_histogram(build_histogram(window, bins), epsilon);
  });
  return c;
}

std::string join_doubles(std::span<const double> v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    os << buf;
  }
  return os.str();
}

// ---------------------------------------------------------------- fit ----

struct FitArgs {
  std::string input;
  std::string output_dir = ".";
  BinFlags bins;
  std::size_t window_len = 600;
  std::size_t stride = 600;
  std::size_t classes = 2;
  std::uint64_t seed = 0;
  double epsilon = 1e-6;
  int max_iter = 500;
  int gamma_burnin = 20;
  double gamma_exp = 0.6;
  double restart_threshold = -1.0;
  int max_restarts = 20;
  double tol = 1e-7;
  bool pure_em = false;
  bool farthest_point = false;
};

void run_fit(const FitArgs& a) {
  const TimeSeries series = read_series_csv(a.input);
  if (series.values.empty()) throw ParseError(a.input + ": no samples");
  const BinSpec bins = a.bins.resolve(series);
  const Census census =
      make_census(series, bins, a.window_len, a.stride, a.epsilon);

  SaemConfig cfg;
  cfg.classes = a.classes;
  cfg.max_iter = a.max_iter;
  cfg.gamma.burn_in = a.gamma_burnin;
  cfg.gamma.exponent = a.gamma_exp;
  cfg.gamma.pure_em = a.pure_em;
  cfg.restart_threshold = a.restart_threshold;
  cfg.epsilon = a.epsilon;
  cfg.tol = a.tol;
  cfg.max_restarts = a.max_restarts;
  cfg.seed = a.seed;
  cfg.farthest_point_init = a.farthest_point;

  SaemFit result = fit(census.smoothed, cfg);
  result.model.bins = bins;

  std::ostringstream canon;
  canon << "cmd=fit;bins=" << join_doubles(bins.edges())
        << ";window=" << a.window_len << ";stride=" << a.stride
        << ";classes=" << a.classes << ";seed=" << a.seed
        << ";epsilon=" << a.epsilon << ";max_iter=" << a.max_iter
        << ";gamma_burnin=" << a.gamma_burnin << ";gamma_exp=" << a.gamma_exp
        << ";restart_threshold=" << a.restart_threshold
        << ";max_restarts=" << a.max_restarts << ";tol=" << a.tol
        << ";pure_em=" << a.pure_em << ";farthest=" << a.farthest_point;
  const FileStamp stamp{std::string(kVersion), a.seed, hash_config(canon.str())};

  fs::create_directories(a.output_dir);
  const fs::path out(a.output_dir);
  save_model(out / "model.json", result.model, &result.diagnostics, stamp);
  const std::vector<int> labels = assign_classes(result.responsibilities);
  write_responsibilities_csv(out / "responsibilities.csv",
                             result.responsibilities, labels, a.window_len,
                             a.stride, stamp);
  write_trace_csv(out / "trace.csv", result.diagnostics, stamp);

  std::cout << "fit: " << census.smoothed.size() << " windows, K=" << a.classes
            << ", iterations=" << result.diagnostics.iterations
            << ", restarts=" << result.diagnostics.restarts
            << (result.diagnostics.converged ? "" : " (no plateau reached)")
            << "\nweights:";
  for (double w : result.model.weights) std::cout << ' ' << w;
  std::cout << "\nwrote " << (out / "model.json").string() << ", "
            << (out / "responsibilities.csv").string() << ", "
            << (out / "trace.csv").string() << "\n";
}

// ----------------------------------------------------------- classify ----

struct ClassifyArgs {
  std::string model;
  std::string input;
  std::string output = "labels.csv";
  std::size_t window_len = 600;
  std::size_t stride = 600;
  std::size_t bin_count = 0;          // optional cross-checks against the model
  std::vector<double> edges;
  std::uint64_t seed = 0;
};

void check_model_bins(const MixtureModel& model, std::size_t bin_count,
                      std::span<const double> edges) {
  if (bin_count != 0 && bin_count != model.bins.bins())
    throw ExitError{4, "requested " + std::to_string(bin_count) +
                           " bins but the model has " +
                           std::to_string(model.bins.bins())};
  if (!edges.empty()) {
    const auto& me = model.bins.edges();
    bool same = edges.size() == me.size();
    for (std::size_t i = 0; same && i < me.size(); ++i)
      same = std::abs(edges[i] - me[i]) <= 1e-12 * std::max(1.0, std::abs(me[i]));
    if (!same)
      throw ExitError{4, "requested bin edges differ from the model's"};
  }
}

void run_classify(const ClassifyArgs& a) {
  const MixtureModel model = load_model(a.model);
  check_model_bins(model, a.bin_count, a.edges);
  const TimeSeries series = read_series_csv(a.input);
  const Census census =
      make_census(series, model.bins, a.window_len, a.stride, model.epsilon);
  const Responsibilities t = responsibilities(model, census.smoothed);
  const std::vector<int> labels = assign_classes(t);

  std::ostringstream canon;
  canon << "cmd=classify;model=" << join_doubles(model.bins.edges())
        << ";window=" << a.window_len << ";stride=" << a.stride
        << ";seed=" << a.seed;
  const FileStamp stamp{std::string(kVersion), a.seed, hash_config(canon.str())};
  if (const fs::path parent = fs::path(a.output).parent_path(); !parent.empty())
    fs::create_directories(parent);
  write_responsibilities_csv(a.output, t, labels, a.window_len, a.stride, stamp);
  std::cout << "classify: " << labels.size() << " windows -> " << a.output
            << "\n";
}

// ------------------------------------------------------------- report ----

struct ReportArgs {
  std::string model;
  std::string input;
  std::string output_dir = ".";
  std::size_t window_len = 600;
  std::size_t stride = 600;
  std::size_t grid_points = 512;
  std::uint64_t seed = 0;
};

FamilyFit make_gaussian_fit(const SampleMoments& m,
                            std::span<const double> pooled) {
  FamilyFit f;
  f.family = "gaussian";
  f.gc = {m.mean, m.stddev, 0.0, 0.0};
  f.ks = ks_test(std::vector<double>(pooled.begin(), pooled.end()),
                 [&](double u) {
                   return math::normal_cdf((u - m.mean) / m.stddev);
                 });
  f.fitted = true;
  return f;
}

FamilyFit make_gram_charlier_fit(std::span<const double> pooled,
                                 std::span<const double> grid) {
  FamilyFit f;
  f.family = "gram_charlier";
  const GramCharlierParams p = fit_gram_charlier(pooled);
  f.gc = p;
  f.density_negative_somewhere = gram_charlier_pdf_grid(p, grid).has_negative;
  f.ks = ks_test(std::vector<double>(pooled.begin(), pooled.end()),
                 [&](double u) { return gram_charlier_cdf(p, u); });
  f.fitted = true;
  return f;
}

FamilyFit make_biweibull_fit(std::span<const double> pooled) {
  FamilyFit f;
  f.family = "biweibull";
  try {
    const BiWeibullFit bw = fit_biweibull(pooled);
    f.bw = bw.params;
    f.bw_split_speed = bw.split_speed;
    f.bw_variance_residual = bw.variance_identity_residual;
    f.ks = ks_test(std::vector<double>(pooled.begin(), pooled.end()),
                   [&](double u) {
                     return u < 0.0 ? 0.0 : biweibull_cdf(bw.params, u);
                   });
    f.fitted = true;
  } catch (const Error& e) {
    f.skip_reason = e.what();
  } catch (const std::invalid_argument& e) {
    f.skip_reason = e.what();
  }
  return f;
}

void run_report(const ReportArgs& a) {
  const MixtureModel model = load_model(a.model);
  const TimeSeries series = read_series_csv(a.input);
  const Census census =
      make_census(series, model.bins, a.window_len, a.stride, model.epsilon);
  const Responsibilities t = responsibilities(model, census.smoothed);
  const std::vector<int> labels = assign_classes(t);
  const std::size_t k = model.k();

  std::ostringstream canon;
  canon << "cmd=report;model=" << join_doubles(model.bins.edges())
        << ";window=" << a.window_len << ";stride=" << a.stride
        << ";grid=" << a.grid_points << ";seed=" << a.seed;
  const FileStamp stamp{std::string(kVersion), a.seed, hash_config(canon.str())};
  fs::create_directories(a.output_dir);
  const fs::path out(a.output_dir);

  // Evaluation grid across the model's speed range.
  std::vector<double> grid(a.grid_points);
  const double lo = std::max(0.0, model.bins.edges().front());
  const double hi = model.bins.edges().back();
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid.size() - 1);

  Report report;
  report.bin_edges = model.bins.edges();
  for (std::size_t cls = 0; cls < k; ++cls) {
    ClassReport cr;
    cr.class_id = static_cast<int>(cls) + 1;
    cr.model_weight = model.weights[cls];
    const DirichletMoments mom = moments(model.components[cls]);
    cr.mean_pdf = mom.means;

    std::vector<double> pooled;
    for (std::size_t i = 0; i < census.size(); ++i)
      if (labels[i] == cr.class_id) {
        ++cr.window_count;
        const auto window = census.samples_of(series, i);
        pooled.insert(pooled.end(), window.begin(), window.end());
      }
    cr.empirical_weight = static_cast<double>(cr.window_count) /
                          static_cast<double>(census.size());

    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    if (cr.window_count >= 5) {
      cr.pooled = sample_moments(pooled);
      if (cr.pooled.mean > 0.0)
        cr.turbulence_intensity = cr.pooled.stddev / cr.pooled.mean;

      cr.fits.push_back(make_gaussian_fit(cr.pooled, pooled));
      cr.fits.push_back(make_gram_charlier_fit(pooled, grid));
      cr.fits.push_back(make_biweibull_fit(pooled));

      for (const FamilyFit& f : cr.fits) {
        if (!f.fitted) continue;
        names.push_back(f.family);
        std::vector<double> col(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
          if (f.family == "gaussian")
            col[i] = math::normal_pdf((grid[i] - f.gc.mean) / f.gc.stddev) /
                     f.gc.stddev;
          else if (f.family == "gram_charlier")
            col[i] = gram_charlier_pdf(f.gc, grid[i]);
          else
            col[i] = biweibull_pdf(f.bw, grid[i]);
        }
        columns.push_back(std::move(col));
      }
    } else {
      for (const char* family : {"gaussian", "gram_charlier", "biweibull"}) {
        FamilyFit f;
        f.family = family;
        f.skip_reason = "fewer than 5 windows in class";
        cr.fits.push_back(std::move(f));
      }
    }

    const std::string tag = "class_" + std::to_string(cr.class_id);
    write_class_bins_csv(out / (tag + "_bins.csv"), model.bins, cr.mean_pdf,
                         stamp);
    if (!names.empty())
      write_density_grid_csv(out / (tag + "_density.csv"), grid, names, columns,
                             stamp);
    report.classes.push_back(std::move(cr));
  }

  write_report_json(out / "report.json", report, stamp);
  std::cout << "report: " << k << " classes over " << census.size()
            << " windows -> " << (out / "report.json").string() << "\n";
}

// ----------------------------------------------------------- sequence ----

struct SequenceArgs {
  std::string labels;
  std::string output = "sequence_report.json";
  double window_seconds = 0.0;  // 0: derive from the labels file
  std::uint64_t seed = 0;
};

void run_sequence(const SequenceArgs& a) {
  const LabelsFile file = read_labels_csv(a.labels);
  if (file.labels.size() < 2)
    throw ExitError{5, "need at least 2 windows to analyze transitions (got " +
                           std::to_string(file.labels.size()) + ")"};
  ClassSequence seq;
  seq.labels = file.labels;
  seq.window_len = file.window_len.value_or(600);
  seq.stride = file.stride.value_or(seq.window_len);
  const double window_seconds =
      a.window_seconds > 0.0 ? a.window_seconds
                             : static_cast<double>(seq.window_len);

  const TransitionMatrix tm = transition_matrix(seq);
  const ResidenceSummary res = residence_times(seq, tm.k);
  const std::vector<ResidenceFit> fits = fit_residence(res, window_seconds);

  // Hash and embed only the file name, not its directory, so identical data
  // analyzed from different working trees produces identical bytes.
  const std::string labels_name = fs::path(a.labels).filename().string();
  std::ostringstream canon;
  canon << "cmd=sequence;labels=" << labels_name
        << ";window_seconds=" << window_seconds << ";seed=" << a.seed;
  const FileStamp stamp{std::string(kVersion), a.seed, hash_config(canon.str())};
  if (const fs::path parent = fs::path(a.output).parent_path(); !parent.empty())
    fs::create_directories(parent);
  write_sequence_report_json(a.output, labels_name, seq, tm, res, fits, stamp);
  std::cout << "sequence: " << file.labels.size() << " windows, " << tm.k
            << " classes -> " << a.output << "\n";
}

// -------------------------------------------------------------- synth ----

struct SynthArgs {
  std::string output_dir = ".";
  std::string scenario;  // optional JSON file
  std::size_t windows = 0;
  std::size_t window_len = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool windows_given = false;
  bool window_len_given = false;
};

void run_synth(const SynthArgs& a) {
  ScenarioSpec spec;
  if (!a.scenario.empty()) {
    spec = read_scenario_json(a.scenario);
    if (a.windows_given) spec.windows = a.windows;
    if (a.seed_given) spec.seed = a.seed;
    if (a.window_len_given)
      for (auto& r : spec.regimes) r.window_len = a.window_len;
  } else {
    spec = default_scenario(a.windows_given ? a.windows : 500,
                            a.seed_given ? a.seed : 0,
                            a.window_len_given ? a.window_len : 600);
  }
  const Scenario scenario = sample_scenario(spec);

  std::ostringstream canon;
  canon << "cmd=synth;windows=" << spec.windows << ";seed=" << spec.seed
        << ";window_len=" << scenario.window_len << ";k=" << spec.k()
        << ";transition=" << join_doubles(spec.transition);
  const FileStamp stamp{std::string(kVersion), spec.seed,
                        hash_config(canon.str())};
  fs::create_directories(a.output_dir);
  const fs::path out(a.output_dir);
  write_series_csv(out / "samples.csv", scenario.series, stamp);
  write_labels_csv(out / "labels.csv", scenario.labels, scenario.window_len,
                   scenario.window_len, stamp);
  std::cout << "synth: " << spec.windows << " windows of " << scenario.window_len
            << " samples (" << scenario.series.values.size() << " rows)";
  if (scenario.clamped_samples > 0)
    std::cout << ", " << scenario.clamped_samples << " samples clamped at 0";
  std::cout << "\nwrote " << (out / "samples.csv").string() << ", "
            << (out / "labels.csv").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wind-regime classification of sampled speed series"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand(
      "fit", "Estimate a Dirichlet mixture over window histograms");
  fit_cmd->add_option("--input", fit_args.input, "Samples CSV")->required();
  fit_cmd->add_option("--output-dir", fit_args.output_dir, "Output directory");
  fit_args.bins.add_to(fit_cmd);
  fit_cmd->add_option("--window", fit_args.window_len, "Window length, samples");
  fit_cmd->add_option("--stride", fit_args.stride, "Stride between windows");
  fit_cmd->add_option("--classes", fit_args.classes, "Number of classes K")
      ->check(CLI::Range(std::size_t{1}, std::size_t{64}));
  fit_cmd->add_option("--seed", fit_args.seed, "Root random seed");
  fit_cmd->add_option("--epsilon", fit_args.epsilon, "Histogram smoothing mass");
  fit_cmd->add_option("--max-iter", fit_args.max_iter, "Iteration budget Q");
  fit_cmd->add_option("--gamma-burnin", fit_args.gamma_burnin,
                      "Iterations held at gamma = 1");
  fit_cmd->add_option("--gamma-exp", fit_args.gamma_exp,
                      "Decay exponent of the gamma schedule, in (0.5, 1]");
  fit_cmd->add_option("--restart-threshold", fit_args.restart_threshold,
                      "Minimum class fraction c(n); negative = auto");
  fit_cmd->add_option("--max-restarts", fit_args.max_restarts, "Restart budget");
  fit_cmd->add_option("--tol", fit_args.tol, "Log-likelihood plateau tolerance");
  fit_cmd->add_flag("--pure-em", fit_args.pure_em,
                    "Disable the stochastic step (plain EM)");
  fit_cmd->add_flag("--farthest-point-init", fit_args.farthest_point,
                    "Seeded farthest-point start instead of random");

  ClassifyArgs classify_args;
  auto* classify_cmd = app.add_subcommand(
      "classify", "Assign windows to classes under an existing model");
  classify_cmd->add_option("--model", classify_args.model, "Model JSON")
      ->required();
  classify_cmd->add_option("--input", classify_args.input, "Samples CSV")
      ->required();
  classify_cmd->add_option("--output", classify_args.output, "Labels CSV");
  classify_cmd->add_option("--window", classify_args.window_len,
                           "Window length, samples");
  classify_cmd->add_option("--stride", classify_args.stride, "Stride");
  classify_cmd->add_option("--bins", classify_args.bin_count,
                           "Cross-check: expected bin count");
  classify_cmd
      ->add_option("--bin-edges", classify_args.edges,
                   "Cross-check: expected bin edges")
      ->delimiter(',');
  classify_cmd->add_option("--seed", classify_args.seed, "Recorded seed");

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand(
      "report", "Per-class parametric fits and plot-ready density grids");
  report_cmd->add_option("--model", report_args.model, "Model JSON")->required();
  report_cmd->add_option("--input", report_args.input, "Samples CSV")
      ->required();
  report_cmd->add_option("--output-dir", report_args.output_dir,
                         "Output directory");
  report_cmd->add_option("--window", report_args.window_len,
                         "Window length, samples");
  report_cmd->add_option("--stride", report_args.stride, "Stride");
  report_cmd->add_option("--grid-points", report_args.grid_points,
                         "Density grid resolution")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  report_cmd->add_option("--seed", report_args.seed, "Recorded seed");

  SequenceArgs sequence_args;
  auto* sequence_cmd = app.add_subcommand(
      "sequence", "Transition matrix and residence times of a label sequence");
  sequence_cmd->add_option("--labels", sequence_args.labels, "Labels CSV")
      ->required();
  sequence_cmd->add_option("--output", sequence_args.output, "Report JSON");
  sequence_cmd->add_option("--window-seconds", sequence_args.window_seconds,
                           "Seconds per window (default: from the labels file)");
  sequence_cmd->add_option("--seed", sequence_args.seed, "Recorded seed");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand(
      "synth", "Generate a synthetic series with known regime labels");
  synth_cmd->add_option("--output-dir", synth_args.output_dir,
                        "Output directory");
  auto* scen_opt = synth_cmd->add_option("--scenario", synth_args.scenario,
                                         "Scenario spec JSON");
  (void)scen_opt;
  auto* windows_opt =
      synth_cmd->add_option("--windows", synth_args.windows, "Window count");
  auto* window_opt = synth_cmd->add_option("--window", synth_args.window_len,
                                           "Window length, samples");
  auto* seed_opt = synth_cmd->add_option("--seed", synth_args.seed, "Root seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  synth_args.seed_given = seed_opt->count() > 0;
  synth_args.windows_given = windows_opt->count() > 0;
  synth_args.window_len_given = window_opt->count() > 0;

  if (fit_cmd->parsed()) return guard("fit", [&] { run_fit(fit_args); });
  if (classify_cmd->parsed())
    return guard("classify", [&] { run_classify(classify_args); });
  if (report_cmd->parsed())
    return guard("report", [&] { run_report(report_args); });
  if (sequence_cmd->parsed())
    return guard("sequence", [&] { run_sequence(sequence_args); });
  if (synth_cmd->parsed()) return guard("synth", [&] { run_synth(synth_args); });
  return 2;
}
