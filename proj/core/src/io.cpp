#include "windmix/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "windmix/error.hpp"
#include "windmix/version.hpp"

namespace windmix {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_stamp(std::ostream& os, const FileStamp& stamp) {
  os << "# windmix " << stamp.tool_version << "\n";
  os << "# seed=" << stamp.seed << "\n";
  os << "# config=" << stamp.config_hash << "\n";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);  // '\n' endings on all platforms
  if (!os) throw ParseError("cannot open for writing: " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open: " + path.string());
  return is;
}

double parse_double_field(std::string_view field, std::size_t line,
                          const char* what) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line) + ": bad " + what +
                         " value '" + std::string(field) + "'",
                     line);
  return v;
}

// Splits one CSV record; no quoting, the formats here never need it.
std::vector<std::string_view> split_csv(std::string_view row) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = row.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(row.substr(start));
      break;
    }
    out.push_back(row.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

json stamp_json(const FileStamp& stamp) {
  return json{{"tool_version", stamp.tool_version},
              {"seed", stamp.seed},
              {"config_hash", stamp.config_hash}};
}

void dump_json(const std::filesystem::path& path, const json& j) {
  auto os = open_out(path);
  os << j.dump(2) << "\n";
}

json load_json(const std::filesystem::path& path) {
  auto is = open_in(path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace

TimeSeries read_series_csv(const std::filesystem::path& path) {
  auto is = open_in(path);
  TimeSeries series;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    strip_cr(line);
    if (!line.empty() && line[0] == '#') continue;
    if (!header_seen) {
      if (line != "timestamp,speed_mps")
        throw ParseError("line " + std::to_string(line_no) +
                             ": expected header 'timestamp,speed_mps'",
                         line_no);
      header_seen = true;
      continue;
    }
    if (line.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty row", line_no);
    const auto fields = split_csv(line);
    if (fields.size() != 2)
      throw ParseError("line " + std::to_string(line_no) +
                           ": expected 2 fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    const double ts = parse_double_field(fields[0], line_no, "timestamp");
    const double speed = parse_double_field(fields[1], line_no, "speed");
    if (speed < 0.0)
      throw ParseError("line " + std::to_string(line_no) + ": negative speed",
                       line_no);
    if (!series.timestamps.empty() && ts < series.timestamps.back())
      throw ParseError("line " + std::to_string(line_no) +
                           ": timestamps must be non-decreasing",
                       line_no);
    series.timestamps.push_back(ts);
    series.values.push_back(speed);
  }
  if (!header_seen) throw ParseError(path.string() + ": missing header");
  return series;
}

void write_series_csv(const std::filesystem::path& path, const TimeSeries& s,
                      const FileStamp& stamp) {
  auto os = open_out(path);
  write_stamp(os, stamp);
  os << "timestamp,speed_mps\n";
  for (std::size_t i = 0; i < s.values.size(); ++i)
    os << fmt_double(s.timestamps[i]) << ',' << fmt_double(s.values[i]) << "\n";
}

LabelsFile read_labels_csv(const std::filesystem::path& path) {
  auto is = open_in(path);
  LabelsFile out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t label_col = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    strip_cr(line);
    if (!line.empty() && line[0] == '#') {
      // Stamp comments may carry the window geometry.
      const auto parse_meta = [&](std::string_view key,
                                  std::optional<std::size_t>& slot) {
        const std::string prefix = "# " + std::string(key) + "=";
        if (line.rfind(prefix, 0) == 0)
          slot = static_cast<std::size_t>(std::stoull(line.substr(prefix.size())));
      };
      parse_meta("window_len", out.window_len);
      parse_meta("stride", out.stride);
      continue;
    }
    const auto fields = split_csv(line);
    if (!header_seen) {
      bool found = false;
      for (std::size_t c = 0; c < fields.size(); ++c)
        if (fields[c] == "label") {
          label_col = c;
          found = true;
        }
      if (!found)
        throw ParseError("line " + std::to_string(line_no) +
                             ": header has no 'label' column",
                         line_no);
      header_seen = true;
      continue;
    }
    if (fields.size() <= label_col)
      throw ParseError("line " + std::to_string(line_no) + ": short row", line_no);
    int label = 0;
    const auto f = fields[label_col];
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), label);
    if (ec != std::errc() || ptr != f.data() + f.size() || label < 1)
      throw ParseError("line " + std::to_string(line_no) + ": bad label '" +
                           std::string(f) + "'",
                       line_no);
    out.labels.push_back(label);
  }
  if (!header_seen) throw ParseError(path.string() + ": missing header");
  return out;
}

void write_labels_csv(const std::filesystem::path& path,
                      std::span<const int> labels, std::size_t window_len,
                      std::size_t stride, const FileStamp& stamp) {
  auto os = open_out(path);
  write_stamp(os, stamp);
  os << "# window_len=" << window_len << "\n";
  os << "# stride=" << stride << "\n";
  os << "window_index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    os << i << ',' << labels[i] << "\n";
}

void write_responsibilities_csv(const std::filesystem::path& path,
                                const Responsibilities& t,
                                std::span<const int> labels,
                                std::size_t window_len, std::size_t stride,
                                const FileStamp& stamp) {
  auto os = open_out(path);
  write_stamp(os, stamp);
  os << "# window_len=" << window_len << "\n";
  os << "# stride=" << stride << "\n";
  os << "window_index";
  for (std::size_t c = 0; c < t.cols(); ++c) os << ",t_" << (c + 1);
  os << ",label\n";
  for (std::size_t i = 0; i < t.rows(); ++i) {
    os << i;
    for (std::size_t c = 0; c < t.cols(); ++c) os << ',' << fmt_double(t.at(i, c));
    os << ',' << labels[i] << "\n";
  }
}

void write_trace_csv(const std::filesystem::path& path,
                     const SaemDiagnostics& diag, const FileStamp& stamp) {
  auto os = open_out(path);
  write_stamp(os, stamp);
  os << "iteration,gamma,log_likelihood";
  const std::size_t k = diag.trace.empty() ? 0 : diag.trace.front().weights.size();
  for (std::size_t c = 0; c < k; ++c) os << ",w_" << (c + 1);
  os << "\n";
  for (const auto& row : diag.trace) {
    os << row.iteration << ',' << fmt_double(row.gamma) << ','
       << fmt_double(row.log_likelihood);
    for (double w : row.weights) os << ',' << fmt_double(w);
    os << "\n";
  }
}

void save_model(const std::filesystem::path& path, const MixtureModel& model,
                const SaemDiagnostics* diag, const FileStamp& stamp) {
  if (!model.bins.valid())
    throw std::invalid_argument("save_model: model has no bin partition");
  json j;
  j["format"] = "windmix-model";
  j["format_version"] = 1;
  j["meta"] = stamp_json(stamp);
  j["bins"] = json{{"edges", model.bins.edges()}};
  j["k"] = model.k();
  j["weights"] = model.weights;
  json alpha = json::array();
  for (const auto& c : model.components) alpha.push_back(c.alpha());
  j["alpha"] = std::move(alpha);
  j["epsilon"] = model.epsilon;
  j["seed"] = model.meta.seed;
  j["gamma"] = json{{"burn_in", model.meta.gamma.burn_in},
                    {"exponent", model.meta.gamma.exponent},
                    {"pure_em", model.meta.gamma.pure_em}};
  j["iterations"] = model.meta.iterations;
  j["final_log_likelihood"] = model.meta.final_log_likelihood;
  if (diag) {
    j["diagnostics"] = json{{"restarts", diag->restarts},
                            {"converged", diag->converged},
                            {"clamp_events", diag->clamp_events}};
  }
  dump_json(path, j);
}

MixtureModel load_model(const std::filesystem::path& path) {
  const json j = load_json(path);
  try {
    if (j.at("format").get<std::string>() != "windmix-model")
      throw ParseError(path.string() + ": not a windmix model file");
    MixtureModel model;
    model.bins = BinSpec(j.at("bins").at("edges").get<std::vector<double>>());
    model.weights = j.at("weights").get<std::vector<double>>();
    for (const auto& row : j.at("alpha"))
      model.components.emplace_back(row.get<std::vector<double>>());
    model.epsilon = j.at("epsilon").get<double>();
    model.meta.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("gamma")) {
      model.meta.gamma.burn_in = j["gamma"].value("burn_in", 20);
      model.meta.gamma.exponent = j["gamma"].value("exponent", 0.6);
      model.meta.gamma.pure_em = j["gamma"].value("pure_em", false);
    }
    model.meta.iterations = j.at("iterations").get<int>();
    model.meta.final_log_likelihood = j.at("final_log_likelihood").get<double>();

    if (model.k() == 0 || model.k() != j.at("k").get<std::size_t>())
      throw ParseError(path.string() + ": component count mismatch");
    if (model.weights.size() != model.k())
      throw ParseError(path.string() + ": weight count mismatch");
    double total = 0.0;
    for (double w : model.weights) {
      if (w < 0.0) throw ParseError(path.string() + ": negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ParseError(path.string() + ": weights do not sum to 1");
    for (const auto& c : model.components)
      if (c.dims() != model.bins.bins())
        throw ParseError(path.string() +
                         ": alpha dimension does not match the bin count");
    if (!(model.epsilon > 0.0))
      throw ParseError(path.string() + ": epsilon must be > 0");
    return model;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

ScenarioSpec read_scenario_json(const std::filesystem::path& path) {
  const json j = load_json(path);
  try {
    ScenarioSpec spec;
    spec.windows = j.value("windows", std::size_t{0});
    spec.seed = j.value("seed", std::uint64_t{0});
    const auto window_len = j.value("window_len", std::size_t{600});
    for (const auto& r : j.at("regimes")) {
      RegimeSpec rs;
      rs.window_len = window_len;
      const std::string family = r.at("family").get<std::string>();
      if (family == "gaussian") {
        rs.family = GaussianRegime{r.at("mean").get<double>(),
                                   r.at("sigma").get<double>()};
      } else if (family == "skewed") {
        rs.family = SkewedRegime{r.at("shift").get<double>(),
                                 r.at("scale").get<double>(),
                                 r.at("shape").get<double>()};
      } else if (family == "bimodal") {
        rs.family = BimodalRegime{
            r.at("p").get<double>(),  r.at("c1").get<double>(),
            r.at("k1").get<double>(), r.at("c2").get<double>(),
            r.at("k2").get<double>()};
      } else {
        throw ParseError(path.string() + ": unknown regime family '" + family +
                         "'");
      }
      spec.regimes.push_back(std::move(rs));
    }
    for (const auto& row : j.at("transition"))
      for (const auto& v : row) spec.transition.push_back(v.get<double>());
    return spec;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

namespace {

json moments_json(const SampleMoments& m) {
  json j{{"count", m.count},
         {"mean", m.mean},
         {"stddev", m.stddev}};
  j["skewness"] = m.skewness ? json(*m.skewness) : json();
  j["ex_kurtosis"] = m.ex_kurtosis ? json(*m.ex_kurtosis) : json();
  return j;
}

json ks_json(const KsResult& ks) {
  return json{{"statistic", ks.statistic}, {"n", ks.n}, {"p_value", ks.p_value}};
}

json family_fit_json(const FamilyFit& f) {
  json j{{"family", f.family}, {"fitted", f.fitted}};
  if (!f.fitted) {
    j["skip_reason"] = f.skip_reason;
    return j;
  }
  if (f.family == "biweibull") {
    j["params"] = json{{"p", f.bw.weight_left},
                       {"c1", f.bw.scale1},
                       {"k1", f.bw.shape1},
                       {"c2", f.bw.scale2},
                       {"k2", f.bw.shape2}};
    j["split_speed"] = f.bw_split_speed;
    j["variance_identity_residual"] = f.bw_variance_residual;
  } else {
    j["params"] = json{{"mean", f.gc.mean}, {"stddev", f.gc.stddev}};
    if (f.family == "gram_charlier") {
      j["params"]["skewness"] = f.gc.skewness;
      j["params"]["ex_kurtosis"] = f.gc.ex_kurtosis;
      j["density_negative_somewhere"] = f.density_negative_somewhere;
    }
  }
  j["ks_statistic"] = f.ks.statistic;
  j["ks_pvalue"] = f.ks.p_value;
  j["ks_n"] = f.ks.n;
  j["ks_params_from_sample"] = f.ks_params_from_sample;
  return j;
}

}  // namespace

void write_report_json(const std::filesystem::path& path, const Report& report,
                       const FileStamp& stamp) {
  json j;
  j["format"] = "windmix-report";
  j["format_version"] = 1;
  j["meta"] = stamp_json(stamp);
  j["bin_edges"] = report.bin_edges;
  json classes = json::array();
  for (const auto& c : report.classes) {
    json cj;
    cj["class"] = c.class_id;
    cj["window_count"] = c.window_count;
    cj["model_weight"] = c.model_weight;
    cj["empirical_weight"] = c.empirical_weight;
    cj["mean_pdf"] = c.mean_pdf;
    cj["pooled_moments"] = moments_json(c.pooled);
    cj["turbulence_intensity"] =
        c.turbulence_intensity ? json(*c.turbulence_intensity) : json();
    json fits = json::array();
    for (const auto& f : c.fits) fits.push_back(family_fit_json(f));
    cj["fits"] = std::move(fits);
    classes.push_back(std::move(cj));
  }
  j["classes"] = std::move(classes);
  dump_json(path, j);
}

void write_density_grid_csv(const std::filesystem::path& path,
                            std::span<const double> grid,
                            std::span<const std::string> names,
                            std::span<const std::vector<double>> columns,
                            const FileStamp& stamp) {
  auto os = open_out(path);
  write_stamp(os, stamp);
  os << "u";
  for (const auto& name : names) os << ',' << name;
  os << "\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    os << fmt_double(grid[i]);
    for (const auto& col : columns) os << ',' << fmt_double(col[i]);
    os << "\n";
  }
}

void write_class_bins_csv(const std::filesystem::path& path,
                          const BinSpec& bins, std::span<const double> mean_pdf,
                          const FileStamp& stamp) {
  auto os = open_out(path);
  write_stamp(os, stamp);
  os << "bin_low,bin_high,proportion\n";
  for (std::size_t l = 0; l < mean_pdf.size(); ++l)
    os << fmt_double(bins.edges()[l]) << ',' << fmt_double(bins.edges()[l + 1])
       << ',' << fmt_double(mean_pdf[l]) << "\n";
}

void write_sequence_report_json(const std::filesystem::path& path,
                                const std::string& labels_file,
                                const ClassSequence& seq,
                                const TransitionMatrix& tm,
                                const ResidenceSummary& res,
                                std::span<const ResidenceFit> fits,
                                const FileStamp& stamp) {
  json j;
  j["format"] = "windmix-sequence-report";
  j["format_version"] = 1;
  j["meta"] = stamp_json(stamp);
  j["labels_file"] = labels_file;
  j["n_windows"] = seq.labels.size();
  j["k"] = tm.k;
  j["window_len"] = seq.window_len;
  j["stride"] = seq.stride;
  j["overlapping_windows"] = seq.stride < seq.window_len;

  json counts = json::array(), probs = json::array();
  for (std::size_t a = 0; a < tm.k; ++a) {
    json crow = json::array(), prow = json::array();
    for (std::size_t b = 0; b < tm.k; ++b) {
      crow.push_back(tm.count(a, b));
      prow.push_back(tm.prob(a, b));
    }
    counts.push_back(std::move(crow));
    probs.push_back(std::move(prow));
  }
  std::vector<bool> observed(tm.row_observed.begin(), tm.row_observed.end());
  j["transition"] =
      json{{"counts", std::move(counts)}, {"probs", std::move(probs)},
           {"row_observed", observed}};

  json residence = json::array();
  for (std::size_t cls = 0; cls < res.k; ++cls) {
    json rj;
    rj["class"] = cls + 1;
    // Run-length histogram {length: count}, compact for long sequences.
    std::map<std::size_t, std::size_t> hist;
    for (std::size_t r : res.runs[cls]) ++hist[r];
    json hj = json::array();
    for (const auto& [len, cnt] : hist)
      hj.push_back(json{{"windows", len},
                        {"seconds", static_cast<double>(len) *
                                        static_cast<double>(seq.window_len)},
                        {"count", cnt}});
    rj["run_lengths"] = std::move(hj);
    const ResidenceFit& f = fits[cls];
    rj["fit"] = json{{"fitted", f.fitted},
                     {"run_count", f.run_count},
                     {"mean_run_windows", f.mean_run},
                     {"geometric_p", f.geometric_p},
                     {"exit_rate_per_second", f.exit_rate_per_second},
                     {"ks", ks_json(f.ks)}};
    residence.push_back(std::move(rj));
  }
  j["residence"] = std::move(residence);
  dump_json(path, j);
}

}  // namespace windmix
