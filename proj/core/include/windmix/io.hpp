// File formats: sample/label CSVs, the model JSON, and the report JSONs.
// Everything written embeds the tool version, seed, and a hash of the
// effective configuration so outputs are traceable and reruns diffable.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "windmix/gof.hpp"
#include "windmix/parametric.hpp"
#include "windmix/saem.hpp"
#include "windmix/sequence.hpp"
#include "windmix/synth.hpp"
#include "windmix/windows.hpp"

namespace windmix {

struct FileStamp {
  std::string tool_version;
  std::uint64_t seed = 0;
  std::string config_hash;
};

// --- sample series -------------------------------------------------------
// CSV, header "timestamp,speed_mps", one row per sample; leading '#' lines
// are stamp comments. Missing or non-finite fields are rejected with the
// 1-based line number.
TimeSeries read_series_csv(const std::filesystem::path& path);
void write_series_csv(const std::filesystem::path& path, const TimeSeries& s,
                      const FileStamp& stamp);

// --- labels --------------------------------------------------------------
struct LabelsFile {
  std::vector<int> labels;  // 1-based
  std::optional<std::size_t> window_len;  // parsed from stamp comments
  std::optional<std::size_t> stride;
};

LabelsFile read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(const std::filesystem::path& path,
                      std::span<const int> labels, std::size_t window_len,
                      std::size_t stride, const FileStamp& stamp);

// Responsibilities CSV: window_index, t_1..t_K, label.
void write_responsibilities_csv(const std::filesystem::path& path,
                                const Responsibilities& t,
                                std::span<const int> labels,
                                std::size_t window_len, std::size_t stride,
                                const FileStamp& stamp);

// Per-iteration trace CSV: iteration, gamma, log_likelihood, w_1..w_K.
void write_trace_csv(const std::filesystem::path& path,
                     const SaemDiagnostics& diag, const FileStamp& stamp);

// --- model ---------------------------------------------------------------
// JSON: {bins, k, weights, alpha, epsilon, seed, gamma, iterations,
// final_log_likelihood, ...}. Bit-exact round trip of all doubles.
void save_model(const std::filesystem::path& path, const MixtureModel& model,
                const SaemDiagnostics* diag, const FileStamp& stamp);
MixtureModel load_model(const std::filesystem::path& path);

// --- scenario ------------------------------------------------------------
ScenarioSpec read_scenario_json(const std::filesystem::path& path);

// --- per-class parametric report ----------------------------------------
struct FamilyFit {
  std::string family;  // "gaussian" | "gram_charlier" | "biweibull"
  bool fitted = false;
  std::string skip_reason;  // set when fitted == false
  // gaussian / gram_charlier parameters
  GramCharlierParams gc{};
  // biweibull parameters
  BiWeibullParams bw{};
  double bw_split_speed = 0.0;
  double bw_variance_residual = 0.0;
  bool density_negative_somewhere = false;  // Gram-Charlier negativity flag
  KsResult ks{};
  bool ks_params_from_sample = true;  // estimation reuse flag
};

struct ClassReport {
  int class_id = 0;           // 1-based
  std::size_t window_count = 0;
  double model_weight = 0.0;
  double empirical_weight = 0.0;
  std::vector<double> mean_pdf;  // component mean alpha/A per bin
  SampleMoments pooled;          // moments over all samples of the class
  std::optional<double> turbulence_intensity;
  std::vector<FamilyFit> fits;
};

struct Report {
  std::vector<ClassReport> classes;
  std::vector<double> bin_edges;
};

void write_report_json(const std::filesystem::path& path, const Report& report,
                       const FileStamp& stamp);

// Plot-ready grid CSV: first column u, one density column per fitted family.
void write_density_grid_csv(const std::filesystem::path& path,
                            std::span<const double> grid,
                            std::span<const std::string> names,
                            std::span<const std::vector<double>> columns,
                            const FileStamp& stamp);

// Class mean-PDF CSV: bin_low, bin_high, proportion.
void write_class_bins_csv(const std::filesystem::path& path,
                          const BinSpec& bins, std::span<const double> mean_pdf,
                          const FileStamp& stamp);

// --- sequence report ------------------------------------------------------
void write_sequence_report_json(const std::filesystem::path& path,
                                const std::string& labels_file,
                                const ClassSequence& seq,
                                const TransitionMatrix& tm,
                                const ResidenceSummary& res,
                                std::span<const ResidenceFit> fits,
                                const FileStamp& stamp);

}  // namespace windmix
