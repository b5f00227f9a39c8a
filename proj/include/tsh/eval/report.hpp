#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tsh/engine/model.hpp"
#include "tsh/engine/profile.hpp"

namespace tsh::eval {

inline constexpr int kReportSchemaVersion = 1;

/// One evaluated scene. si_snri is output - input, computed once.
struct EvalRecord {
  std::string scene_id;
  bool ok = true;
  std::string error;  ///< set when ok is false
  double input_si_snr_db = 0.0;
  double output_si_snr_db = 0.0;
  double si_snri_db = 0.0;
  std::optional<double> enrollment_similarity;
  std::map<std::string, double> tags;

  bool operator==(const EvalRecord&) const = default;
};

struct Stats {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
  double min = 0.0;
  double max = 0.0;

  bool operator==(const Stats&) const = default;
};

Stats compute_stats(const std::vector<double>& values);

struct Stratum {
  std::string axis;
  double value = 0.0;
  std::size_t scenes = 0;  ///< successful scenes
  std::size_t failed = 0;
  Stats si_snri_db;
  Stats input_si_snr_db;
  Stats enrollment_similarity;

  bool operator==(const Stratum&) const = default;
};

struct LatencySection {
  double buffering_ms = 0.0;
  double lookahead_ms = 0.0;
  double processing_ms = 0.0;
  double total_ms = 0.0;
  double reference_ms = engine::kReferenceLatencyMs;

  bool operator==(const LatencySection&) const = default;
};

/// Timings of one profile run ("in_place" or "copy").
struct TimingSection {
  std::string label;
  bool include_cache_copy = false;
  std::size_t state_bytes = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
  double deadline_ms = 0.0;
  double deadline_miss_fraction = 0.0;
  std::vector<std::pair<double, double>> cdf;
  std::vector<engine::ChunkTimings> chunks;
  LatencySection latency;

  bool operator==(const TimingSection&) const = default;
};

struct Report {
  int schema_version = kReportSchemaVersion;
  std::string kind = "eval";  ///< eval | sweep | latency
  std::string estimator;      ///< identity | oracle | model (eval, sweep)
  std::map<std::string, std::string> environment;
  std::vector<EvalRecord> records;
  /// Aggregates over successful records.
  Stats si_snri_db;
  Stats input_si_snr_db;
  Stats output_si_snr_db;
  Stats enrollment_similarity;
  std::size_t failed = 0;
  std::vector<std::pair<double, double>> si_snri_cdf;
  std::vector<Stratum> strata;
  std::vector<TimingSection> timings;

  bool operator==(const Report&) const = default;
};

/// Recomputes every aggregate (overall, CDF, strata by `axis` tag) from
/// the records. Strata follow the given axis values.
void aggregate(Report& report, const std::string& axis = {},
               const std::vector<double>& axis_values = {});

TimingSection timing_section(const std::string& label, const engine::ProfileResult& r,
                             const dsp::AudioParams& audio);

/// CPU, compiler, build type, thread count.
std::map<std::string, std::string> environment_descriptor();

enum class ReportFormat { Json, Csv, Markdown };
ReportFormat parse_report_format(std::string_view s);
std::string extension(ReportFormat f);

nlohmann::json to_json(const Report& r);
/// Inverse of to_json; throws ParseError on schema violations.
Report report_from_json(const nlohmann::json& j);
/// Throws ParseError listing the first schema violation.
void validate_report_json(const nlohmann::json& j);

/// Records table for eval/sweep reports, timing rows for latency reports.
std::string to_csv(const Report& r);
/// Summary tables with fixed column counts.
std::string to_markdown(const Report& r);

void emit_report(const Report& r, ReportFormat format, const std::filesystem::path& path);
Report load_report(const std::filesystem::path& json_path);

}  // namespace tsh::eval
