#include "tsh/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "tsh/io/json_file.hpp"
#include "tsh/io/wav.hpp"

#ifndef TSH_BUILD_TYPE
#define TSH_BUILD_TYPE "unknown"
#endif
#ifndef TSH_BUILD_FLAGS
#define TSH_BUILD_FLAGS ""
#endif

namespace tsh::eval {

namespace {

using nlohmann::json;

// JSON has no infinities: encode them as strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double get_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ParseError("expected a number, got " + j.dump());
}

json stats_json(const Stats& s) {
  return {{"count", s.count}, {"mean", num(s.mean)}, {"median", num(s.median)},
          {"p10", num(s.p10)},  {"p90", num(s.p90)},   {"min", num(s.min)},
          {"max", num(s.max)}};
}

Stats stats_from(const json& j) {
  Stats s;
  s.count = j.at("count").get<std::size_t>();
  s.mean = get_num(j.at("mean"));
  s.median = get_num(j.at("median"));
  s.p10 = get_num(j.at("p10"));
  s.p90 = get_num(j.at("p90"));
  s.min = get_num(j.at("min"));
  s.max = get_num(j.at("max"));
  return s;
}

json cdf_json(const std::vector<std::pair<double, double>>& cdf) {
  json a = json::array();
  for (const auto& [x, p] : cdf) a.push_back({num(x), num(p)});
  return a;
}

std::vector<std::pair<double, double>> cdf_from(const json& j) {
  std::vector<std::pair<double, double>> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) throw ParseError("CDF points must be pairs");
    out.emplace_back(get_num(e[0]), get_num(e[1]));
  }
  return out;
}

std::vector<std::pair<double, double>> make_cdf(std::vector<double> v, std::size_t points = 101) {
  std::vector<std::pair<double, double>> cdf;
  if (v.empty()) return cdf;
  std::sort(v.begin(), v.end());
  const std::size_t n = std::min(points, v.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx =
        n == 1 ? v.size() - 1
               : static_cast<std::size_t>(std::lround(static_cast<double>(i) / (n - 1) *
                                                      (v.size() - 1)));
    cdf.emplace_back(v[idx], static_cast<double>(idx + 1) / v.size());
  }
  return cdf;
}

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * (s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  if (s[lo] == s[hi]) return s[lo];
  return s[lo] + (s[hi] - s[lo]) * (pos - lo);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Stats compute_stats(const std::vector<double>& values) {
  Stats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.median = quantile_sorted(v, 0.5);
  s.p10 = quantile_sorted(v, 0.1);
  s.p90 = quantile_sorted(v, 0.9);
  s.min = v.front();
  s.max = v.back();
  return s;
}

void aggregate(Report& report, const std::string& axis, const std::vector<double>& axis_values) {
  auto collect = [](const std::vector<const EvalRecord*>& recs, Stratum& st) {
    std::vector<double> snri, input, sim;
    for (const auto* r : recs) {
      if (!r->ok) {
        ++st.failed;
        continue;
      }
      snri.push_back(r->si_snri_db);
      input.push_back(r->input_si_snr_db);
      if (r->enrollment_similarity) sim.push_back(*r->enrollment_similarity);
    }
    st.scenes = snri.size();
    st.si_snri_db = compute_stats(snri);
    st.input_si_snr_db = compute_stats(input);
    st.enrollment_similarity = compute_stats(sim);
  };

  std::vector<const EvalRecord*> all;
  std::vector<double> output, snri;
  for (const auto& r : report.records) {
    all.push_back(&r);
    if (r.ok) {
      output.push_back(r.output_si_snr_db);
      snri.push_back(r.si_snri_db);
    }
  }
  Stratum overall;
  collect(all, overall);
  report.failed = overall.failed;
  report.si_snri_db = overall.si_snri_db;
  report.input_si_snr_db = overall.input_si_snr_db;
  report.output_si_snr_db = compute_stats(output);
  report.enrollment_similarity = overall.enrollment_similarity;
  report.si_snri_cdf = make_cdf(snri);

  report.strata.clear();
  for (double v : axis_values) {
    std::vector<const EvalRecord*> sel;
    for (const auto& r : report.records) {
      const auto it = r.tags.find(axis);
      if (it != r.tags.end() && it->second == v) sel.push_back(&r);
    }
    Stratum st;
    st.axis = axis;
    st.value = v;
    collect(sel, st);
    report.strata.push_back(std::move(st));
  }
}

TimingSection timing_section(const std::string& label, const engine::ProfileResult& r,
                             const dsp::AudioParams& audio) {
  TimingSection t;
  t.label = label;
  t.include_cache_copy = r.include_cache_copy;
  t.state_bytes = r.state_bytes;
  const auto& s = r.summary;
  t.mean_ms = s.mean_ms;
  t.p50_ms = s.p50_ms;
  t.p95_ms = s.p95_ms;
  t.p99_ms = s.p99_ms;
  t.max_ms = s.max_ms;
  t.deadline_ms = s.deadline_ms;
  t.deadline_miss_fraction = s.deadline_miss_fraction;
  t.cdf = s.cdf;
  t.chunks = r.timings;
  const auto b = engine::latency_breakdown(audio, s);
  t.latency = {b.buffering_ms, b.lookahead_ms, b.processing_ms, b.total_ms(), b.reference_ms};
  return t;
}

std::map<std::string, std::string> environment_descriptor() {
  std::map<std::string, std::string> env;
  std::string cpu = "unknown";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto pos = line.find(':');
      if (pos != std::string::npos) cpu = line.substr(pos + 2);
      break;
    }
  }
  env["cpu"] = cpu;
  env["hardware_threads"] = std::to_string(std::thread::hardware_concurrency());
#ifdef __VERSION__
  env["compiler"] = __VERSION__;
#endif
  env["build_type"] = TSH_BUILD_TYPE;
  env["build_flags"] = TSH_BUILD_FLAGS;
  env["timing"] = "steady_clock, 50 warmup chunks discarded, profiler thread pinned to cpu 0";
  return env;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "md" || s == "markdown") return ReportFormat::Markdown;
  throw ConfigError("unknown report format '" + std::string(s) + "' (json, csv, md)");
}

std::string extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::Json: return ".json";
    case ReportFormat::Csv: return ".csv";
    case ReportFormat::Markdown: return ".md";
  }
  return ".json";
}

json to_json(const Report& r) {
  json records = json::array();
  for (const auto& rec : r.records) {
    json tags = json::object();
    for (const auto& [k, v] : rec.tags) tags[k] = num(v);
    records.push_back({{"scene_id", rec.scene_id},
                       {"ok", rec.ok},
                       {"error", rec.error},
                       {"input_si_snr_db", num(rec.input_si_snr_db)},
                       {"output_si_snr_db", num(rec.output_si_snr_db)},
                       {"si_snri_db", num(rec.si_snri_db)},
                       {"enrollment_similarity", rec.enrollment_similarity
                                                     ? num(*rec.enrollment_similarity)
                                                     : json(nullptr)},
                       {"tags", tags}});
  }
  json strata = json::array();
  for (const auto& s : r.strata) {
    strata.push_back({{"axis", s.axis},
                      {"value", num(s.value)},
                      {"scenes", s.scenes},
                      {"failed", s.failed},
                      {"si_snri_db", stats_json(s.si_snri_db)},
                      {"input_si_snr_db", stats_json(s.input_si_snr_db)},
                      {"enrollment_similarity", stats_json(s.enrollment_similarity)}});
  }
  json timings = json::array();
  for (const auto& t : r.timings) {
    json chunks = json::array();
    for (const auto& c : t.chunks) chunks.push_back({c.index, num(c.inference_ms), num(c.copy_ms)});
    timings.push_back({{"label", t.label},
                       {"include_cache_copy", t.include_cache_copy},
                       {"state_bytes", t.state_bytes},
                       {"mean_ms", num(t.mean_ms)},
                       {"p50_ms", num(t.p50_ms)},
                       {"p95_ms", num(t.p95_ms)},
                       {"p99_ms", num(t.p99_ms)},
                       {"max_ms", num(t.max_ms)},
                       {"deadline_ms", num(t.deadline_ms)},
                       {"deadline_miss_fraction", num(t.deadline_miss_fraction)},
                       {"cdf", cdf_json(t.cdf)},
                       {"chunks", chunks},
                       {"latency",
                        {{"buffering_ms", num(t.latency.buffering_ms)},
                         {"lookahead_ms", num(t.latency.lookahead_ms)},
                         {"processing_ms", num(t.latency.processing_ms)},
                         {"total_ms", num(t.latency.total_ms)},
                         {"reference_ms", num(t.latency.reference_ms)}}}});
  }
  return {{"schema_version", r.schema_version},
          {"kind", r.kind},
          {"estimator", r.estimator},
          {"environment", r.environment},
          {"records", records},
          {"aggregate",
           {{"si_snri_db", stats_json(r.si_snri_db)},
            {"input_si_snr_db", stats_json(r.input_si_snr_db)},
            {"output_si_snr_db", stats_json(r.output_si_snr_db)},
            {"enrollment_similarity", stats_json(r.enrollment_similarity)},
            {"failed", r.failed},
            {"si_snri_cdf", cdf_json(r.si_snri_cdf)}}},
          {"strata", strata},
          {"timings", timings}};
}

Report report_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ParseError("report must be a JSON object");
    Report r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
      throw ParseError("unsupported report schema version " + std::to_string(r.schema_version));
    }
    r.kind = j.at("kind").get<std::string>();
    if (r.kind != "eval" && r.kind != "sweep" && r.kind != "latency") {
      throw ParseError("unknown report kind '" + r.kind + "'");
    }
    r.estimator = j.at("estimator").get<std::string>();
    r.environment = j.at("environment").get<std::map<std::string, std::string>>();
    for (const auto& e : j.at("records")) {
      EvalRecord rec;
      rec.scene_id = e.at("scene_id").get<std::string>();
      rec.ok = e.at("ok").get<bool>();
      rec.error = e.at("error").get<std::string>();
      rec.input_si_snr_db = get_num(e.at("input_si_snr_db"));
      rec.output_si_snr_db = get_num(e.at("output_si_snr_db"));
      rec.si_snri_db = get_num(e.at("si_snri_db"));
      if (!e.at("enrollment_similarity").is_null()) {
        rec.enrollment_similarity = get_num(e.at("enrollment_similarity"));
      }
      for (const auto& [k, v] : e.at("tags").items()) rec.tags[k] = get_num(v);
      r.records.push_back(std::move(rec));
    }
    const auto& a = j.at("aggregate");
    r.si_snri_db = stats_from(a.at("si_snri_db"));
    r.input_si_snr_db = stats_from(a.at("input_si_snr_db"));
    r.output_si_snr_db = stats_from(a.at("output_si_snr_db"));
    r.enrollment_similarity = stats_from(a.at("enrollment_similarity"));
    r.failed = a.at("failed").get<std::size_t>();
    r.si_snri_cdf = cdf_from(a.at("si_snri_cdf"));
    for (const auto& e : j.at("strata")) {
      Stratum s;
      s.axis = e.at("axis").get<std::string>();
      s.value = get_num(e.at("value"));
      s.scenes = e.at("scenes").get<std::size_t>();
      s.failed = e.at("failed").get<std::size_t>();
      s.si_snri_db = stats_from(e.at("si_snri_db"));
      s.input_si_snr_db = stats_from(e.at("input_si_snr_db"));
      s.enrollment_similarity = stats_from(e.at("enrollment_similarity"));
      r.strata.push_back(std::move(s));
    }
    for (const auto& e : j.at("timings")) {
      TimingSection t;
      t.label = e.at("label").get<std::string>();
      t.include_cache_copy = e.at("include_cache_copy").get<bool>();
      t.state_bytes = e.at("state_bytes").get<std::size_t>();
      t.mean_ms = get_num(e.at("mean_ms"));
      t.p50_ms = get_num(e.at("p50_ms"));
      t.p95_ms = get_num(e.at("p95_ms"));
      t.p99_ms = get_num(e.at("p99_ms"));
      t.max_ms = get_num(e.at("max_ms"));
      t.deadline_ms = get_num(e.at("deadline_ms"));
      t.deadline_miss_fraction = get_num(e.at("deadline_miss_fraction"));
      t.cdf = cdf_from(e.at("cdf"));
      for (const auto& c : e.at("chunks")) {
        if (!c.is_array() || c.size() != 3) throw ParseError("chunk timing must be a triple");
        t.chunks.push_back({c[0].get<std::int64_t>(), get_num(c[1]), get_num(c[2])});
      }
      const auto& l = e.at("latency");
      t.latency = {get_num(l.at("buffering_ms")), get_num(l.at("lookahead_ms")),
                   get_num(l.at("processing_ms")), get_num(l.at("total_ms")),
                   get_num(l.at("reference_ms"))};
      r.timings.push_back(std::move(t));
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("report schema violation: ") + e.what());
  }
}

void validate_report_json(const json& j) {
  const Report r = report_from_json(j);
  for (const auto& rec : r.records) {
    if (rec.ok && rec.si_snri_db != rec.output_si_snr_db - rec.input_si_snr_db) {
      throw ParseError("record " + rec.scene_id + ": si_snri_db != output - input");
    }
  }
  std::size_t failed = 0;
  for (const auto& rec : r.records) failed += rec.ok ? 0 : 1;
  if (failed != r.failed) throw ParseError("aggregate failed count disagrees with records");
  if (r.kind == "latency" && r.timings.empty()) throw ParseError("latency report without timings");
}

std::string to_csv(const Report& r) {
  std::ostringstream os;
  if (r.kind == "latency") {
    os << "stratum,index,inference_ms,copy_ms,total_ms\n";
    for (const auto& t : r.timings) {
      for (const auto& c : t.chunks) {
        os << t.label << ',' << c.index << ',' << fmt("%.17g", c.inference_ms) << ','
           << fmt("%.17g", c.copy_ms) << ',' << fmt("%.17g", c.total_ms()) << '\n';
      }
    }
    return os.str();
  }
  os << "scene_id,status,input_si_snr_db,output_si_snr_db,si_snri_db,enrollment_similarity,tags,"
        "error\n";
  for (const auto& rec : r.records) {
    std::string tags;
    for (const auto& [k, v] : rec.tags) {
      if (!tags.empty()) tags += ';';
      tags += k + "=" + fmt("%.17g", v);
    }
    os << csv_escape(rec.scene_id) << ',' << (rec.ok ? "ok" : "error") << ','
       << fmt("%.17g", rec.input_si_snr_db) << ',' << fmt("%.17g", rec.output_si_snr_db) << ','
       << fmt("%.17g", rec.si_snri_db) << ','
       << (rec.enrollment_similarity ? fmt("%.17g", *rec.enrollment_similarity) : "") << ','
       << csv_escape(tags) << ',' << csv_escape(rec.error) << '\n';
  }
  return os.str();
}

std::string to_markdown(const Report& r) {
  std::ostringstream os;
  os << "# " << r.kind << " report\n\n";
  os << "schema_version: " << r.schema_version;
  if (!r.estimator.empty()) os << ", estimator: " << r.estimator;
  os << "\n\n";
  if (r.kind != "latency") {
    os << "| stratum | scenes | failed | mean SI-SNRi (dB) | median SI-SNRi (dB) | p10 (dB) | "
          "p90 (dB) | mean input SI-SNR (dB) | mean similarity |\n";
    os << "|---|---|---|---|---|---|---|---|---|\n";
    auto row = [&](const std::string& name, std::size_t scenes, std::size_t failed,
                   const Stats& snri, const Stats& input, const Stats& sim) {
      os << "| " << name << " | " << scenes << " | " << failed << " | "
         << fmt("%.3f", snri.mean) << " | " << fmt("%.3f", snri.median) << " | "
         << fmt("%.3f", snri.p10) << " | " << fmt("%.3f", snri.p90) << " | "
         << fmt("%.3f", input.mean) << " | "
         << (sim.count ? fmt("%.4f", sim.mean) : std::string("-")) << " |\n";
    };
    row("all", r.si_snri_db.count, r.failed, r.si_snri_db, r.input_si_snr_db,
        r.enrollment_similarity);
    for (const auto& s : r.strata) {
      row(s.axis + "=" + fmt("%g", s.value), s.scenes, s.failed, s.si_snri_db,
          s.input_si_snr_db, s.enrollment_similarity);
    }
    os << '\n';
  }
  if (!r.timings.empty()) {
    os << "| stratum | chunks | mean (ms) | p50 (ms) | p95 (ms) | p99 (ms) | deadline misses | "
          "buffering (ms) | lookahead (ms) | processing p95 (ms) | total (ms) | reference (ms) |\n";
    os << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& t : r.timings) {
      os << "| " << t.label << " | " << t.chunks.size() << " | " << fmt("%.3f", t.mean_ms)
         << " | " << fmt("%.3f", t.p50_ms) << " | " << fmt("%.3f", t.p95_ms) << " | "
         << fmt("%.3f", t.p99_ms) << " | " << fmt("%.4f", t.deadline_miss_fraction) << " | "
         << fmt("%.2f", t.latency.buffering_ms) << " | " << fmt("%.2f", t.latency.lookahead_ms)
         << " | " << fmt("%.3f", t.latency.processing_ms) << " | "
         << fmt("%.3f", t.latency.total_ms) << " | " << fmt("%.2f", t.latency.reference_ms)
         << " |\n";
    }
    os << '\n';
  }
  if (!r.environment.empty()) {
    os << "Environment:\n\n";
    for (const auto& [k, v] : r.environment) os << "- " << k << ": " << v << '\n';
  }
  return os.str();
}

void emit_report(const Report& r, ReportFormat format, const std::filesystem::path& path) {
  if (format == ReportFormat::Json) {
    io::write_json_file(path, to_json(r));
    return;
  }
  const std::string text = format == ReportFormat::Csv ? to_csv(r) : to_markdown(r);
  io::write_file_bytes(path,
                       std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Report load_report(const std::filesystem::path& json_path) {
  return report_from_json(io::read_json_file(json_path));
}

}  // namespace tsh::eval
