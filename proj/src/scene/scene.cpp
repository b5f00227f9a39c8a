#include "tsh/scene/scene.hpp"

#include <algorithm>
#include <cmath>

#include "tsh/dsp/noise.hpp"

namespace tsh::scene {

namespace {

constexpr std::uint64_t kRoomSalt = 0x7f4a7c159e3779b9ULL;
constexpr std::uint64_t kSpeakerSalt = 0x94d049bb133111ebULL;
constexpr std::uint64_t kMixtureSalt = 0xbf58476d1ce4e5b9ULL;
constexpr std::uint64_t kEnrollSalt = 0x2545f4914f6cdd1dULL;

double energy(const BinauralBuffer& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    e += double(b.left[i]) * b.left[i] + double(b.right[i]) * b.right[i];
  }
  return e;
}

std::string resolve_room(const SceneSpec& spec, const BrirLibrary& library) {
  if (library.empty()) throw DataError("BRIR library is empty");
  if (!spec.room_id.empty()) {
    library.at(spec.room_id);  // throws when missing
    return spec.room_id;
  }
  const auto ids = library.room_ids();
  Rng rng(spec.seed ^ kRoomSalt);
  return ids[rng.index(ids.size())];
}

std::size_t draw_other_speaker(Rng& rng, std::size_t count, const std::vector<std::size_t>& taken) {
  if (count <= taken.size()) throw DataError("speech corpus has too few speakers for this scene");
  for (;;) {
    const std::size_t s = rng.index(count);
    if (std::find(taken.begin(), taken.end(), s) == taken.end()) return s;
  }
}

TrajectoryOptions options_for(const SourceSpec& src) {
  TrajectoryOptions o;
  o.azimuth_deg = src.azimuth_deg;
  o.polar_deg = src.polar_deg;
  if (src.speed_deg_s) {
    o.speed_min_deg_s = *src.speed_deg_s;
    o.speed_max_deg_s = *src.speed_deg_s;
  }
  return o;
}

struct PlannedSource {
  StemRole role;
  std::string name;
  Mono mono;  // full scene length
  std::size_t offset = 0;
  std::size_t length = 0;
  Trajectory trajectory;
};

PlannedSource plan_speech(Rng& rng, StemRole role, const SpeechCorpus& corpus, std::size_t speaker,
                          std::size_t n, std::optional<double> length_s, MotionMode mode,
                          const TrajectoryOptions& topts) {
  PlannedSource p;
  p.role = role;
  p.name = corpus.speaker_name(speaker);
  const double max_len_s = std::min(5.0, static_cast<double>(n) / kSampleRate);
  const double len_s = length_s ? *length_s : rng.uniform(std::min(2.0, max_len_s), max_len_s);
  p.length = std::min(n, static_cast<std::size_t>(std::lround(len_s * kSampleRate)));
  p.offset = rng.index(n - p.length + 1);
  const Mono utt = corpus.utterance(speaker, p.length, rng);
  p.mono.assign(n, 0.0f);
  std::copy(utt.begin(), utt.end(), p.mono.begin() + p.offset);
  p.trajectory = sample_trajectory(rng, static_cast<double>(n) / kSampleRate, mode, topts);
  return p;
}

RenderedScene render(const SceneSpec& spec, const BrirLibrary& library, const Corpora& corpora,
                     bool enrollment) {
  spec.validate();
  if (corpora.speech == nullptr || corpora.speech->speaker_count() == 0) {
    throw DataError("speech corpus is empty");
  }
  if (spec.noise_enabled && corpora.noise == nullptr) throw DataError("noise corpus missing");

  const std::string room = resolve_room(spec, library);
  const BrirSet& set = library.at(room);
  const SpeakerAssignment speakers = resolve_speakers(spec, *corpora.speech);

  Rng rng(spec.seed ^ (enrollment ? kEnrollSalt : kMixtureSalt));
  const double duration = enrollment ? spec.enrollment.duration_s : spec.duration_s;
  const auto n = static_cast<std::size_t>(std::lround(duration * kSampleRate));

  std::vector<PlannedSource> sources;
  if (enrollment) {
    TrajectoryOptions t;
    t.enrollment_error_deg = spec.enrollment.angle_error_deg;
    sources.push_back(plan_speech(rng, StemRole::Target, *corpora.speech, speakers.target, n,
                                  spec.enrollment.target_s, MotionMode::Enrollment, t));
    std::vector<std::size_t> taken{speakers.target};
    for (int i = 0; i < spec.enrollment.interferers; ++i) {
      const std::size_t spk = draw_other_speaker(rng, corpora.speech->speaker_count(), taken);
      taken.push_back(spk);
      const SourceSpec src = spec.interferers.empty()
                                 ? SourceSpec{}
                                 : spec.interferers[static_cast<std::size_t>(i) % spec.interferers.size()];
      sources.push_back(plan_speech(rng, StemRole::Interferer, *corpora.speech, spk, n,
                                    std::nullopt, src.motion, options_for(SourceSpec{
                                        -1, src.motion, src.azimuth_deg, src.polar_deg,
                                        src.speed_deg_s, std::nullopt})));
    }
  } else {
    sources.push_back(plan_speech(rng, StemRole::Target, *corpora.speech, speakers.target, n,
                                  spec.target.length_s, spec.target.motion,
                                  options_for(spec.target)));
    for (std::size_t i = 0; i < spec.interferers.size(); ++i) {
      const auto& src = spec.interferers[i];
      sources.push_back(plan_speech(rng, StemRole::Interferer, *corpora.speech,
                                    speakers.interferers[i], n, src.length_s, src.motion,
                                    options_for(src)));
    }
  }
  if (spec.noise_enabled) {
    PlannedSource p;
    p.role = StemRole::Noise;
    p.name = corpora.noise->name();
    p.length = n;
    p.mono = corpora.noise->noise(n, rng);
    p.trajectory = sample_trajectory(rng, static_cast<double>(n) / kSampleRate, spec.noise.motion,
                                     options_for(spec.noise));
    sources.push_back(std::move(p));
  }

  // Spatialise and set relative levels against the target.
  std::vector<BinauralBuffer> raw;
  raw.reserve(sources.size());
  for (const auto& s : sources) raw.push_back(render_moving_source(s.mono, s.trajectory, set));
  const double e_target = energy(raw[0]);
  std::vector<double> gains(sources.size(), 1.0);
  for (std::size_t k = 1; k < sources.size(); ++k) {
    double ratio_db;
    if (sources[k].role == StemRole::Interferer) {
      ratio_db = spec.sir_db ? *spec.sir_db : rng.uniform(-5.0, 5.0);
    } else {
      ratio_db = spec.tnr_db ? *spec.tnr_db : rng.uniform(0.0, 10.0);
    }
    const double e = energy(raw[k]);
    if (e > 0.0 && e_target > 0.0) gains[k] = std::sqrt(e_target / (e * std::pow(10.0, ratio_db / 10.0)));
  }

  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double l = 0.0, r = 0.0;
    for (std::size_t k = 0; k < raw.size(); ++k) {
      l += gains[k] * raw[k].left[i];
      r += gains[k] * raw[k].right[i];
    }
    peak = std::max({peak, std::abs(l), std::abs(r)});
  }
  const double scale = peak > 0.0 ? 0.5 / peak : 1.0;

  RenderedScene out;
  out.meta.id = spec.id;
  out.meta.seed = spec.seed;
  out.meta.room_id = room;
  out.meta.duration_s = duration;
  out.meta.scale = scale;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    BinauralBuffer stem(n);
    const double g = scale * gains[k];
    for (std::size_t i = 0; i < n; ++i) {
      stem.left[i] = static_cast<float>(g * raw[k].left[i]);
      stem.right[i] = static_cast<float>(g * raw[k].right[i]);
    }
    out.stems.push_back(std::move(stem));
    StemMeta m;
    m.role = sources[k].role;
    m.speaker = sources[k].name;
    m.offset = sources[k].offset;
    m.length = sources[k].length;
    m.gain = g;
    m.trajectory = std::move(sources[k].trajectory);
    out.meta.stems.push_back(std::move(m));
  }

  out.augmentation = BinauralBuffer(n);
  if (spec.augment) {
    auto& a = out.meta.augmentation;
    a.enabled = true;
    a.white_std = rng.uniform(0.0, 0.002);
    a.pink_scale = rng.uniform(0.0, 0.05);
    a.brown_scale = rng.uniform(0.0, 0.05);
    for (Mono* ch : {&out.augmentation.left, &out.augmentation.right}) {
      const auto w = dsp::colored_noise(dsp::NoiseColor::White, n, rng.fork());
      const auto p = dsp::colored_noise(dsp::NoiseColor::Pink, n, rng.fork());
      const auto b = dsp::colored_noise(dsp::NoiseColor::Brown, n, rng.fork());
      for (std::size_t i = 0; i < n; ++i) {
        (*ch)[i] = static_cast<float>(a.white_std * w[i] + a.pink_scale * p[i] + a.brown_scale * b[i]);
      }
    }
  }

  out.mixture = BinauralBuffer(n);
  for (std::size_t i = 0; i < n; ++i) {
    double l = out.augmentation.left[i], r = out.augmentation.right[i];
    for (const auto& s : out.stems) {
      l += s.left[i];
      r += s.right[i];
    }
    out.mixture.left[i] = static_cast<float>(l);
    out.mixture.right[i] = static_cast<float>(r);
  }
  out.target_gt = out.stems[0];
  return out;
}

std::optional<double> opt_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json source_json(const SourceSpec& s) {
  return {{"speaker", s.speaker},
          {"motion", to_string(s.motion)},
          {"azimuth_deg", opt_json(s.azimuth_deg)},
          {"polar_deg", opt_json(s.polar_deg)},
          {"speed_deg_s", opt_json(s.speed_deg_s)},
          {"length_s", opt_json(s.length_s)}};
}

SourceSpec source_from_json(const nlohmann::json& j) {
  SourceSpec s;
  if (!j.is_object()) throw ConfigError("source spec must be an object");
  s.speaker = j.value("speaker", -1);
  s.motion = parse_motion_mode(j.value("motion", std::string("static")));
  s.azimuth_deg = opt_number(j, "azimuth_deg");
  s.polar_deg = opt_number(j, "polar_deg");
  s.speed_deg_s = opt_number(j, "speed_deg_s");
  s.length_s = opt_number(j, "length_s");
  return s;
}

}  // namespace

std::string to_string(StemRole r) {
  switch (r) {
    case StemRole::Target: return "target";
    case StemRole::Interferer: return "interferer";
    case StemRole::Noise: return "noise";
  }
  return "target";
}

void SceneSpec::validate() const {
  if (!(duration_s > 0.0)) throw ConfigError("scene duration must be > 0");
  // Generated datasets always use 1-2 interferers; 0 is kept for diagnostics.
  if (interferers.size() > 2) {
    throw ConfigError("a scene has at most 2 interfering speakers (3 speech sources in total)");
  }
  if (!(enrollment.duration_s > 0.0)) throw ConfigError("enrollment duration must be > 0");
  if (enrollment.interferers < 0 || enrollment.interferers > 2) {
    throw ConfigError("enrollment interferer count must be 0-2");
  }
  if (enrollment.angle_error_deg < 0.0 || enrollment.angle_error_deg > kMaxEnrollmentErrorDeg) {
    throw ConfigError("enrollment angle error must be within [0, 18] deg");
  }
  for (const auto* len : {&target.length_s, &enrollment.target_s}) {
    if (*len && !(**len > 0.0)) throw ConfigError("speech length must be > 0");
  }
  if (target.motion == MotionMode::Enrollment) {
    throw ConfigError("mixture target cannot use enrollment motion");
  }
}

SpeakerAssignment resolve_speakers(const SceneSpec& spec, const SpeechCorpus& corpus) {
  Rng rng(spec.seed ^ kSpeakerSalt);
  const std::size_t count = corpus.speaker_count();
  SpeakerAssignment a;
  std::vector<std::size_t> taken;
  if (spec.target.speaker >= 0) {
    if (static_cast<std::size_t>(spec.target.speaker) >= count) {
      throw DataError("target speaker index out of range");
    }
    a.target = static_cast<std::size_t>(spec.target.speaker);
  } else {
    a.target = rng.index(count);
  }
  taken.push_back(a.target);
  for (const auto& src : spec.interferers) {
    std::size_t s;
    if (src.speaker >= 0) {
      if (static_cast<std::size_t>(src.speaker) >= count) {
        throw DataError("interferer speaker index out of range");
      }
      s = static_cast<std::size_t>(src.speaker);
    } else {
      s = draw_other_speaker(rng, count, taken);
    }
    taken.push_back(s);
    a.interferers.push_back(s);
  }
  return a;
}

RenderedScene compose_scene(const SceneSpec& spec, const BrirLibrary& library,
                            const Corpora& corpora) {
  return render(spec, library, corpora, false);
}

RenderedScene make_enrollment_scene(const SceneSpec& spec, const BrirLibrary& library,
                                    const Corpora& corpora) {
  return render(spec, library, corpora, true);
}

SceneSpec random_scene_spec(std::uint64_t seed, const std::string& id, bool moving) {
  Rng rng(seed);
  SceneSpec s;
  s.id = id;
  s.seed = rng.next_u64();
  const std::size_t interferers = rng.bernoulli(0.5) ? 1 : 2;
  const MotionMode mode = moving ? MotionMode::Moving : MotionMode::Static;
  s.target.motion = mode;
  s.interferers.assign(interferers, SourceSpec{});
  for (auto& i : s.interferers) i.motion = mode;
  s.noise.motion = mode;
  s.enrollment.interferers = static_cast<int>(interferers);
  return s;
}

nlohmann::json to_json(const SceneSpec& spec) {
  nlohmann::json interferers = nlohmann::json::array();
  for (const auto& i : spec.interferers) interferers.push_back(source_json(i));
  return {{"id", spec.id},
          {"seed", spec.seed},
          {"duration_s", spec.duration_s},
          {"room_id", spec.room_id.empty() ? nlohmann::json(nullptr) : nlohmann::json(spec.room_id)},
          {"target", source_json(spec.target)},
          {"interferers", interferers},
          {"noise", {{"enabled", spec.noise_enabled}, {"source", source_json(spec.noise)}}},
          {"augment", spec.augment},
          {"sir_db", opt_json(spec.sir_db)},
          {"tnr_db", opt_json(spec.tnr_db)},
          {"enrollment",
           {{"duration_s", spec.enrollment.duration_s},
            {"target_s", opt_json(spec.enrollment.target_s)},
            {"angle_error_deg", spec.enrollment.angle_error_deg},
            {"interferers", spec.enrollment.interferers}}}};
}

SceneSpec scene_spec_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ConfigError("scene spec must be a JSON object");
    SceneSpec s;
    s.id = j.value("id", std::string("scene"));
    s.seed = j.value("seed", std::uint64_t{0});
    s.duration_s = j.value("duration_s", 5.0);
    if (j.contains("room_id") && !j.at("room_id").is_null()) s.room_id = j.at("room_id").get<std::string>();
    if (j.contains("target")) s.target = source_from_json(j.at("target"));
    if (j.contains("interferers")) {
      s.interferers.clear();
      for (const auto& i : j.at("interferers")) s.interferers.push_back(source_from_json(i));
    }
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      s.noise_enabled = n.value("enabled", true);
      if (n.contains("source")) s.noise = source_from_json(n.at("source"));
    }
    s.augment = j.value("augment", true);
    s.sir_db = opt_number(j, "sir_db");
    s.tnr_db = opt_number(j, "tnr_db");
    if (j.contains("enrollment")) {
      const auto& e = j.at("enrollment");
      s.enrollment.duration_s = e.value("duration_s", 5.0);
      s.enrollment.target_s = opt_number(e, "target_s");
      s.enrollment.angle_error_deg = e.value("angle_error_deg", kMaxEnrollmentErrorDeg);
      s.enrollment.interferers = e.value("interferers", 1);
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid scene spec: ") + e.what());
  }
}

nlohmann::json to_json(const Trajectory& t) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : t.events) {
    events.push_back({{"step", e.step},
                      {"hold_steps", e.hold_steps},
                      {"azimuth_velocity_deg_s", e.azimuth_velocity_deg_s},
                      {"polar_velocity_deg_s", e.polar_velocity_deg_s}});
  }
  return {{"step_s", t.step_s},
          {"azimuth_deg", t.azimuth_deg},
          {"polar_deg", t.polar_deg},
          {"events", events}};
}

nlohmann::json to_json(const SceneMeta& meta) {
  nlohmann::json stems = nlohmann::json::array();
  for (const auto& s : meta.stems) {
    stems.push_back({{"role", to_string(s.role)},
                     {"speaker", s.speaker},
                     {"offset", s.offset},
                     {"length", s.length},
                     {"gain", s.gain},
                     {"trajectory", to_json(s.trajectory)}});
  }
  return {{"id", meta.id},
          {"seed", meta.seed},
          {"room_id", meta.room_id},
          {"duration_s", meta.duration_s},
          {"scale", meta.scale},
          {"stems", stems},
          {"augmentation",
           {{"enabled", meta.augmentation.enabled},
            {"white_std", meta.augmentation.white_std},
            {"pink_scale", meta.augmentation.pink_scale},
            {"brown_scale", meta.augmentation.brown_scale}}}};
}

}  // namespace tsh::scene
