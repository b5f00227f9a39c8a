#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tsh/dsp/metrics.hpp"
#include "tsh/dsp/noise.hpp"
#include "tsh/engine/model.hpp"
#include "tsh/enroll/enrollment.hpp"
#include "tsh/eval/eval.hpp"
#include "tsh/io/embedding_file.hpp"
#include "tsh/io/wav.hpp"

namespace py = pybind11;
using namespace tsh;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Mono to_mono(const FloatArray& a) {
  if (a.ndim() != 1) throw SizeMismatch("expected a 1-D array");
  return Mono(a.data(), a.data() + a.size());
}

/// Accepts (2, N) arrays.
BinauralBuffer to_stereo(const FloatArray& a) {
  if (a.ndim() != 2 || a.shape(0) != 2) throw SizeMismatch("expected a (2, N) array");
  const auto n = static_cast<std::size_t>(a.shape(1));
  return BinauralBuffer(Mono(a.data(), a.data() + n), Mono(a.data() + n, a.data() + 2 * n));
}

py::array_t<float> from_mono(const Mono& m) {
  return py::array_t<float>(std::vector<py::ssize_t>{static_cast<py::ssize_t>(m.size())}, m.data());
}

py::array_t<float> from_channels(const std::vector<Mono>& ch) {
  const auto n = ch.empty() ? 0 : ch.front().size();
  py::array_t<float> out({static_cast<py::ssize_t>(ch.size()), static_cast<py::ssize_t>(n)});
  for (std::size_t c = 0; c < ch.size(); ++c) {
    std::copy(ch[c].begin(), ch[c].end(), out.mutable_data() + c * n);
  }
  return out;
}

dsp::SpeakerEmbedding to_embedding(const FloatArray& a) {
  return dsp::SpeakerEmbedding::from_raw(to_mono(a));
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

engine::ModelConfig make_config(double chunk_ms, int window_frames) {
  engine::ModelConfig c;
  c.audio = dsp::AudioParams::from_chunk_ms(chunk_ms);
  c.attn_window = window_frames;
  c.validate();
  return c;
}

/// Chunk-by-chunk extraction bound to one model and embedding.
class Stream {
 public:
  Stream(std::shared_ptr<const engine::Model> model, const FloatArray& embedding, bool copy_state)
      : model_(std::move(model)),
        cond_(model_->condition(to_embedding(embedding))),
        state_(model_->make_state()),
        mode_(copy_state ? engine::StateUpdate::Copy : engine::StateUpdate::InPlace) {}

  py::array_t<float> push(const FloatArray& left, const FloatArray& right) {
    const Mono l = to_mono(left), r = to_mono(right);
    Mono out(static_cast<std::size_t>(model_->config().audio.hop_len));
    model_->process_chunk(state_, l, r, cond_, out, mode_);
    return from_mono(out);
  }
  void reset() { state_.reset(); }
  std::int64_t chunks() const { return state_.chunks_processed(); }

 private:
  std::shared_ptr<const engine::Model> model_;
  engine::Conditioning cond_;
  engine::StreamState state_;
  engine::StateUpdate mode_;
};

}  // namespace

PYBIND11_MODULE(pytsh, m) {
  m.doc() = "Streaming binaural target speech extraction";

  auto config_error = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericFault>(m, "NumericFault", PyExc_ArithmeticError);
  (void)config_error;

  m.attr("SAMPLE_RATE") = kSampleRate;
  m.attr("EMBEDDING_DIM") = dsp::kEmbeddingDim;
  m.attr("SNR_CAP_DB") = dsp::kSnrCapDb;

  m.def("si_snr",
        [](const FloatArray& est, const FloatArray& ref, bool zero_mean) {
          return dsp::si_snr(to_mono(est), to_mono(ref), {.zero_mean = zero_mean});
        },
        py::arg("estimate"), py::arg("reference"), py::arg("zero_mean") = true);
  m.def("snr", [](const FloatArray& est, const FloatArray& ref) {
    return dsp::snr(to_mono(est), to_mono(ref));
  }, py::arg("estimate"), py::arg("reference"));
  m.def("si_snr_improvement",
        [](const FloatArray& est, const FloatArray& mix, const FloatArray& ref) {
          return dsp::si_snr_improvement(to_mono(est), to_mono(mix), to_mono(ref));
        },
        py::arg("estimate"), py::arg("mixture"), py::arg("reference"));
  m.def("colored_noise",
        [](const std::string& kind, std::size_t n, std::uint64_t seed) {
          return from_mono(dsp::colored_noise(dsp::parse_noise_color(kind), n, seed));
        },
        py::arg("kind"), py::arg("n"), py::arg("seed"));

  m.def("read_wav", [](const std::filesystem::path& p) {
    return from_channels(io::read_wav(p).channels);
  }, py::arg("path"), "Returns a (channels, N) float32 array.");
  m.def("write_wav",
        [](const std::filesystem::path& p, const FloatArray& a, bool int16) {
          std::vector<Mono> ch;
          if (a.ndim() == 1) {
            ch.push_back(to_mono(a));
          } else {
            const auto b = to_stereo(a);
            ch = {b.left, b.right};
          }
          io::WavSpec spec{.channels = static_cast<int>(ch.size()),
                           .encoding = int16 ? io::WavEncoding::Int16 : io::WavEncoding::Float32};
          return io::write_wav(p, ch, spec).clipped;
        },
        py::arg("path"), py::arg("audio"), py::arg("int16") = false,
        "Writes mono (N,) or stereo (2, N) audio; returns the clipped sample count.");

  m.def("embed_enrollment",
        [](const FloatArray& stereo, double window_s, double hop_s) {
          const auto provider = enroll::default_spectral_provider();
          const auto e = enroll::embed_enrollment(to_stereo(stereo), *provider, window_s, hop_s);
          return from_mono(Mono(e.values().begin(), e.values().end()));
        },
        py::arg("stereo"), py::arg("window_s") = enroll::kDefaultWindowS,
        py::arg("hop_s") = enroll::kDefaultHopS);
  m.def("load_embedding", [](const std::filesystem::path& p) {
    const auto f = io::load_embedding(p);
    return py::make_tuple(from_mono(Mono(f.embedding.values().begin(), f.embedding.values().end())),
                          f.provider, f.source_hash);
  }, py::arg("path"), "Returns (values, provider, source_hash).");

  py::class_<engine::Model, std::shared_ptr<engine::Model>>(m, "Model")
      .def_static(
          "from_seed",
          [](std::uint64_t seed, double chunk_ms, int window_frames) {
            return std::make_shared<engine::Model>(
                engine::Model::from_seed(make_config(chunk_ms, window_frames), seed));
          },
          py::arg("seed") = 1, py::arg("chunk_ms") = 8.0, py::arg("window_frames") = 50)
      .def_static("load",
                  [](const std::filesystem::path& p) {
                    return std::make_shared<engine::Model>(
                        engine::Model::from_archive(engine::load_weight_archive(p)));
                  },
                  py::arg("manifest"))
      .def("save", [](const engine::Model& self, const std::filesystem::path& p) {
        engine::save_weight_archive(self.to_archive(), p);
      }, py::arg("manifest"))
      .def_property_readonly("parameter_count", &engine::Model::parameter_count)
      .def_property_readonly("config", [](const engine::Model& self) {
        return json_to_py(engine::to_json(self.config()));
      })
      .def_property_readonly("hop", [](const engine::Model& self) { return self.config().audio.hop_len; })
      .def_property_readonly("lookahead",
                             [](const engine::Model& self) { return self.config().audio.lookahead_len; })
      .def(
          "extract",
          [](const engine::Model& self, const FloatArray& stereo, const FloatArray& embedding) {
            const auto cond = self.condition(to_embedding(embedding));
            Mono out;
            {
              py::gil_scoped_release release;
              out = engine::extract_aligned(self, to_stereo(stereo), cond);
            }
            return from_mono(out);
          },
          py::arg("stereo"), py::arg("embedding"),
          "Streams the whole signal and returns N samples aligned with the input.")
      .def(
          "offline",
          [](const engine::Model& self, const FloatArray& stereo, const FloatArray& embedding) {
            return from_mono(
                self.offline_causal_forward(to_stereo(stereo), self.condition(to_embedding(embedding))));
          },
          py::arg("stereo"), py::arg("embedding"),
          "Offline causal forward on the streaming timeline.");

  py::class_<Stream>(m, "Stream")
      .def(py::init<std::shared_ptr<const engine::Model>, const FloatArray&, bool>(),
           py::arg("model"), py::arg("embedding"), py::arg("copy_state") = false)
      .def("push", &Stream::push, py::arg("left"), py::arg("right"),
           "Consumes one hop per ear and returns one hop of output.")
      .def("reset", &Stream::reset)
      .def_property_readonly("chunks", &Stream::chunks);

  m.def(
      "run_eval",
      [](const std::filesystem::path& dataset, const std::string& estimator,
         std::shared_ptr<const engine::Model> model, std::size_t max_scenes) {
        const auto provider = enroll::default_spectral_provider();
        eval::EvalContext ctx;
        ctx.estimator = eval::parse_estimator(estimator);
        ctx.model = model.get();
        ctx.provider = provider.get();
        eval::EvalOptions opts;
        opts.max_scenes = max_scenes;
        eval::Report r;
        {
          py::gil_scoped_release release;
          r = eval::run_eval(dataset, ctx, opts);
        }
        return json_to_py(eval::to_json(r));
      },
      py::arg("dataset"), py::arg("estimator") = "model", py::arg("model") = nullptr,
      py::arg("max_scenes") = 0, "Evaluates a scene dataset; returns the report as a dict.");
}
