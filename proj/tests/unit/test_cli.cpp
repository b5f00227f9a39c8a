#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "oracles.hpp"
#include "tsh/engine/model.hpp"
#include "tsh/io/embedding_file.hpp"
#include "tsh/io/json_file.hpp"
#include "tsh/io/wav.hpp"

using namespace tsh;
namespace fs = std::filesystem;

namespace {

/// Runs the tsh binary with `args`; stdout and stderr go to `log`.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(TSH_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("cli exit codes") {
  const auto dir = test::temp_dir("cli_codes");
  const auto log = dir / "log.txt";
  io::write_wav(dir / "stereo.wav", test::random_stereo(20000, 1));
  io::write_wav(dir / "mono.wav", test::random_signal(20000, 1));

  CHECK(run_cli("model-info", log) == 0);
  CHECK(slurp(log).find("parameters: 2085721") != std::string::npos);
  CHECK(run_cli("", log) == 2);
  CHECK(run_cli("frobnicate", log) == 2);
  CHECK(run_cli("run --bogus-flag", log) == 2);
  CHECK(run_cli("model-info --chunk-ms 0", log) == 2);
  CHECK(run_cli("model-info --window-frames 0", log) == 2);
  CHECK(run_cli("--config " + (dir / "missing.json").string() + " model-info", log) == 2);

  std::ofstream(dir / "bad.json") << "{not json";
  CHECK(run_cli("--config " + (dir / "bad.json").string() + " model-info", log) == 2);

  CHECK(run_cli("enroll --in " + (dir / "nope.wav").string() + " --out " + (dir / "e.json").string(),
            log) == 3);
  CHECK(run_cli("enroll --in " + (dir / "mono.wav").string() + " --out " + (dir / "e.json").string(),
            log) == 3);
  CHECK(run_cli("enroll --in " + (dir / "stereo.wav").string() + " --out " +
                (dir / "e.json").string() + " --window-s -1",
            log) == 2);
  CHECK(run_cli("eval --dataset " + (dir / "no_dataset").string(), log) == 3);

  nlohmann::json spec = {{"id", "far"}, {"enrollment", {{"angle_error_deg", 20.0}}}};
  io::write_json_file(dir / "specs" / "far.json", spec);
  CHECK(run_cli("synth --out " + (dir / "ds").string() + " --specs " + (dir / "specs").string(), log) ==
        2);
  CHECK(slurp(log).find("18") != std::string::npos);

  std::ofstream(dir / "emb_bad.json") << "{\"dim\": 256}";
  CHECK(run_cli("run --in " + (dir / "stereo.wav").string() + " --embedding " +
                (dir / "emb_bad.json").string() + " --out " + (dir / "o.wav").string(),
            log) == 3);
}

TEST_CASE("cli weights must match flag overrides") {
  const auto dir = test::temp_dir("cli_weights");
  const auto log = dir / "log.txt";
  REQUIRE(run_cli("save-weights --seed 4 --out " + (dir / "w.json").string(), log) == 0);
  CHECK(run_cli("model-info --weights " + (dir / "w.json").string(), log) == 0);
  CHECK(run_cli("model-info --weights " + (dir / "w.json").string() + " --window-frames 20", log) == 2);
  CHECK(run_cli("model-info --weights " + (dir / "w.json").string() + " --window-frames 50", log) == 0);
  std::filesystem::resize_file(dir / "w.bin", 100);
  CHECK(run_cli("model-info --weights " + (dir / "w.json").string(), log) == 3);
}

TEST_CASE("cli run writes the streamed output delayed by the lookahead") {
  const auto dir = test::temp_dir("cli_run");
  const auto log = dir / "log.txt";
  const auto in = test::random_stereo(5000, 2);
  io::write_wav(dir / "mix.wav", in);
  io::write_wav(dir / "enroll.wav", test::random_stereo(24000, 3));
  REQUIRE(run_cli("enroll --in " + (dir / "enroll.wav").string() + " --out " +
                  (dir / "e.json").string(),
              log) == 0);
  const std::string run = "run --in " + (dir / "mix.wav").string() + " --embedding " +
                          (dir / "e.json").string() + " --seed 6 --out ";
  REQUIRE(run_cli(run + (dir / "a.wav").string(), log) == 0);
  REQUIRE(run_cli(run + (dir / "b.wav").string() + " --copy-state", log) == 0);

  const auto out = io::read_wav(dir / "a.wav");
  CHECK(out.spec.channels == 1);
  REQUIRE(out.frames() == 5000 + 64);
  CHECK(io::read_file_bytes(dir / "a.wav") == io::read_file_bytes(dir / "b.wav"));

  const auto model = engine::Model::from_seed(engine::ModelConfig{}, 6);
  const auto emb = io::load_embedding(dir / "e.json");
  const auto ref = engine::run_stream(model, in, model.condition(emb.embedding), true);
  CHECK(std::equal(out.mono().begin(), out.mono().end(), ref.begin()));

  const auto aligned = engine::extract_aligned(model, in, model.condition(emb.embedding));
  CHECK(std::equal(aligned.begin(), aligned.end(), out.mono().begin() + 64));
}
