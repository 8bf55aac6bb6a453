#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cli.hpp"

namespace fs = std::filesystem;
using namespace mbt::cli;
using nlohmann::json;

namespace
{
  struct Result
  {
    int code;
    std::string out, err;
  };

  const fs::path &scratch()
  {
    static const fs::path dir = [] {
      auto d = fs::temp_directory_path() / ("mbt_cli_test_" + std::to_string(::getpid()));
      fs::remove_all(d);
      fs::create_directories(d);
      return d;
    }();
    return dir;
  }

  Result invoke(std::vector<std::string> args, const std::string &input = "")
  {
    args.insert(args.begin(), "mbt");
    std::vector<char *> argv;
    for ( auto &a : args )
      argv.push_back(a.data());
    std::istringstream in(input);
    std::ostringstream out, err;
    const int code = main(static_cast<int>(argv.size()), argv.data(), in, out, err);
    return {code, out.str(), err.str()};
  }

  std::string slurp(const fs::path &p)
  {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f);
    return std::string(std::istreambuf_iterator<char>(f), {});
  }

  json read_json(const fs::path &p) { return json::parse(slurp(p)); }

  TrajectoryTable read_table(const fs::path &p)
  {
    std::ifstream f(p);
    REQUIRE(f);
    return read_trajectory_csv(f);
  }

  std::string write_file(const std::string &name, const std::string &text)
  {
    const auto p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
  }

  const std::string benchmark = MBT_CONFIG_DIR "/cj-benchmark-v1.toml";
  const std::string touch_preset = MBT_CONFIG_DIR "/market-making-touch.toml";
} // namespace

TEST_CASE("single trajectory rollout writes one row per step")
{
  const auto dir = scratch() / "roll1";
  const auto r = invoke({"--config", benchmark, "--out", dir.string(), "-n", "1", "rollout", "--agent", "cj"});
  REQUIRE(r.code == 0);
  const auto table = read_table(dir / "trajectories.csv");
  CHECK(table.rows.size() == 200);
  for ( const auto &name : {"trajectory", "step", "cash", "inventory", "time", "midprice", "action_depth_bid",
                            "action_depth_ask", "reward", "fill_bid", "fill_ask"} )
    CHECK_NOTHROW(table.column(name));
  CHECK(table.rows.back()[table.column("time")] == doctest::Approx(1.0));
  CHECK(table.rows.front()[table.column("step")] == 1.0);
  const auto summary = read_json(dir / "summary.json");
  CHECK(summary["episodes"] == 1);
  const auto manifest = read_json(dir / "manifest.json");
  CHECK(manifest["exit_code"] == 0);
  CHECK(manifest["command"] == "rollout");
  CHECK(manifest["version"] == kToolVersion);
}

TEST_CASE("CSV numbers round trip exactly")
{
  const auto dir = scratch() / "roundtrip";
  REQUIRE(invoke({"--config", benchmark, "--out", dir.string(), "-n", "3", "rollout", "--agent", "random"}).code == 0);
  const auto text = slurp(dir / "trajectories.csv");
  const auto table = read_table(dir / "trajectories.csv");
  CHECK(table.rows.size() == 600);
  std::ostringstream again;
  again << table.header[0];
  for ( std::size_t j = 1; j < table.header.size(); ++j )
    again << ',' << table.header[j];
  again << '\n';
  for ( const auto &row : table.rows ) {
    for ( std::size_t j = 0; j < row.size(); ++j )
      again << (j ? "," : "") << format_number(row[j]);
    again << '\n';
  }
  CHECK(again.str() == text);
  CHECK(std::stod(format_number(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("malformed trajectory CSV is rejected")
{
  std::istringstream bad_header("trajectory,step\n");
  CHECK_THROWS(read_trajectory_csv(bad_header));
  const auto dir = scratch() / "malformed";
  REQUIRE(invoke({"--config", benchmark, "--out", dir.string(), "-n", "1", "rollout", "--agent", "cj"}).code == 0);
  auto text = slurp(dir / "trajectories.csv");
  text.insert(text.find('\n') + 1, "0,1,abc\n");
  std::istringstream broken(text);
  CHECK_THROWS(read_trajectory_csv(broken));
}

TEST_CASE("rerunning from a manifest reproduces the outputs byte for byte")
{
  const auto first = scratch() / "first";
  const auto second = scratch() / "second";
  REQUIRE(invoke({"--seed", "11", "--config", benchmark, "--out", first.string(), "-n", "4", "rollout", "--agent",
                  "random"})
              .code == 0);
  const auto r = invoke({"--manifest", (first / "manifest.json").string(), "--out", second.string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(first / "trajectories.csv") == slurp(second / "trajectories.csv"));
  CHECK(slurp(first / "summary.json") == slurp(second / "summary.json"));
  CHECK(read_json(second / "manifest.json")["seed"] == 11);

  // A different seed changes the outputs.
  const auto third = scratch() / "third";
  REQUIRE(invoke({"--seed", "12", "--config", benchmark, "--out", third.string(), "-n", "4", "rollout", "--agent",
                  "random"})
              .code == 0);
  CHECK(slurp(first / "trajectories.csv") != slurp(third / "trajectories.csv"));

  // Rerunning into the manifest's own directory is refused.
  CHECK(invoke({"--manifest", (first / "manifest.json").string(), "--out", first.string()}).code == 2);
}

TEST_CASE("usage errors exit with code 2")
{
  const auto dir = (scratch() / "usage").string();
  const auto unknown = invoke({"--config", benchmark, "--out", dir, "rollout", "--agent", "telepathic"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("telepathic") != std::string::npos);
  CHECK(invoke({"--config", "/nonexistent.toml", "--out", dir, "rollout"}).code == 2);
  CHECK(invoke({"--config", benchmark, "--out", dir, "fly"}).code == 2);
  CHECK(invoke({"--config", benchmark, "--out", dir, "rollout", "--agent", "fixed_spread"}).code == 2);
}

TEST_CASE("config errors are reported with their lines")
{
  const auto path = write_file("bad.toml", "[env]\nterminal_time = 1.0\nn_steps = 0\nbogus = 1\n");
  const auto r = invoke({"--config", path, "--out", (scratch() / "bad").string(), "rollout"});
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.toml:3:") != std::string::npos);
  CHECK(r.err.find("bad.toml:4:") != std::string::npos);
}

TEST_CASE("evaluating the closed-form agent scores one")
{
  const auto config = write_file("eval.toml", slurp(benchmark) + "");
  const auto dir = scratch() / "eval";
  const auto r = invoke({"--config", config, "--out", dir.string(), "-n", "300", "evaluate", "--agent", "cj"});
  REQUIRE(r.code == 0);
  const auto e = read_json(dir / "eval.json");
  CHECK(e["episodes"] == 300);
  CHECK(e["normalized_score"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e["reference"].contains("best_half_spread"));
}

TEST_CASE("interactive play matches a fixed-spread rollout")
{
  std::string input;
  for ( int k = 0; k < 200; ++k )
    input += "1.0 1.0\n";
  const auto play = scratch() / "play";
  const auto roll = scratch() / "fixed";
  REQUIRE(invoke({"--config", benchmark, "--out", play.string(), "play"}, input).code == 0);
  REQUIRE(invoke({"--config", benchmark, "--out", roll.string(), "-n", "1", "rollout", "--agent", "fixed_spread",
                  "--half-spread", "1.0"})
              .code == 0);
  CHECK(slurp(play / "transcript.csv") == slurp(roll / "trajectories.csv"));
  const auto summary = read_json(play / "summary.json");
  CHECK(summary["complete"] == true);
  CHECK(summary["steps"] == 200);

  // Replaying the transcript as a schedule reproduces the final state.
  const auto replay = scratch() / "replay";
  REQUIRE(invoke({"--config", benchmark, "--out", replay.string(), "-n", "1", "rollout", "--agent", "schedule",
                  "--schedule", (play / "transcript.csv").string()})
              .code == 0);
  const auto a = read_table(play / "transcript.csv"), b = read_table(replay / "trajectories.csv");
  CHECK(a.rows.back()[a.column("cash")] == b.rows.back()[b.column("cash")]);
  CHECK(a.rows.back()[a.column("inventory")] == b.rows.back()[b.column("inventory")]);
}

TEST_CASE("interactive play re-prompts on bad input and stops at end of input")
{
  const auto dir = scratch() / "partial";
  const auto r = invoke({"--config", benchmark, "--out", dir.string(), "play"}, "abc\n1.0\n-1 1\n0.5 0.5\n0.7 0.7\n");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("invalid input") != std::string::npos);
  const auto table = read_table(dir / "transcript.csv");
  CHECK(table.rows.size() == 2);
  const auto summary = read_json(dir / "summary.json");
  CHECK(summary["complete"] == false);
  CHECK(summary["steps"] == 2);
}

TEST_CASE("touch mode accepts only binary posts")
{
  const auto dir = scratch() / "touch";
  const auto r = invoke({"--config", touch_preset, "--out", dir.string(), "play"}, "0.5 1\n2 0\n1 0\n");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("must be 0 or 1") != std::string::npos);
  const auto table = read_table(dir / "transcript.csv");
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0][table.column("action_post_bid")] == 1.0);
  CHECK(table.rows[0][table.column("action_post_ask")] == 0.0);
}

TEST_CASE("solve-cj, benchmark and a short training run")
{
  const auto cj = scratch() / "cj";
  REQUIRE(invoke({"--config", benchmark, "--out", cj.string(), "solve-cj"}).code == 0);
  CHECK(read_json(cj / "summary.json")["max_inventory"] == 10);

  const auto bench = scratch() / "bench";
  REQUIRE(invoke({"--config", benchmark, "--out", bench.string(), "benchmark", "--sizes", "1,10"}).code == 0);
  CHECK(fs::exists(bench / "benchmark.csv"));

  const auto config = write_file("train.toml", "[env]\nn_steps = 20\nmax_inventory = 10\n"
                                               "[arrival]\nmodel = \"poisson\"\nlambda_bid = 140\nlambda_ask = 140\n"
                                               "[midprice]\nmodel = \"brownian\"\ninitial_price = 100\nvolatility = 2\n"
                                               "[reward]\ntype = \"running_inventory_penalty\"\n"
                                               "per_step_inventory_aversion = 0.5\nterminal_inventory_aversion = 1\n"
                                               "[train]\nnum_trajectories = 20\nnum_updates = 4\neval_episodes = 50\n");
  const auto train = scratch() / "train";
  REQUIRE(invoke({"--config", config, "--out", train.string(), "train"}).code == 0);
  for ( const auto *name : {"learning_curve.csv", "policy.json", "depth_table.csv", "summary.json"} )
    CHECK(fs::exists(train / name));

  const auto eval = scratch() / "eval_policy";
  REQUIRE(invoke({"--config", config, "--out", eval.string(), "-n", "20", "evaluate", "--agent", "policy", "--policy",
                  (train / "policy.json").string()})
              .code == 0);
  CHECK(read_json(eval / "eval.json").contains("normalized_score"));
}
