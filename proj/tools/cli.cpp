#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "mbt/agents.hpp"
#include "mbt/cartea_jaimungal.hpp"
#include "mbt/config_io.hpp"
#include "mbt/environment.hpp"
#include "mbt/errors.hpp"
#include "mbt/learn.hpp"

namespace mbt::cli
{

  using nlohmann::json;
  namespace fs = std::filesystem;

  namespace
  {
    constexpr std::uint64_t kAgentTag = 0x6167656e74ull;
    constexpr std::size_t kRolloutChunk = 1000;
    const std::vector<std::string> kFlagFields{"arrival_bid", "arrival_ask", "fill_bid", "fill_ask", "mo_buy", "mo_sell"};

    std::string read_file(const std::string &path, const char *what)
    {
      std::ifstream in(path, std::ios::binary);
      if ( !in )
        throw UsageError(std::string("cannot read ") + what + " file '" + path + "'");
      std::ostringstream buf;
      buf << in.rdbuf();
      return buf.str();
    }

    std::string utc_now()
    {
      const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      std::tm tm{};
      gmtime_r(&now, &tm);
      std::ostringstream out;
      out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
      return out.str();
    }

    /// Output directory bookkeeping: files written, then the manifest.
    class OutputDir
    {
    public:
      explicit OutputDir(const std::string &path) : root_(path) { fs::create_directories(root_); }

      std::ofstream open(const std::string &name)
      {
        files_.push_back(name);
        std::ofstream f(root_ / name, std::ios::binary);
        if ( !f )
          throw std::runtime_error("cannot write '" + (root_ / name).string() + "'");
        return f;
      }

      void write_json(const std::string &name, const json &j)
      {
        auto f = open(name);
        f << j.dump(2) << '\n';
      }

      const std::vector<std::string> &files() const { return files_; }
      const fs::path &root() const { return root_; }

    private:
      fs::path root_;
      std::vector<std::string> files_;
    };

    RunConfig resolve_config(const Options &o, const Inputs &in)
    {
      if ( in.config.empty() && o.config_path.empty() )
        throw UsageError("--config is required");
      auto rc = parse_config(in.config, in.config_name);
      if ( o.seed ) {
        rc.env.master_seed = *o.seed;
        rc.train.seed = *o.seed;
      }
      return rc;
    }

    // --- agents ------------------------------------------------------------------

    /// Replays the action columns of a trajectory CSV, one row per step.
    class ScheduleAgent final : public Agent
    {
    public:
      ScheduleAgent(std::vector<std::vector<double>> steps, std::size_t time_index)
          : steps_(std::move(steps)), time_index_(time_index)
      {
        if ( steps_.empty() )
          throw UsageError("schedule has no rows");
      }

      void act(const ObservationBatch &obs, std::span<double> actions) override
      {
        const std::size_t d = action_dim();
        if ( actions.size() != obs.width * d )
          throw std::invalid_argument("schedule action width does not match the environment");
        if ( obs.width > 0 && obs.at(0, time_index_) == 0.0 )
          next_ = 0;
        if ( next_ >= steps_.size() )
          throw std::invalid_argument("schedule has fewer rows than the episode has steps");
        for ( std::size_t i = 0; i < obs.width; ++i )
          std::copy(steps_[next_].begin(), steps_[next_].end(), actions.begin() + static_cast<std::ptrdiff_t>(i * d));
        ++next_;
      }
      std::size_t action_dim() const override { return steps_.front().size(); }
      std::string name() const override { return "schedule"; }

    private:
      std::vector<std::vector<double>> steps_;
      std::size_t time_index_;
      std::size_t next_ = 0;
    };

    /// Owns an agent together with whatever it refers to.
    struct AgentBox
    {
      std::unique_ptr<GaussianPolicy> policy;
      std::unique_ptr<Agent> agent;
      std::string label;
    };

    const std::vector<std::string> kAgentNames{"random", "fixed_action", "fixed_spread", "avellaneda_stoikov",
                                               "cj", "policy", "schedule"};

    std::string agent_label(const AgentSpec &spec)
    {
      static const char *names[] = {"random", "fixed_action", "fixed_spread", "avellaneda_stoikov", "cj"};
      return names[spec.index()];
    }

    AgentBox build_agent(const Options &o, const Inputs &in, const RunConfig &rc, const EnvironmentConfig &env)
    {
      AgentBox box;
      const std::uint64_t seed = derive_seed(env.master_seed, kAgentTag);
      std::string name = o.agent;
      if ( name.empty() )
        name = rc.agent ? agent_label(*rc.agent) : "random";
      if ( std::find(kAgentNames.begin(), kAgentNames.end(), name) == kAgentNames.end() ) {
        std::string list;
        for ( const auto &n : kAgentNames )
          list += (list.empty() ? "" : ", ") + n;
        throw UsageError("unknown agent '" + name + "' (expected one of: " + list + ")");
      }
      box.label = name;

      if ( name == "policy" ) {
        if ( in.policy.empty() )
          throw UsageError("agent 'policy' needs --policy <policy.json>");
        box.policy = std::make_unique<GaussianPolicy>(policy_from_json(in.policy));
        if ( box.policy->action_dim() != action_dim(env.action_type) )
          throw UsageError("policy action dimension does not match the environment");
        box.agent = std::make_unique<PolicyAgent>(*box.policy, seed, true);
        return box;
      }
      if ( name == "schedule" ) {
        if ( in.schedule.empty() )
          throw UsageError("agent 'schedule' needs --schedule <trajectories.csv>");
        std::istringstream csv(in.schedule);
        const auto table = read_trajectory_csv(csv);
        const auto fields = action_fields(action_dim(env.action_type), env.action_type == ActionType::touch);
        std::vector<std::size_t> cols;
        for ( const auto &f : fields )
          cols.push_back(table.column(f));
        const std::size_t traj = table.column("trajectory");
        std::vector<std::vector<double>> steps;
        for ( const auto &row : table.rows ) {
          if ( row[traj] != 0.0 )
            continue;
          std::vector<double> a;
          for ( auto c : cols )
            a.push_back(row[c]);
          steps.push_back(std::move(a));
        }
        box.agent = std::make_unique<ScheduleAgent>(std::move(steps), field_index(observation_layout(env), "time"));
        return box;
      }

      const bool from_section = rc.agent && agent_label(*rc.agent) == name;
      AgentSpec spec;
      if ( name == "random" ) {
        spec = from_section ? *rc.agent : AgentSpec{RandomSpec{}};
      } else if ( name == "fixed_action" ) {
        if ( !o.action.empty() )
          spec = FixedActionSpec{o.action};
        else if ( from_section )
          spec = *rc.agent;
        else
          throw UsageError("agent 'fixed_action' needs --action a,b[,...]");
      } else if ( name == "fixed_spread" ) {
        if ( o.half_spread )
          spec = FixedSpreadSpec{*o.half_spread};
        else if ( from_section )
          spec = *rc.agent;
        else
          throw UsageError("agent 'fixed_spread' needs --half-spread <depth>");
      } else if ( name == "avellaneda_stoikov" ) {
        spec = from_section ? *rc.agent : AgentSpec{AvellanedaStoikovSpec{}};
      } else {
        spec = CarteaJaimungalSpec{};
      }
      box.agent = make_agent(spec, env, seed);
      return box;
    }

    // --- CSV helpers -------------------------------------------------------------

    void append_number(std::string &line, double x)
    {
      line += format_number(x);
    }

    std::string join(const std::vector<std::string> &xs)
    {
      std::string s;
      for ( std::size_t i = 0; i < xs.size(); ++i )
        s += (i ? "," : "") + xs[i];
      return s;
    }

    std::vector<std::string> layout_names(const std::vector<FieldDescriptor> &layout)
    {
      std::vector<std::string> names;
      for ( const auto &f : layout )
        names.push_back(f.name);
      return names;
    }

    /// Append one CSV row for trajectory slot i after a step.
    void append_row(std::string &line, std::size_t traj_id, int step, const Environment &env, std::size_t i,
                    std::span<const double> actions, double reward)
    {
      line += std::to_string(traj_id);
      line += ',';
      line += std::to_string(step);
      const auto obs = env.observations();
      const std::size_t od = env.obs_dim();
      for ( std::size_t c = 0; c < od; ++c ) {
        line += ',';
        append_number(line, obs[i * od + c]);
      }
      const std::size_t ad = env.action_dim();
      for ( std::size_t c = 0; c < ad; ++c ) {
        line += ',';
        append_number(line, actions[i * ad + c]);
      }
      line += ',';
      append_number(line, reward);
      const auto &info = env.info();
      for ( const auto *flags : {&info.arrival_bid, &info.arrival_ask, &info.fill_bid, &info.fill_ask, &info.market_buy,
                                 &info.market_sell} ) {
        line += ',';
        line += (*flags)[i] ? '1' : '0';
      }
      line += '\n';
    }

    double mean_of(const std::vector<double> &xs)
    {
      double s = 0.0;
      for ( double x : xs )
        s += x;
      return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
    }

    double std_error_of(const std::vector<double> &xs, double mean)
    {
      if ( xs.size() < 2 )
        return 0.0;
      double s = 0.0;
      for ( double x : xs )
        s += (x - mean) * (x - mean);
      return std::sqrt(s / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    }

    std::optional<ReferenceScores> try_reference_scores(const EnvironmentConfig &env, std::size_t n,
                                                        std::uint64_t eval_seed)
    {
      try {
        cj_params_from_config(env);
      } catch ( const ConfigError & ) {
        return std::nullopt;
      }
      return reference_scores(env, n, eval_seed);
    }

    json reference_json(const ReferenceScores &ref)
    {
      return json{{"cj", ref.cj}, {"best_fixed", ref.best_fixed}, {"best_half_spread", ref.best_half_spread}};
    }

    // --- commands ----------------------------------------------------------------

    int cmd_rollout(const Options &o, const Inputs &in, OutputDir &dir, std::ostream &out)
    {
      const auto rc = resolve_config(o, in);
      EnvironmentConfig env_cfg = rc.env;
      if ( o.n_trajectories )
        env_cfg.num_trajectories = *o.n_trajectories;
      const std::size_t total = env_cfg.num_trajectories;
      auto box = build_agent(o, in, rc, env_cfg);

      std::ofstream csv;
      if ( !o.summary_only ) {
        csv = dir.open("trajectories.csv");
        const auto layout = observation_layout(env_cfg);
        csv << join(trajectory_header(layout_names(layout), action_fields(action_dim(env_cfg.action_type),
                                                                          env_cfg.action_type == ActionType::touch)))
            << '\n';
      }

      std::vector<double> totals;
      totals.reserve(total);
      for ( std::size_t offset = 0; offset < total; offset += kRolloutChunk ) {
        EnvironmentConfig cfg = env_cfg;
        cfg.num_trajectories = std::min(kRolloutChunk, total - offset);
        Environment env(cfg, offset);
        env.reset();
        const std::size_t w = env.width();
        std::vector<double> actions(w * env.action_dim());
        std::vector<double> sums(w, 0.0);
        std::vector<std::string> rows(o.summary_only ? 0 : w);
        while ( !env.finished() ) {
          box.agent->act(observe(env), actions);
          const auto view = env.step(actions);
          for ( std::size_t i = 0; i < w; ++i ) {
            sums[i] += view.rewards[i];
            if ( !o.summary_only )
              append_row(rows[i], offset + i, env.step_index(), env, i, actions, view.rewards[i]);
          }
        }
        for ( const auto &r : rows )
          csv << r;
        totals.insert(totals.end(), sums.begin(), sums.end());
      }

      const double m = mean_of(totals);
      const json summary{{"agent", box.label},
                         {"episodes", totals.size()},
                         {"n_steps", env_cfg.n_steps},
                         {"mean_reward", m},
                         {"std_error", std_error_of(totals, m)}};
      dir.write_json("summary.json", summary);
      out << "rollout: " << totals.size() << " episodes, mean reward " << m << '\n';
      return exit_ok;
    }

    double time_batch(const EnvironmentConfig &cfg, Agent &agent)
    {
      Environment env(cfg);
      const auto start = std::chrono::steady_clock::now();
      episode_returns(env, agent, 0);
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    std::size_t loop_threads()
    {
      if ( const char *s = std::getenv("MBT_THREADS") ) {
        const long v = std::strtol(s, nullptr, 10);
        if ( v >= 1 )
          return static_cast<std::size_t>(v);
      }
      return 1;
    }

    int cmd_benchmark(const Options &o, const Inputs &in, OutputDir &dir, std::ostream &out)
    {
      const auto rc = resolve_config(o, in);
      static const std::set<std::size_t> allowed{1, 10, 100, 1000, 10000};
      std::vector<std::size_t> sizes = o.sizes;
      if ( o.n_trajectories )
        sizes = {*o.n_trajectories};
      for ( auto n : sizes )
        if ( !allowed.count(n) )
          throw UsageError("benchmark sizes must be drawn from {1, 10, 100, 1000, 10000}, got " + std::to_string(n));

      const std::size_t threads = loop_threads();
      json results = json::array();
      auto csv = dir.open("benchmark.csv");
      csv << "n,vectorized_seconds,looped_seconds,speedup\n";
      for ( auto n : sizes ) {
        EnvironmentConfig wide = rc.env;
        wide.num_trajectories = n;
        auto agent = build_agent(o, in, rc, wide);
        double vectorized = time_batch(wide, *agent.agent);
        for ( int r = 0; r < 2; ++r )
          vectorized = std::min(vectorized, time_batch(wide, *agent.agent));

        EnvironmentConfig narrow = rc.env;
        narrow.num_trajectories = 1;
        const std::size_t workers = std::min(threads, n);
        const auto start = std::chrono::steady_clock::now();
        auto work = [&](std::size_t worker) {
          auto local = build_agent(o, in, rc, narrow);
          for ( std::size_t i = worker; i < n; i += workers ) {
            Environment env(narrow, i);
            episode_returns(env, *local.agent, 0);
          }
        };
        if ( workers == 1 ) {
          work(0);
        } else {
          std::vector<std::thread> pool;
          for ( std::size_t w = 0; w < workers; ++w )
            pool.emplace_back(work, w);
          for ( auto &t : pool )
            t.join();
        }
        const double looped = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const double speedup = looped / vectorized;
        results.push_back(
            {{"n", n}, {"vectorized_seconds", vectorized}, {"looped_seconds", looped}, {"speedup", speedup}});
        csv << n << ',' << format_number(vectorized) << ',' << format_number(looped) << ',' << format_number(speedup)
            << '\n';
        out << "n=" << n << ": vectorized " << vectorized << " s, looped " << looped << " s, speedup " << speedup
            << "x\n";
      }
      dir.write_json("benchmark.json",
                     json{{"n_steps", rc.env.n_steps}, {"loop_threads", threads}, {"results", results}});
      return exit_ok;
    }

    int cmd_train(const Options &o, const Inputs &in, OutputDir &dir, std::ostream &out)
    {
      const auto rc = resolve_config(o, in);
      TrainConfig tc = rc.train;
      if ( o.n_trajectories )
        tc.num_trajectories = *o.n_trajectories;
      const auto result = train(rc.env, tc);

      {
        auto csv = dir.open("learning_curve.csv");
        csv << "update,seconds,mean_reward,std_reward,eval_mean\n";
        for ( const auto &p : result.curve )
          csv << p.update << ',' << format_number(p.seconds) << ',' << format_number(p.mean_reward) << ','
              << format_number(p.std_reward) << ',' << (p.eval_mean ? format_number(*p.eval_mean) : "") << '\n';
      }
      {
        auto f = dir.open("policy.json");
        f << policy_to_json(result.policy) << '\n';
      }
      {
        const int qmax = rc.env.max_inventory;
        auto csv = dir.open("depth_table.csv");
        csv << "time,inventory,depth_bid,depth_ask\n";
        for ( int k = 0; k <= 4; ++k ) {
          const double t = rc.env.terminal_time * k / 4.0;
          for ( int q = -std::min(qmax, 10); q <= std::min(qmax, 10); ++q ) {
            csv << format_number(t) << ',' << q;
            for ( std::size_t j = 0; j < result.policy.action_dim(); ++j )
              csv << ',' << format_number(std::clamp(result.policy.mean(q, t, j), 0.0, result.policy.max_action()));
            csv << '\n';
          }
        }
      }

      PolicyAgent greedy(result.policy, 0, true);
      const auto eval_seed = evaluation_seed(rc.env);
      auto report = evaluate(rc.env, greedy, tc.eval_episodes, eval_seed);
      json summary{{"updates_run", result.curve.size()},
                   {"num_trajectories", tc.num_trajectories},
                   {"random_baseline", result.random_baseline},
                   {"diverged", result.diverged},
                   {"message", result.message},
                   {"eval_episodes", report.episodes},
                   {"eval_mean", report.mean},
                   {"eval_std_error", report.std_error}};
      if ( const auto ref = try_reference_scores(rc.env, tc.eval_episodes, eval_seed) ) {
        summary["normalized_score"] = normalized_score(report.mean, *ref);
        summary["reference"] = reference_json(*ref);
      }
      dir.write_json("summary.json", summary);
      out << "train: " << result.curve.size() << " updates, evaluation mean " << report.mean;
      if ( summary.contains("normalized_score") )
        out << ", normalized score " << summary["normalized_score"].get<double>();
      out << '\n';
      if ( result.diverged ) {
        out << "training diverged: " << result.message << '\n';
        return exit_numerical;
      }
      return exit_ok;
    }

    int cmd_evaluate(const Options &o, const Inputs &in, OutputDir &dir, std::ostream &out)
    {
      const auto rc = resolve_config(o, in);
      const std::size_t n = o.n_trajectories ? *o.n_trajectories : rc.train.eval_episodes;
      auto box = build_agent(o, in, rc, rc.env);
      const auto eval_seed = evaluation_seed(rc.env);
      auto report = evaluate(rc.env, *box.agent, n, eval_seed);
      json summary{{"agent", box.label}, {"episodes", report.episodes}, {"mean", report.mean},
                   {"std_error", report.std_error}};
      if ( const auto ref = try_reference_scores(rc.env, n, eval_seed) ) {
        report.normalized_score = normalized_score(report.mean, *ref);
        summary["normalized_score"] = *report.normalized_score;
        summary["reference"] = reference_json(*ref);
      }
      dir.write_json("eval.json", summary);
      out << "evaluate " << box.label << ": mean " << report.mean << " +/- " << report.std_error;
      if ( report.normalized_score )
        out << ", normalized score " << *report.normalized_score;
      out << '\n';
      return exit_ok;
    }

    int cmd_solve_cj(const Options &o, const Inputs &in, OutputDir &dir, std::ostream &out)
    {
      const auto rc = resolve_config(o, in);
      const auto solution = cj_solve(cj_params_from_config(rc.env));
      {
        auto csv = dir.open("cj.csv");
        write_cj_csv(solution, csv);
      }
      const auto q0 = cj_quotes(solution, 0, 0.0);
      dir.write_json("summary.json", json{{"max_inventory", solution.max_inventory()},
                                          {"n_steps", solution.params().n_steps},
                                          {"refinement", solution.params().refinement},
                                          {"depth_bid_t0_q0", q0.bid},
                                          {"depth_ask_t0_q0", q0.ask}});
      out << "solve-cj: wrote " << (dir.root() / "cj.csv").string() << '\n';
      return exit_ok;
    }

    /// Parse one line of human input into an action, or explain the problem.
    std::optional<std::string> parse_action(const std::string &line, ActionType type, std::vector<double> &action)
    {
      std::istringstream words(line);
      std::vector<std::string> tokens;
      for ( std::string w; words >> w; )
        tokens.push_back(w);
      const std::size_t d = action_dim(type);
      if ( tokens.size() != d )
        return "expected " + std::to_string(d) + " values, got " + std::to_string(tokens.size());
      action.assign(d, 0.0);
      for ( std::size_t j = 0; j < d; ++j ) {
        const auto &t = tokens[j];
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if ( ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v) )
          return "'" + t + "' is not a number";
        const bool binary = type == ActionType::touch || j >= 2;
        if ( binary && v != 0.0 && v != 1.0 )
          return "'" + t + "' must be 0 or 1";
        if ( !binary && v < 0.0 )
          return "depths must be >= 0";
        action[j] = v;
      }
      return std::nullopt;
    }

    int cmd_play(const Options &o, const Inputs &in, OutputDir &dir, std::istream &input, std::ostream &out)
    {
      const auto rc = resolve_config(o, in);
      EnvironmentConfig cfg = rc.env;
      cfg.num_trajectories = 1;
      Environment env(cfg);
      env.reset();
      const auto fields = action_fields(env.action_dim(), cfg.action_type == ActionType::touch);
      const std::size_t ci = field_index(env.layout(), "cash");
      const std::size_t qi = field_index(env.layout(), "inventory");
      const std::size_t ti = field_index(env.layout(), "time");
      const std::size_t si = field_index(env.layout(), "midprice");

      std::string rows;
      double total = 0.0;
      bool complete = true;
      out << "market-making session: " << cfg.n_steps << " steps, enter " << join(fields)
          << " separated by spaces (end of input stops)\n";
      std::vector<double> action;
      while ( !env.finished() ) {
        const auto obs = env.observations();
        out << "t=" << obs[ti] << " S=" << obs[si] << " X=" << obs[ci] << " Q=" << obs[qi];
        if ( env.step_index() > 0 )
          out << " last fills: bid=" << int(env.info().fill_bid[0]) << " ask=" << int(env.info().fill_ask[0]);
        out << '\n';
        std::string line;
        bool got = false;
        while ( true ) {
          out << "[step " << env.step_index() + 1 << "/" << cfg.n_steps << "] > " << std::flush;
          if ( !std::getline(input, line) )
            break;
          if ( auto problem = parse_action(line, cfg.action_type, action) ) {
            out << "invalid input: " << *problem << '\n';
            continue;
          }
          got = true;
          break;
        }
        if ( !got ) {
          complete = false;
          out << "\ninput ended after " << env.step_index() << " steps\n";
          break;
        }
        const auto view = env.step(action);
        total += view.rewards[0];
        append_row(rows, 0, env.step_index(), env, 0, action, view.rewards[0]);
      }

      {
        auto csv = dir.open("transcript.csv");
        csv << join(trajectory_header(layout_names(env.layout()), fields)) << '\n' << rows;
      }
      dir.write_json("summary.json", json{{"steps", env.step_index()},
                                          {"complete", complete},
                                          {"final_cash", env.cash()[0]},
                                          {"final_inventory", env.inventory()[0]},
                                          {"total_reward", total}});
      out << "final: X=" << env.cash()[0] << " Q=" << env.inventory()[0] << " total reward=" << total << '\n';
      return exit_ok;
    }
  } // namespace

  // --- public helpers ------------------------------------------------------------

  std::string format_number(double x)
  {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
  }

  std::vector<std::string> action_fields(std::size_t action_dim, bool touch)
  {
    if ( touch )
      return {"action_post_bid", "action_post_ask"};
    std::vector<std::string> f{"action_depth_bid", "action_depth_ask"};
    if ( action_dim == 4 ) {
      f.push_back("action_market_buy");
      f.push_back("action_market_sell");
    }
    return f;
  }

  std::vector<std::string> trajectory_header(const std::vector<std::string> &obs_fields,
                                             const std::vector<std::string> &action_fields)
  {
    std::vector<std::string> h{"trajectory", "step"};
    h.insert(h.end(), obs_fields.begin(), obs_fields.end());
    h.insert(h.end(), action_fields.begin(), action_fields.end());
    h.push_back("reward");
    h.insert(h.end(), kFlagFields.begin(), kFlagFields.end());
    return h;
  }

  std::size_t TrajectoryTable::column(const std::string &name) const
  {
    const auto it = std::find(header.begin(), header.end(), name);
    if ( it == header.end() )
      throw std::runtime_error("trajectory CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }

  TrajectoryTable read_trajectory_csv(std::istream &in)
  {
    TrajectoryTable t;
    std::string line;
    if ( !std::getline(in, line) )
      throw std::runtime_error("trajectory CSV is empty");
    {
      std::istringstream cells(line);
      for ( std::string c; std::getline(cells, c, ','); )
        t.header.push_back(c);
    }
    const std::vector<std::string> fixed_head{"trajectory", "step", "cash", "inventory", "time", "midprice"};
    if ( t.header.size() < fixed_head.size() + 3 + kFlagFields.size() ||
         !std::equal(fixed_head.begin(), fixed_head.end(), t.header.begin()) ||
         !std::equal(kFlagFields.begin(), kFlagFields.end(), t.header.end() - static_cast<std::ptrdiff_t>(kFlagFields.size())) ||
         t.header[t.header.size() - kFlagFields.size() - 1] != "reward" )
      throw std::runtime_error("trajectory CSV header does not match the schema");

    std::size_t lineno = 1;
    while ( std::getline(in, line) ) {
      ++lineno;
      std::vector<double> row;
      std::size_t pos = 0;
      while ( true ) {
        const std::size_t end = std::min(line.find(',', pos), line.size());
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + end, v);
        if ( ec != std::errc() || ptr != line.data() + end )
          throw std::runtime_error("trajectory CSV line " + std::to_string(lineno) + ": non-numeric cell");
        row.push_back(v);
        if ( end == line.size() )
          break;
        pos = end + 1;
      }
      if ( row.size() != t.header.size() )
        throw std::runtime_error("trajectory CSV line " + std::to_string(lineno) + ": expected " +
                                 std::to_string(t.header.size()) + " columns, got " + std::to_string(row.size()));
      const std::size_t flags = t.header.size() - kFlagFields.size();
      for ( std::size_t c = 0; c < 2; ++c )
        if ( row[c] != std::floor(row[c]) || row[c] < 0 )
          throw std::runtime_error("trajectory CSV line " + std::to_string(lineno) + ": " + t.header[c] +
                                   " must be a non-negative integer");
      for ( std::size_t c = flags; c < row.size(); ++c )
        if ( row[c] != 0.0 && row[c] != 1.0 )
          throw std::runtime_error("trajectory CSV line " + std::to_string(lineno) + ": " + t.header[c] +
                                   " must be 0 or 1");
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  json options_to_json(const Options &o)
  {
    json j{{"command", o.command},
           {"config_path", o.config_path},
           {"out", o.out},
           {"agent", o.agent},
           {"action", o.action},
           {"policy_path", o.policy_path},
           {"schedule_path", o.schedule_path},
           {"sizes", o.sizes},
           {"summary_only", o.summary_only}};
    j["seed"] = o.seed ? json(*o.seed) : json(nullptr);
    j["n_trajectories"] = o.n_trajectories ? json(*o.n_trajectories) : json(nullptr);
    j["half_spread"] = o.half_spread ? json(*o.half_spread) : json(nullptr);
    return j;
  }

  Options options_from_json(const json &j)
  {
    Options o;
    o.command = j.at("command").get<std::string>();
    o.config_path = j.at("config_path").get<std::string>();
    o.out = j.at("out").get<std::string>();
    o.agent = j.at("agent").get<std::string>();
    o.action = j.at("action").get<std::vector<double>>();
    o.policy_path = j.at("policy_path").get<std::string>();
    o.schedule_path = j.at("schedule_path").get<std::string>();
    o.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    o.summary_only = j.at("summary_only").get<bool>();
    if ( !j.at("seed").is_null() )
      o.seed = j.at("seed").get<std::uint64_t>();
    if ( !j.at("n_trajectories").is_null() )
      o.n_trajectories = j.at("n_trajectories").get<std::size_t>();
    if ( !j.at("half_spread").is_null() )
      o.half_spread = j.at("half_spread").get<double>();
    return o;
  }

  Inputs load_inputs(const Options &o)
  {
    Inputs in;
    if ( !o.config_path.empty() ) {
      in.config = read_file(o.config_path, "config");
      in.config_name = o.config_path;
    }
    if ( !o.policy_path.empty() )
      in.policy = read_file(o.policy_path, "policy");
    if ( !o.schedule_path.empty() )
      in.schedule = read_file(o.schedule_path, "schedule");
    return in;
  }

  int run(const Options &o, const Inputs &in, const std::vector<std::string> &argv, std::istream &input,
          std::ostream &out, std::ostream &)
  {
    const std::string started = utc_now();
    OutputDir dir(o.out);
    int code = exit_ok;
    if ( o.command == "rollout" )
      code = cmd_rollout(o, in, dir, out);
    else if ( o.command == "benchmark" )
      code = cmd_benchmark(o, in, dir, out);
    else if ( o.command == "train" )
      code = cmd_train(o, in, dir, out);
    else if ( o.command == "evaluate" )
      code = cmd_evaluate(o, in, dir, out);
    else if ( o.command == "solve-cj" )
      code = cmd_solve_cj(o, in, dir, out);
    else if ( o.command == "play" )
      code = cmd_play(o, in, dir, input, out);
    else
      throw UsageError("unknown command '" + o.command + "'");

    const RunConfig rc = resolve_config(o, in);
    json manifest{{"tool", "mbt"},
                  {"version", kToolVersion},
                  {"command", o.command},
                  {"argv", argv},
                  {"options", options_to_json(o)},
                  {"seed", rc.env.master_seed},
                  {"train_seed", rc.train.seed},
                  {"inputs", {{"config_name", in.config_name}, {"config", in.config}, {"policy", in.policy},
                              {"schedule", in.schedule}}},
                  {"started_at", started},
                  {"finished_at", utc_now()},
                  {"exit_code", code},
                  {"outputs", dir.files()}};
    std::ofstream(dir.root() / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
    return code;
  }

  int rerun(const fs::path &manifest_path, const std::string &out_dir, std::istream &input, std::ostream &out,
            std::ostream &err)
  {
    json m;
    try {
      m = json::parse(read_file(manifest_path.string(), "manifest"));
    } catch ( const json::exception &e ) {
      throw UsageError("manifest '" + manifest_path.string() + "' is not valid JSON: " + e.what());
    }
    Options o;
    Inputs in;
    try {
      o = options_from_json(m.at("options"));
      const auto &inputs = m.at("inputs");
      in.config = inputs.at("config").get<std::string>();
      in.config_name = inputs.at("config_name").get<std::string>();
      in.policy = inputs.at("policy").get<std::string>();
      in.schedule = inputs.at("schedule").get<std::string>();
    } catch ( const json::exception &e ) {
      throw UsageError("manifest '" + manifest_path.string() + "' is incomplete: " + e.what());
    }
    if ( !out_dir.empty() )
      o.out = out_dir;
    if ( fs::weakly_canonical(o.out) == fs::weakly_canonical(manifest_path.parent_path()) )
      throw UsageError("rerun output directory must differ from the manifest's directory");
    return run(o, in, {"--manifest", manifest_path.string(), "--out", o.out}, input, out, err);
  }

  int main(int argc, char **argv, std::istream &input, std::ostream &out, std::ostream &err)
  {
    CLI::App app{"Market-making simulator: rollouts, benchmarks, training and evaluation"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(0, 1);
    app.fallthrough();

    Options o;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    double half_spread = 0.0;
    std::string manifest;
    auto *seed_opt = app.add_option("--seed", seed, "Override env.seed and train.seed");
    app.add_option("--config", o.config_path, "TOML configuration file");
    auto *out_opt = app.add_option("--out", o.out, "Output directory")->capture_default_str();
    auto *n_opt = app.add_option("-n,--n-trajectories", n, "Trajectories (rollout, benchmark, train) or episodes (evaluate)")
                      ->check(CLI::PositiveNumber);
    app.add_option("--manifest", manifest, "Re-execute the run recorded in a manifest.json");

    auto add_agent_options = [&](CLI::App *sub) {
      sub->add_option("--agent", o.agent, "random | fixed_action | fixed_spread | avellaneda_stoikov | cj | policy | schedule");
      sub->add_option("--half-spread", half_spread, "Depth for the fixed_spread agent");
      sub->add_option("--action", o.action, "Comma-separated action for the fixed_action agent")->delimiter(',');
      sub->add_option("--policy", o.policy_path, "policy.json written by train");
      sub->add_option("--schedule", o.schedule_path, "trajectories.csv or transcript.csv whose actions are replayed");
    };

    auto *rollout = app.add_subcommand("rollout", "Simulate episodes and write per-step CSV");
    add_agent_options(rollout);
    rollout->add_flag("--summary-only", o.summary_only, "Write only summary.json");
    auto *benchmark = app.add_subcommand("benchmark", "Time vectorized against looped rollouts");
    add_agent_options(benchmark);
    benchmark->add_option("--sizes", o.sizes, "Comma-separated batch sizes")->delimiter(',');
    app.add_subcommand("train", "Train a linear-Gaussian policy with policy gradient");
    auto *evaluate_cmd = app.add_subcommand("evaluate", "Evaluate an agent on held-out episodes");
    add_agent_options(evaluate_cmd);
    app.add_subcommand("solve-cj", "Export the closed-form optimal depths");
    app.add_subcommand("play", "Trade interactively");

    try {
      app.parse(argc, argv);
    } catch ( const CLI::ParseError &e ) {
      const int code = app.exit(e, out, err);
      return code == 0 ? exit_ok : exit_usage;
    }

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
      if ( !manifest.empty() )
        return rerun(manifest, out_opt->count() ? o.out : std::string(), input, out, err);
      if ( app.get_subcommands().empty() ) {
        err << app.help();
        return exit_usage;
      }
      o.command = app.get_subcommands().front()->get_name();
      if ( seed_opt->count() )
        o.seed = seed;
      if ( n_opt->count() )
        o.n_trajectories = n;
      for ( auto *sub : app.get_subcommands() )
        if ( sub->get_option_no_throw("--half-spread") && sub->get_option("--half-spread")->count() )
          o.half_spread = half_spread;
      return run(o, load_inputs(o), args, input, out, err);
    } catch ( const ConfigError &e ) {
      for ( const auto &p : e.problems() )
        err << "config error: " << p << '\n';
      return exit_usage;
    } catch ( const UsageError &e ) {
      err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
      return exit_usage;
    } catch ( const NumericalError &e ) {
      err << "numerical failure: " << e.what() << '\n';
      return exit_numerical;
    } catch ( const std::invalid_argument &e ) {
      err << "usage error: " << e.what() << '\n';
      return exit_usage;
    } catch ( const std::exception &e ) {
      err << "error: " << e.what() << '\n';
      return exit_failure;
    }
  }

} // namespace mbt::cli
