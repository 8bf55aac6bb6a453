#include "mbt/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mbt/errors.hpp"
#include "toml.hpp"

namespace mbt
{

  namespace
  {
    class Diagnostics
    {
    public:
      explicit Diagnostics(std::string source) : source_(std::move(source)) {}

      void error(const toml::source_region &where, const std::string &message)
      {
        std::ostringstream out;
        out << source_ << ':' << where.begin.line << ':' << where.begin.column << ": " << message;
        errors_.push_back(out.str());
      }
      void error(const std::string &message) { errors_.push_back(source_ + ": " + message); }

      std::vector<std::string> &errors() { return errors_; }

    private:
      std::string source_;
      std::vector<std::string> errors_;
    };

    /// Typed access to one table that remembers which keys were read.
    class Section
    {
    public:
      Section(const toml::table *table, std::string name, Diagnostics &diag)
          : table_(table), name_(std::move(name)), diag_(diag)
      {
      }

      bool present() const { return table_ != nullptr; }
      bool has(std::string_view key) const { return table_ && table_->contains(key); }

      double number(std::string_view key, double fallback)
      {
        const toml::node *n = lookup(key);
        if ( !n )
          return fallback;
        if ( auto v = n->value<double>() )
          return *v;
        type_error(*n, key, "a number");
        return fallback;
      }

      std::int64_t integer(std::string_view key, std::int64_t fallback)
      {
        const toml::node *n = lookup(key);
        if ( !n )
          return fallback;
        if ( n->is_integer() )
          return n->as_integer()->get();
        type_error(*n, key, "an integer");
        return fallback;
      }

      bool boolean(std::string_view key, bool fallback)
      {
        const toml::node *n = lookup(key);
        if ( !n )
          return fallback;
        if ( n->is_boolean() )
          return n->as_boolean()->get();
        type_error(*n, key, "a boolean");
        return fallback;
      }

      std::string string(std::string_view key, std::string fallback)
      {
        const toml::node *n = lookup(key);
        if ( !n )
          return fallback;
        if ( n->is_string() )
          return n->as_string()->get();
        type_error(*n, key, "a string");
        return fallback;
      }

      std::vector<double> numbers(std::string_view key)
      {
        const toml::node *n = lookup(key);
        std::vector<double> out;
        if ( !n )
          return out;
        const auto *arr = n->as_array();
        if ( !arr ) {
          type_error(*n, key, "an array of numbers");
          return out;
        }
        for ( const auto &item : *arr ) {
          if ( auto v = item.value<double>() )
            out.push_back(*v);
          else
            type_error(item, key, "an array of numbers");
        }
        return out;
      }

      const toml::node *node(std::string_view key)
      {
        return lookup(key);
      }

      void error_at(std::string_view key, const std::string &message)
      {
        if ( table_ && table_->contains(key) )
          diag_.error(table_->get(key)->source(), message);
        else if ( table_ )
          diag_.error(table_->source(), message);
        else
          diag_.error(message);
      }

      /// Report every key that was never read.
      void finish()
      {
        if ( !table_ )
          return;
        for ( const auto &[key, value] : *table_ )
          if ( !used_.count(std::string(key.str())) )
            diag_.error(value.source(), "unknown key '" + std::string(key.str()) + "' in [" + name_ + "]");
      }

    private:
      const toml::node *lookup(std::string_view key)
      {
        if ( !table_ )
          return nullptr;
        used_.insert(std::string(key));
        return table_->get(key);
      }

      void type_error(const toml::node &n, std::string_view key, const char *expected)
      {
        diag_.error(n.source(), name_ + "." + std::string(key) + " must be " + expected);
      }

      const toml::table *table_;
      std::string name_;
      Diagnostics &diag_;
      std::set<std::string> used_;
    };

    const toml::table *subtable(const toml::table &root, std::string_view name, Diagnostics &diag)
    {
      const toml::node *n = root.get(name);
      if ( !n )
        return nullptr;
      if ( !n->is_table() ) {
        diag.error(n->source(), "'" + std::string(name) + "' must be a table");
        return nullptr;
      }
      return n->as_table();
    }

    int to_int(std::int64_t v) { return static_cast<int>(std::clamp<std::int64_t>(v, INT32_MIN, INT32_MAX)); }

    void read_env(Section &s, EnvironmentConfig &c)
    {
      c.terminal_time = s.number("terminal_time", c.terminal_time);
      c.n_steps = to_int(s.integer("n_steps", c.n_steps));
      const auto n = s.integer("num_trajectories", static_cast<std::int64_t>(c.num_trajectories));
      if ( n < 1 )
        s.error_at("num_trajectories", "env.num_trajectories must be >= 1");
      else
        c.num_trajectories = static_cast<std::size_t>(n);
      c.initial_cash = s.number("initial_cash", c.initial_cash);
      if ( const toml::node *inv = s.node("initial_inventory") ) {
        if ( inv->is_integer() ) {
          c.initial_inventory = to_int(inv->as_integer()->get());
        } else if ( const auto *arr = inv->as_array(); arr && arr->size() == 2 && (*arr)[0].is_integer() &&
                                                         (*arr)[1].is_integer() ) {
          c.initial_inventory = InventoryRange{to_int((*arr)[0].as_integer()->get()), to_int((*arr)[1].as_integer()->get())};
        } else {
          s.error_at("initial_inventory", "env.initial_inventory must be an integer or a [lo, hi] integer pair");
        }
      }
      c.max_inventory = to_int(s.integer("max_inventory", c.max_inventory));
      if ( s.has("action_type") ) {
        try {
          c.action_type = action_type_from_string(s.string("action_type", "limit"));
        } catch ( const std::invalid_argument &e ) {
          s.error_at("action_type", e.what());
        }
      }
      c.minimum_tick_size = s.number("minimum_tick_size", c.minimum_tick_size);
      const auto seed = s.integer("seed", static_cast<std::int64_t>(c.master_seed));
      if ( seed < 0 )
        s.error_at("seed", "env.seed must be >= 0");
      else
        c.master_seed = static_cast<std::uint64_t>(seed);
      c.observe_auxiliaries = s.boolean("observe_auxiliaries", c.observe_auxiliaries);
    }

    void read_arrival(Section &s, EnvironmentConfig &c)
    {
      const auto model = s.string("model", "poisson");
      if ( model == "poisson" ) {
        PoissonArrival a;
        a.lambda_bid = s.number("lambda_bid", a.lambda_bid);
        a.lambda_ask = s.number("lambda_ask", a.lambda_ask);
        c.arrival = a;
      } else if ( model == "hawkes" ) {
        HawkesArrival a;
        a.baseline = s.number("baseline", a.baseline);
        a.reversion = s.number("reversion", a.reversion);
        a.jump = s.number("jump", a.jump);
        a.initial_intensity = s.number("initial_intensity", a.baseline);
        c.arrival = a;
      } else {
        s.error_at("model", "unknown arrival.model '" + model + "' (expected poisson or hawkes)");
      }
    }

    void read_midprice(Section &s, EnvironmentConfig &c)
    {
      const auto model = s.string("model", "brownian");
      auto impacts = [&s](auto &m) {
        m.impact_bid = s.number("impact_bid", m.impact_bid);
        m.impact_ask = s.number("impact_ask", m.impact_ask);
      };
      auto drift = [&s](auto &m) {
        m.initial_price = s.number("initial_price", m.initial_price);
        m.volatility = s.number("volatility", m.volatility);
        m.alpha_initial = s.number("alpha_initial", m.alpha_initial);
        m.alpha_reversion = s.number("alpha_reversion", m.alpha_reversion);
        m.alpha_mean = s.number("alpha_mean", m.alpha_mean);
        m.alpha_volatility = s.number("alpha_volatility", m.alpha_volatility);
      };
      auto ou = [&s](auto &m) {
        m.initial_price = s.number("initial_price", m.initial_price);
        m.reversion = s.number("reversion", m.reversion);
        m.mean_price = s.number("mean_price", m.mean_price);
        m.volatility = s.number("volatility", m.volatility);
      };
      if ( model == "brownian" || model == "geometric_brownian" ) {
        auto read = [&s](auto m) {
          m.initial_price = s.number("initial_price", m.initial_price);
          m.drift = s.number("drift", m.drift);
          m.volatility = s.number("volatility", m.volatility);
          return m;
        };
        if ( model == "brownian" )
          c.midprice = read(BrownianMidprice{});
        else
          c.midprice = read(GeometricBrownianMidprice{});
      } else if ( model == "brownian_jump" ) {
        BrownianJumpMidprice m;
        m.initial_price = s.number("initial_price", m.initial_price);
        m.volatility = s.number("volatility", m.volatility);
        impacts(m);
        c.midprice = m;
      } else if ( model == "ou" ) {
        OuMidprice m;
        ou(m);
        c.midprice = m;
      } else if ( model == "ou_jump" ) {
        OuJumpMidprice m;
        ou(m);
        impacts(m);
        c.midprice = m;
      } else if ( model == "ou_drift" ) {
        OuDriftMidprice m;
        drift(m);
        c.midprice = m;
      } else if ( model == "ou_jump_drift" ) {
        OuJumpDriftMidprice m;
        drift(m);
        impacts(m);
        c.midprice = m;
      } else {
        s.error_at("model", "unknown midprice.model '" + model +
                                "' (expected brownian, geometric_brownian, brownian_jump, ou, ou_jump, ou_drift "
                                "or ou_jump_drift)");
      }
    }

    void read_fill(Section &s, EnvironmentConfig &c)
    {
      const auto model = s.string("model", "exponential");
      if ( model == "exponential" ) {
        ExponentialFill f;
        f.fill_exponent = s.number("fill_exponent", f.fill_exponent);
        c.fill = f;
      } else if ( model == "triangular" ) {
        TriangularFill f;
        f.max_fill_depth = s.number("max_fill_depth", f.max_fill_depth);
        c.fill = f;
      } else if ( model == "power" ) {
        PowerFill f;
        f.fill_exponent = s.number("fill_exponent", f.fill_exponent);
        f.fill_multiplier = s.number("fill_multiplier", f.fill_multiplier);
        c.fill = f;
      } else {
        s.error_at("model", "unknown fill.model '" + model + "' (expected exponential, triangular or power)");
      }
    }

    void read_reward(Section &s, EnvironmentConfig &c)
    {
      const auto type = s.string("type", "pnl");
      if ( type == "pnl" ) {
        c.reward = PnlReward{};
      } else if ( type == "running_inventory_penalty" ) {
        RunningInventoryPenalty r;
        r.per_step_inventory_aversion = s.number("per_step_inventory_aversion", r.per_step_inventory_aversion);
        r.terminal_inventory_aversion = s.number("terminal_inventory_aversion", r.terminal_inventory_aversion);
        c.reward = r;
      } else if ( type == "exponential_utility" ) {
        ExponentialUtility r;
        r.risk_aversion = s.number("risk_aversion", r.risk_aversion);
        c.reward = r;
      } else {
        s.error_at("type", "unknown reward.type '" + type +
                               "' (expected pnl, running_inventory_penalty or exponential_utility)");
      }
    }

    std::optional<AgentSpec> read_agent(Section &s)
    {
      if ( !s.present() )
        return std::nullopt;
      const auto type = s.string("type", "");
      if ( type == "random" )
        return RandomSpec{s.numbers("lower"), s.numbers("upper")};
      if ( type == "fixed_action" )
        return FixedActionSpec{s.numbers("action")};
      if ( type == "fixed_spread" )
        return FixedSpreadSpec{s.number("half_spread", 1.0)};
      if ( type == "avellaneda_stoikov" ) {
        AvellanedaStoikovSpec a;
        a.params.risk_aversion = s.number("risk_aversion", a.params.risk_aversion);
        return a;
      }
      if ( type == "cj" )
        return CarteaJaimungalSpec{};
      s.error_at("type", "unknown agent.type '" + type +
                             "' (expected random, fixed_action, fixed_spread, avellaneda_stoikov or cj)");
      return std::nullopt;
    }

    void read_train(Section &s, TrainConfig &t)
    {
      const auto n = s.integer("num_trajectories", static_cast<std::int64_t>(t.num_trajectories));
      if ( n < 1 )
        s.error_at("num_trajectories", "train.num_trajectories must be >= 1");
      else
        t.num_trajectories = static_cast<std::size_t>(n);
      t.num_updates = to_int(s.integer("num_updates", t.num_updates));
      if ( t.num_updates < 1 )
        s.error_at("num_updates", "train.num_updates must be >= 1");
      t.learning_rate = s.number("learning_rate", t.learning_rate);
      if ( !(t.learning_rate > 0.0) )
        s.error_at("learning_rate", "train.learning_rate must be > 0");
      const auto optimizer = s.string("optimizer", t.use_adam ? "adam" : "sgd");
      if ( optimizer != "adam" && optimizer != "sgd" )
        s.error_at("optimizer", "train.optimizer must be 'adam' or 'sgd'");
      t.use_adam = optimizer == "adam";
      t.normalize_rewards = s.boolean("normalize_rewards", t.normalize_rewards);
      t.eval_every = to_int(s.integer("eval_every", t.eval_every));
      const auto eval_episodes = s.integer("eval_episodes", static_cast<std::int64_t>(t.eval_episodes));
      if ( eval_episodes < 1 )
        s.error_at("eval_episodes", "train.eval_episodes must be >= 1");
      else
        t.eval_episodes = static_cast<std::size_t>(eval_episodes);
      const auto seed = s.integer("seed", static_cast<std::int64_t>(t.seed));
      if ( seed < 0 )
        s.error_at("seed", "train.seed must be >= 0");
      else
        t.seed = static_cast<std::uint64_t>(seed);
      t.initial_log_std = s.number("initial_log_std", t.initial_log_std);
      if ( const toml::node *inv = s.node("initial_inventory") ) {
        const auto *arr = inv->as_array();
        if ( arr && arr->size() == 2 && (*arr)[0].is_integer() && (*arr)[1].is_integer() )
          t.initial_inventory = InventoryRange{to_int((*arr)[0].as_integer()->get()), to_int((*arr)[1].as_integer()->get())};
        else
          s.error_at("initial_inventory", "train.initial_inventory must be a [lo, hi] integer pair");
      }
      t.divergence_patience = to_int(s.integer("divergence_patience", t.divergence_patience));
      t.time_budget_seconds = s.number("time_budget_seconds", t.time_budget_seconds);
    }

    // "env.n_steps must be ..." -> anchor at the env.n_steps key when present.
    void anchor_validation_errors(const toml::table &root, const std::vector<std::string> &problems,
                                  Diagnostics &diag)
    {
      for ( const auto &msg : problems ) {
        const auto dot = msg.find('.');
        const auto space = msg.find(' ');
        const toml::node *where = nullptr;
        if ( dot != std::string::npos && space != std::string::npos && dot < space ) {
          const auto *section = root.get(msg.substr(0, dot));
          if ( section && section->is_table() ) {
            where = section->as_table()->get(msg.substr(dot + 1, space - dot - 1));
            if ( !where )
              where = section;
          }
        }
        if ( where )
          diag.error(where->source(), msg);
        else
          diag.error(msg);
      }
    }
  } // namespace

  RunConfig parse_config(std::string_view text, std::string_view source_name)
  {
    Diagnostics diag{std::string(source_name)};
    toml::table root;
    try {
      root = toml::parse(text, source_name);
    } catch ( const toml::parse_error &e ) {
      diag.error(e.source(), std::string(e.description()));
      throw ConfigError(std::move(diag.errors()));
    }

    static const std::set<std::string> known{"env", "arrival", "midprice", "fill", "reward", "agent", "train"};
    for ( const auto &[key, value] : root )
      if ( !known.count(std::string(key.str())) )
        diag.error(value.source(), "unknown section [" + std::string(key.str()) + "]");

    RunConfig rc;
    rc.text = std::string(text);
    Section env(subtable(root, "env", diag), "env", diag);
    Section arrival(subtable(root, "arrival", diag), "arrival", diag);
    Section midprice(subtable(root, "midprice", diag), "midprice", diag);
    Section fill(subtable(root, "fill", diag), "fill", diag);
    Section reward(subtable(root, "reward", diag), "reward", diag);
    Section agent(subtable(root, "agent", diag), "agent", diag);
    Section train(subtable(root, "train", diag), "train", diag);

    read_env(env, rc.env);
    read_arrival(arrival, rc.env);
    read_midprice(midprice, rc.env);
    read_fill(fill, rc.env);
    read_reward(reward, rc.env);
    rc.agent = read_agent(agent);
    read_train(train, rc.train);
    for ( auto *s : {&env, &arrival, &midprice, &fill, &reward, &agent, &train} )
      s->finish();

    anchor_validation_errors(root, validation_errors(rc.env), diag);
    if ( !diag.errors().empty() )
      throw ConfigError(std::move(diag.errors()));
    return rc;
  }

  RunConfig load_config_file(const std::filesystem::path &path)
  {
    std::ifstream in(path, std::ios::binary);
    if ( !in )
      throw ConfigError({path.string() + ": cannot open config file"});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
  }

} // namespace mbt
