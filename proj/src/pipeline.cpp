#include "epinp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "epinp/cts_gp_mcmc.hpp"
#include "epinp/discrete_gp_mcmc.hpp"
#include "epinp/parametric_mcmc.hpp"
#include "epinp/rate_function.hpp"
#include "epinp/simulate.hpp"

namespace epinp {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

McmcOptions mcmc_options_from(const RunConfig& config) {
  McmcOptions o;
  o.iterations = config.get_int("mcmc.iterations", 10000);
  o.burnin = config.get_int("mcmc.burnin", o.iterations / 5);
  o.thin = config.get_int("mcmc.thin", 10);
  o.seed = config.get_u64("mcmc.seed");
  o.moves_per_sweep = config.get_int("mcmc.moves_per_sweep", 0);
  o.g_updates_per_sweep = config.get_int("mcmc.g_updates_per_sweep", 1);
  o.chains = config.get_int("mcmc.chains", 1);
  o.epsilon = config.get_double("gp.epsilon", 0.2);
  o.no_data = config.get_bool("mcmc.no_data", false);
  o.check_every = config.get_int("mcmc.check_every", 0);
  o.floor_multiplier = config.get_double("mcmc.floor_multiplier", 100.0);
  if (o.iterations < 1) throw ConfigError("mcmc.iterations must be >= 1");
  if (o.burnin < 0 || o.burnin >= o.iterations)
    throw ConfigError("mcmc.burnin must lie in [0, iterations)");
  if (o.thin < 1) throw ConfigError("mcmc.thin must be >= 1");
  if (o.chains < 1) throw ConfigError("mcmc.chains must be >= 1");
  return o;
}

KernelParams kernel_from(const RunConfig& config) {
  KernelParams k;
  k.omega = config.get_double("gp.omega");
  k.length_scale = config.get_double("gp.length_scale");
  if (!(k.omega > 0) || !(k.length_scale > 0))
    throw ConfigError("gp.omega and gp.length_scale must be positive");
  return k;
}

RateFunction rate_from(const RunConfig& config) {
  if (config.has("sim.beta_table")) {
    std::string path = config.get_string("sim.beta_table");
    std::ifstream in(path);
    if (!in) throw DataError("cannot open rate table: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty rate table: " + path);
    std::vector<double> grid, values;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = split_csv_line(line);
      if (f.size() != 2) throw DataError("rate table rows need time,beta");
      grid.push_back(std::stod(f[0]));
      values.push_back(std::stod(f[1]));
    }
    Eigen::VectorXd g(static_cast<Eigen::Index>(grid.size()));
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
      g[static_cast<Eigen::Index>(k)] = grid[k];
      v[static_cast<Eigen::Index>(k)] = values[k];
    }
    return RateFunction::tabulated(g, v);
  }
  return RateFunction::constant(config.get_double("sim.beta"));
}

// Runs `chains` independent chains with offset seeds, in parallel.
template <typename RunOne>
ChainOutput run_chains(const McmcOptions& base, RunOne&& run_one) {
  if (base.chains == 1) return run_one(base);
  std::vector<ChainOutput> outs(static_cast<std::size_t>(base.chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(base.chains));
  std::vector<std::thread> workers;
  for (int c = 0; c < base.chains; ++c) {
    workers.emplace_back([&, c]() {
      try {
        McmcOptions opts = base;
        opts.seed = base.seed + static_cast<std::uint64_t>(c);
        outs[static_cast<std::size_t>(c)] = run_one(opts);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return merge_chains(outs);
}

nlohmann::json diagnostics_json(const ChainOutput& chain,
                                const PosteriorSummary& summary,
                                const RunConfig& config,
                                const std::string& command) {
  nlohmann::json j;
  j["command"] = command;
  j["seed"] = chain.seed;
  j["iterations"] = chain.iterations;
  j["burnin"] = chain.burnin;
  j["thin"] = chain.thin;
  j["chains"] = chain.chains;
  j["retained"] = chain.retained();
  j["wall_seconds"] = chain.wall_seconds;
  j["acceptance"] = chain.acceptance;
  j["counters"] = chain.counters;
  nlohmann::json ess;
  for (const auto& [name, st] : summary.scalars) ess[name] = st.ess;
  if (summary.ess.size() > 0) {
    std::vector<double> day_ess(summary.ess.data(),
                                summary.ess.data() + summary.ess.size());
    ess["beta.min_over_days"] =
        *std::min_element(day_ess.begin(), day_ess.end());
    ess["beta.median_over_days"] = quantile(day_ess, 0.5);
  }
  j["ess"] = ess;
  j["config"] = config.echo();
  return j;
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(const std::string& out_dir) : dir_(out_dir) {
    fs::create_directories(dir_);
  }

  std::string path(const std::string& name) const {
    return (fs::path(dir_) / name).string();
  }

  std::ofstream open(const std::string& name) {
    std::string p = path(name);
    written_.push_back(p);
    std::ofstream os(p, std::ios::binary);
    if (!os) throw DataError("cannot write artifact: " + p);
    return os;
  }

  void cleanup() {
    for (const std::string& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::string dir_;
  std::vector<std::string> written_;
};

void write_chain_artifacts(ArtifactWriter& w, const ChainOutput& chain,
                           const RunConfig& config,
                           const std::string& command) {
  PosteriorSummary summary = summarize(chain, 0.95);
  {
    std::ofstream os = w.open("samples.csv");
    os << "iteration,day,beta\n";
    for (Eigen::Index r = 0; r < chain.beta.rows(); ++r)
      for (Eigen::Index d = 0; d < chain.days.size(); ++d)
        if (!std::isnan(chain.beta(r, d)))
          os << r << ',' << fmt(chain.days[d]) << ',' << fmt(chain.beta(r, d))
             << '\n';
  }
  {
    std::ofstream os = w.open("params.csv");
    os << "iteration";
    for (const std::string& name : chain.scalar_names) os << ',' << name;
    os << '\n';
    for (Eigen::Index r = 0; r < chain.scalars.rows(); ++r) {
      os << r;
      for (Eigen::Index c = 0; c < chain.scalars.cols(); ++c)
        os << ',' << fmt(chain.scalars(r, c));
      os << '\n';
    }
  }
  {
    std::ofstream os = w.open("summary.csv");
    os << "day,median,mean,lo95,hi95\n";
    for (Eigen::Index d = 0; d < summary.days.size(); ++d)
      os << fmt(summary.days[d]) << ',' << fmt(summary.median[d]) << ','
         << fmt(summary.mean[d]) << ',' << fmt(summary.lo[d]) << ','
         << fmt(summary.hi[d]) << '\n';
  }
  bool has_m = std::find(chain.scalar_names.begin(), chain.scalar_names.end(),
                         "M") != chain.scalar_names.end();
  if (has_m && config.get_bool("output.thinned_trace", false)) {
    std::ofstream os = w.open("thinned.csv");
    os << "iteration,M\n";
    Eigen::VectorXd m = chain.scalar_trace("M");
    for (Eigen::Index r = 0; r < m.size(); ++r)
      os << r << ',' << fmt(m[r]) << '\n';
  }
  {
    std::ofstream os = w.open("diagnostics.json");
    os << diagnostics_json(chain, summary, config, command).dump(2) << '\n';
  }
}

std::vector<int> known_infections_from(const RunConfig& config,
                                       const RemovalData& data) {
  std::string path = config.get_string("data.infections");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open infections file: " + path);
  EpidemicEvents events =
      EpidemicEvents::read_csv(in, data.population, TimeScale::Discrete);
  std::map<int, std::pair<double, double>> by_label;  // label -> (inf, rem)
  for (const Event& e : events.events()) {
    if (e.individual == kNoIndividual)
      throw DataError("known-infection events need individual labels");
    auto& slot = by_label[e.individual];
    if (e.kind == EventKind::Infection)
      slot.first = e.time;
    else
      slot.second = e.time;
  }
  if (static_cast<int>(by_label.size()) != data.count())
    throw DataError("known infections do not match the removal count");
  std::vector<int> known;
  int label = 1;
  for (const auto& [lab, times] : by_label) {
    if (lab != label)
      throw DataError("known-infection labels must be 1..n by removal order");
    if (times.second != data.times[static_cast<std::size_t>(label - 1)])
      throw DataError("known removal days disagree with the removal data");
    known.push_back(static_cast<int>(times.first));
    ++label;
  }
  return known;
}

void run_simulate(const RunConfig& config, ArtifactWriter& w) {
  std::string kind = config.get_string("sim.kind");
  int population = config.get_int("population_size");
  std::uint64_t seed = config.get_u64("sim.seed");
  RateFunction beta = rate_from(config);
  EpidemicEvents events = [&]() {
    if (kind == "continuous") {
      double gamma = config.get_double("sim.gamma");
      return simulate_continuous(population, beta, gamma, seed,
                                 config.get_double("sim.initial_time", 0.0));
    }
    if (kind == "discrete") {
      double gamma = config.get_double("sim.gamma");
      return simulate_discrete(population, beta,
                               InfectiousPeriodModel::geometric(gamma), seed,
                               config.get_int("sim.initial_day", 0),
                               config.get_int("sim.max_days", 100000));
    }
    throw ConfigError("sim.kind must be continuous or discrete");
  }();
  {
    std::ofstream os = w.open("events.csv");
    events.write_csv(os);
  }
  {
    std::ofstream os = w.open("removals.csv");
    os << "time\n";
    for (double t : events.removal_times()) os << fmt(t) << '\n';
  }
  {
    std::ofstream os = w.open("diagnostics.json");
    nlohmann::json j;
    j["command"] = "simulate";
    j["seed"] = seed;
    j["final_size"] = events.final_size();
    j["config"] = config.echo();
    os << j.dump(2) << '\n';
  }
}

void run_ml_estimate(const RunConfig& config, ArtifactWriter& w) {
  std::string path = config.get_string("data");
  int population = config.get_int("population_size");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open events file: " + path);
  EpidemicEvents events =
      EpidemicEvents::read_csv(in, population, TimeScale::Discrete);
  std::vector<DailyMlEstimate> estimates = ml_daily_estimates(events);
  {
    std::ofstream os = w.open("ml_estimates.csv");
    os << "day,beta_hat,saturated\n";
    for (const DailyMlEstimate& e : estimates)
      os << e.day << ',' << fmt(e.beta_hat) << ',' << (e.saturated ? 1 : 0)
         << '\n';
  }
  {
    std::ofstream os = w.open("diagnostics.json");
    nlohmann::json j;
    j["command"] = "ml-estimate";
    j["days"] = estimates.size();
    j["config"] = config.echo();
    os << j.dump(2) << '\n';
  }
}

void run_summarize(const RunConfig& config, ArtifactWriter& w) {
  ChainOutput chain = read_samples_csv(config.get_string("data"));
  double level = config.get_double("summary.level", 0.95);
  PosteriorSummary summary = summarize(chain, level);
  std::ofstream os = w.open("summary.csv");
  os << "day,median,mean,lo95,hi95\n";
  for (Eigen::Index d = 0; d < summary.days.size(); ++d)
    os << fmt(summary.days[d]) << ',' << fmt(summary.median[d]) << ','
       << fmt(summary.mean[d]) << ',' << fmt(summary.lo[d]) << ','
       << fmt(summary.hi[d]) << '\n';
}

}  // namespace

RemovalData ingest_removals(const std::string& path, const RunConfig& config,
                            TimeScale scale) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open removals file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("no removals");
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    try {
      times.push_back(std::stod(fields.at(0)));
    } catch (const std::exception&) {
      throw DataError("bad removal time: " + line);
    }
  }
  if (times.empty()) throw DataError("no removals");
  int population = config.get_int("population_size");
  double tie_eps = config.get_double("data.tie_epsilon", 1e-6);
  return make_removal_data(std::move(times), population, scale, tie_eps);
}

ChainOutput read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open samples file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty samples file");
  if (line != "iteration,day,beta")
    throw DataError("samples file must have header iteration,day,beta");
  std::map<long, std::map<double, double>> rows;
  std::set<double> day_set;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 3) throw DataError("bad samples row: " + line);
    long iter = std::stol(f[0]);
    double day = std::stod(f[1]);
    rows[iter][day] = std::stod(f[2]);
    day_set.insert(day);
  }
  if (rows.empty()) throw DataError("samples file has no rows");
  ChainOutput chain;
  chain.days.resize(static_cast<Eigen::Index>(day_set.size()));
  Eigen::Index d = 0;
  for (double day : day_set) chain.days[d++] = day;
  chain.beta.setConstant(static_cast<Eigen::Index>(rows.size()),
                         chain.days.size(),
                         std::numeric_limits<double>::quiet_NaN());
  chain.scalar_names = {};
  chain.scalars.resize(static_cast<Eigen::Index>(rows.size()), 0);
  Eigen::Index r = 0;
  for (const auto& [iter, cols] : rows) {
    for (const auto& [day, beta] : cols) {
      Eigen::Index target =
          std::lower_bound(chain.days.data(),
                           chain.days.data() + chain.days.size(), day) -
          chain.days.data();
      chain.beta(r, target) = beta;
    }
    ++r;
  }
  return chain;
}

void write_samples_csv(const std::string& path, const ChainOutput& chain) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  os << "iteration,day,beta\n";
  for (Eigen::Index r = 0; r < chain.beta.rows(); ++r)
    for (Eigen::Index d = 0; d < chain.days.size(); ++d)
      if (!std::isnan(chain.beta(r, d)))
        os << r << ',' << fmt(chain.days[d]) << ',' << fmt(chain.beta(r, d))
           << '\n';
}

void write_params_csv(const std::string& path, const ChainOutput& chain) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  os << "iteration";
  for (const std::string& name : chain.scalar_names) os << ',' << name;
  os << '\n';
  for (Eigen::Index r = 0; r < chain.scalars.rows(); ++r) {
    os << r;
    for (Eigen::Index c = 0; c < chain.scalars.cols(); ++c)
      os << ',' << fmt(chain.scalars(r, c));
    os << '\n';
  }
}

void write_summary_csv(const std::string& path, const PosteriorSummary& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  os << "day,median,mean,lo95,hi95\n";
  for (Eigen::Index d = 0; d < s.days.size(); ++d)
    os << fmt(s.days[d]) << ',' << fmt(s.median[d]) << ',' << fmt(s.mean[d])
       << ',' << fmt(s.lo[d]) << ',' << fmt(s.hi[d]) << '\n';
}

void run_pipeline(const std::string& command, const RunConfig& config,
                  const std::string& out_dir) {
  ArtifactWriter writer(out_dir);
  try {
    if (command == "simulate") {
      run_simulate(config, writer);
      return;
    }
    if (command == "ml-estimate") {
      run_ml_estimate(config, writer);
      return;
    }
    if (command == "summarize") {
      run_summarize(config, writer);
      return;
    }

    if (command == "fit-parametric") {
      RemovalData data = ingest_removals(config.get_string("data"), config,
                                         TimeScale::Continuous);
      ParametricPriors priors;
      priors.beta.shape = config.get_double("prior.beta.shape", 1.0);
      priors.beta.rate = config.get_double("prior.beta.rate", 1.0);
      priors.gamma.shape = config.get_double("prior.gamma.shape", 1.0);
      priors.gamma.rate = config.get_double("prior.gamma.rate", 1.0);
      priors.init_gap_rate = config.get_double("prior.init_gap.rate", 1.0);
      McmcOptions options = mcmc_options_from(config);
      ChainOutput chain = run_chains(options, [&](const McmcOptions& o) {
        return run_parametric_mcmc(data, priors, o);
      });
      write_chain_artifacts(writer, chain, config, command);
      return;
    }
    if (command == "fit-discrete-gp") {
      RemovalData data = ingest_removals(config.get_string("data"), config,
                                         TimeScale::Discrete);
      BetaPrior prior;
      prior.a = config.get_double("prior.gamma_beta.a", 1.0);
      prior.b = config.get_double("prior.gamma_beta.b", 1.0);
      KernelParams kernel = kernel_from(config);
      McmcOptions options = mcmc_options_from(config);
      std::optional<std::vector<int>> known;
      if (config.has("data.infections")) {
        known = known_infections_from(config, data);
        options.fix_infection_times =
            config.get_bool("mcmc.fix_infection_times", true);
      } else {
        options.fix_infection_times =
            config.get_bool("mcmc.fix_infection_times", false);
        if (options.fix_infection_times)
          throw ConfigError("fixing infection times requires data.infections");
      }
      ChainOutput chain = run_chains(options, [&](const McmcOptions& o) {
        return run_discrete_gp_mcmc(data, prior, kernel, o, known);
      });
      write_chain_artifacts(writer, chain, config, command);
      return;
    }
    if (command == "fit-cts-gp") {
      RemovalData data = ingest_removals(config.get_string("data"), config,
                                         TimeScale::Continuous);
      CtsGpPriors priors;
      priors.gamma.shape = config.get_double("prior.gamma.shape", 1.0);
      priors.gamma.rate = config.get_double("prior.gamma.rate", 1.0);
      priors.beta_star.shape = config.get_double("prior.beta_star.shape", 1.0);
      priors.beta_star.rate = config.get_double("prior.beta_star.rate", 1.0);
      priors.init_gap_rate = config.get_double("prior.init_gap.rate", 1.0);
      KernelParams kernel = kernel_from(config);
      McmcOptions options = mcmc_options_from(config);
      ChainOutput chain = run_chains(options, [&](const McmcOptions& o) {
        return run_cts_gp_mcmc(data, priors, kernel, o);
      });
      write_chain_artifacts(writer, chain, config, command);
      return;
    }
    throw ConfigError("unknown command: " + command);
  } catch (...) {
    writer.cleanup();
    throw;
  }
}

}  // namespace epinp
