// sigmatch: simulate, solve and sweep signal-driven matching markets.

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sigmatch/serialization.hpp"
#include "sigmatch/sigmatch.hpp"

namespace {

using namespace sigmatch;

struct Common {
  std::size_t n = 100;
  double m_ratio = 1.0;
  std::size_t capacity = 1;
  std::size_t k = 1;
  double delta = 0.0;
  std::string signal = "gaussian";
  std::uint64_t seed = 0;
  std::size_t reps = 1;
  std::size_t threads = 0;
  std::string out = "-";
  std::string format = "csv";
  double bonus = 1.0;
  std::string mechanism = "school";

  MarketConfig config() const {
    MarketConfig c;
    c.n = n;
    c.m_ratio = m_ratio;
    c.capacity = capacity;
    c.k = k;
    c.seed = seed;
    c.signal = parse_signal(signal, delta);
    c.validate();
    return c;
  }

  static SignalSpec parse_signal(const std::string& kind, double delta) {
    if (kind == "iid") return IidSignal{};
    if (kind == "gaussian") return GaussianShift{delta};
    throw UsageError("unknown signal '" + kind + "' (expected iid or gaussian)");
  }

  UtilityModel model() const {
    UtilityModel m;
    m.bonus = bonus;
    return m;
  }

  Mechanism mech() const {
    if (mechanism == "school") return Mechanism::SchoolProposing;
    if (mechanism == "student") return Mechanism::StudentProposing;
    throw UsageError("unknown mechanism '" + mechanism + "'");
  }
};

// Owns the output file when --out is a path.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw Error("cannot open output file '" + path + "'");
    path_ = path;
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    if (!file_) return;
    file_->close();
    if (!*file_) throw Error("failed writing output file '" + path_ + "'");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::string path_;
};

json record_json(const ExperimentRecord& r) {
  json j{{"k", r.k},           {"signal", r.signal},     {"seed", r.seed},
         {"n", r.n},           {"m", r.m},               {"l", r.l},
         {"matched", r.matched}, {"rank_counts", r.rank_counts}, {"unmatched", r.unmatched},
         {"synergy", r.synergy}, {"u_student", r.u_student}, {"u_university", r.u_university}};
  if (!std::isnan(r.delta)) j["delta"] = r.delta;
  return j;
}

json stat_json(const RunningStat& s) { return json{{"mean", s.mean()}, {"se", s.std_error()}}; }

void add_common(CLI::App* app, Common& c) {
  app->add_option("--n", c.n, "Number of students")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--m-ratio,--m_ratio", c.m_ratio, "Universities per student")->capture_default_str();
  app->add_option("--capacity,-L", c.capacity, "Seats per university")->capture_default_str();
  app->add_option("--k", c.k, "Applications per student")->capture_default_str();
  app->add_option("--delta", c.delta, "Mean shift of rank-1 signals (gaussian)")->capture_default_str();
  app->add_option("--signal", c.signal, "Signal model")
      ->check(CLI::IsMember({"iid", "gaussian"}))
      ->capture_default_str();
  app->add_option("--seed", c.seed, "Root seed")->capture_default_str();
  app->add_option("--reps", c.reps, "Replications")->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app->add_option("--out,-o", c.out, "Output path ('-' for stdout)")->capture_default_str();
  app->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

void run_simulate(const Common& c) {
  const auto config = c.config();
  Output out(c.out);
  if (c.format == "json") {
    json rows = json::array();
    for (const auto& r : simulate_records(config, c.reps, c.model(), c.mech(), c.threads))
      rows.push_back(record_json(r));
    out.stream() << json{{"config", to_json(config)}, {"records", rows}}.dump(2) << '\n';
  } else {
    cmd_simulate(config, c.reps, out.stream(), c.model(), c.mech(), c.threads);
  }
  out.close();
}

struct SolveArgs {
  std::string method = "iid";
  GeneralSolveOptions opt;
};

int run_solve(const Common& c, const SolveArgs& a) {
  const auto config = c.config();
  const auto kind = a.method == "iid" ? SolveKind::Iid : SolveKind::General;
  Output out(c.out);
  auto emit = [&](const SolverResult& r) {
    if (c.format == "csv") {
      out.stream() << "rank,y,f,residual,rank_fraction\n";
      const auto fr = r.rank_fractions();
      for (std::size_t i = 0; i < r.y.size(); ++i)
        out.stream() << i + 1 << ',' << format_number(r.y[i]) << ',' << format_number(r.f[i]) << ','
                     << format_number(r.residual[i]) << ',' << format_number(fr[i]) << '\n';
    } else {
      auto j = to_json(r);
      j["config"] = to_json(config);
      out.stream() << j.dump(2) << '\n';
    }
  };
  try {
    emit(cmd_solve(config, kind, a.opt));
  } catch (const ConvergenceError& e) {
    std::cerr << "sigmatch: error: " << e.what() << '\n'
              << "sigmatch: last iterate: " << to_json(e.last()).dump() << '\n';
    return 3;
  }
  out.close();
  return 0;
}

struct SweepArgs {
  std::vector<std::size_t> ks;
  std::size_t k_max = 10;
  std::vector<std::string> deltas{"0", "1", "2"};
  std::string records;
};

void run_sweep_cmd(const Common& c, const SweepArgs& a) {
  SweepSpec spec;
  spec.base = c.config();
  spec.reps = c.reps;
  spec.model = c.model();
  spec.mechanism = c.mech();
  spec.ks = a.ks;
  if (spec.ks.empty())
    for (std::size_t k = 1; k <= std::min(a.k_max, spec.base.universities()); ++k) spec.ks.push_back(k);
  for (const auto& d : a.deltas) {
    if (d == "iid") {
      spec.signals.push_back(IidSignal{});
      continue;
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(d, &used);
      if (used != d.size()) throw std::invalid_argument(d);
      spec.signals.push_back(GaussianShift{v});
    } catch (const std::logic_error&) {
      throw UsageError("bad delta '" + d + "' (expected a number or iid)");
    }
  }
  const auto cells = run_sweep(spec, c.threads);
  Output out(c.out);
  if (c.format == "json") {
    json rows = json::array();
    for (const auto& cell : cells)
      rows.push_back(json{{"k", cell.k},
                          {"signal", cell.signal},
                          {"delta", std::isnan(cell.delta) ? json(nullptr) : json(cell.delta)},
                          {"reps", cell.matched.count()},
                          {"n", cell.n},
                          {"m", cell.m},
                          {"l", cell.l},
                          {"matched", stat_json(cell.matched)},
                          {"rank1", stat_json(cell.rank1)},
                          {"unmatched", stat_json(cell.unmatched)},
                          {"synergy", stat_json(cell.synergy)},
                          {"u_student", stat_json(cell.u_student)},
                          {"u_university", stat_json(cell.u_university)}});
    out.stream() << json{{"cells", rows}}.dump(2) << '\n';
  } else {
    write_sweep_csv(out.stream(), cells);
  }
  out.close();
  if (!a.records.empty()) {
    Output rec(a.records);
    write_sweep_records_csv(rec.stream(), cells);
    rec.close();
  }
}

void run_stable_partners(const Common& c) {
  const auto config = c.config();
  Output out(c.out);
  if (c.format == "json") {
    const auto s = cmd_stable_partners(config, c.reps, nullptr, c.threads);
    out.stream() << json{{"config", to_json(config)},
                         {"yes_fraction", s.yes_fraction},
                         {"mean_yes_fraction", s.stat.mean()},
                         {"se", s.stat.std_error()}}
                        .dump(2)
                 << '\n';
  } else {
    const auto s = cmd_stable_partners(config, c.reps, &out.stream(), c.threads);
    std::cerr << "mean YES fraction " << format_number(s.stat.mean()) << " (se "
              << format_number(s.stat.std_error()) << ", " << c.reps << " reps)\n";
  }
  out.close();
}

void run_compare(const Common& c) {
  const auto config = c.config();
  Output out(c.out);
  if (c.format == "json") {
    const auto f = compare_mechanisms(config, c.reps, c.threads);
    RunningStat s;
    for (double v : f) s.add(v);
    out.stream() << json{{"config", to_json(config)},
                         {"fraction_different", f},
                         {"mean", s.mean()},
                         {"se", s.std_error()}}
                        .dump(2)
                 << '\n';
  } else {
    cmd_compare(config, c.reps, out.stream(), c.threads);
  }
  out.close();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signal-driven two-sided matching markets"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  add_common(&app, common);

  auto* simulate = app.add_subcommand("simulate", "Sample markets and run deferred acceptance");
  simulate->add_option("--bonus", common.bonus, "Synergy bonus for rank-1 matches")->capture_default_str();
  simulate->add_option("--mechanism", common.mechanism, "Proposing side")
      ->check(CLI::IsMember({"school", "student"}))
      ->capture_default_str();

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Solve for the per-rank proposal fractions");
  solve->add_option("--method", solve_args.method, "Solver")
      ->check(CLI::IsMember({"iid", "general"}))
      ->capture_default_str();
  solve->add_option("--tol", solve_args.opt.tol, "Residual tolerance (general)")->capture_default_str();
  solve->add_option("--max-iter,--max_iter", solve_args.opt.max_iter, "Iteration cap (general)")
      ->capture_default_str();
  solve->add_option("--n-sim,--n_sim", solve_args.opt.n_sim, "Students per Monte Carlo trial")
      ->capture_default_str();
  solve->add_option("--trials", solve_args.opt.trials, "Monte Carlo trials per evaluation")
      ->capture_default_str();
  solve->add_option("--beta", solve_args.opt.beta, "Damping factor")->capture_default_str();

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Grid of simulate cells over k and delta");
  sweep->add_option("--ks", sweep_args.ks, "Explicit k values")->delimiter(',');
  sweep->add_option("--k-max,--k_max", sweep_args.k_max, "Sweep k = 1..k-max when --ks is absent")
      ->capture_default_str();
  sweep->add_option("--deltas", sweep_args.deltas, "Signal shifts (numbers or 'iid')")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--records", sweep_args.records, "Also write per-replication rows here");
  sweep->add_option("--bonus", common.bonus, "Synergy bonus for rank-1 matches")->capture_default_str();
  sweep->add_option("--mechanism", common.mechanism, "Proposing side")
      ->check(CLI::IsMember({"school", "student"}))
      ->capture_default_str();

  auto* partners = app.add_subcommand("stable-partners", "Count universities with extra stable partners");
  auto* compare = app.add_subcommand("compare", "Fraction matched differently by the two mechanisms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*simulate) run_simulate(common);
    if (*solve) {
      if (app.get_option("--format")->count() == 0) common.format = "json";
      return run_solve(common, solve_args);
    }
    if (*sweep) run_sweep_cmd(common, sweep_args);
    if (*partners) run_stable_partners(common);
    if (*compare) run_compare(common);
  } catch (const UsageError& e) {
    std::cerr << "sigmatch: usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "sigmatch: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
