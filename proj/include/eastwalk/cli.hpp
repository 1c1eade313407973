#pragma once

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eastwalk/csv.hpp"
#include "eastwalk/estimators.hpp"
#include "eastwalk/exact.hpp"
#include "eastwalk/perturbative.hpp"
#include "eastwalk/svg.hpp"
#include "eastwalk/version.hpp"

namespace eastwalk {
namespace cli {

using nlohmann::json;

struct Common {
  std::string config;
  uint64_t seed = 20240501;
  int workers = 0;  // 0: EASTWALK_WORKERS env var, else hardware concurrency
  std::string out;  // empty: print CSV to stdout
};

// Maps JSON config keys to the bound option variables so --config files can
// pre-fill anything a flag can set; flags passed on the command line win.
struct OptionBook {
  std::map<std::string, std::function<void(const json&)>> setters;
  template <class T>
  void bind(const std::string& name, T& ref) {
    setters[name] = [&ref](const json& v) { ref = v.get<T>(); };
  }
};

template <class T>
CLI::Option* add_opt(CLI::App* sub, OptionBook& book, const std::string& name, T& ref,
                     const std::string& help) {
  book.bind(name, ref);
  return sub->add_option("--" + name, ref, help);
}

inline void add_common(CLI::App* sub, OptionBook& book, Common& c) {
  sub->add_option("--config", c.config, "JSON file with option values (flags override)");
  add_opt(sub, book, "seed", c.seed, "master seed");
  add_opt(sub, book, "workers", c.workers, "worker threads (0: env/auto)");
  add_opt(sub, book, "out", c.out, "output CSV path (empty: stdout)");
}

inline void apply_config(CLI::App* sub, const OptionBook& book, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (auto& [key, val] : j.items()) {
    auto it = book.setters.find(key);
    if (it == book.setters.end()) throw ValidationError("unknown config key: " + key);
    if (sub->count("--" + key) > 0) continue;  // explicit flag wins
    try {
      it->second(val);
    } catch (const std::exception& e) {
      throw ValidationError("config key " + key + ": " + e.what());
    }
  }
}

inline std::string svg_path(const std::string& csv) {
  auto dot = csv.find_last_of('.');
  auto slash = csv.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return csv + ".svg";
  return csv.substr(0, dot) + ".svg";
}

inline void emit(const Common& c, const std::vector<CsvRow>& rows,
                 const std::function<void(const std::string&)>& svg = {}) {
  if (c.out.empty()) {
    std::cout << csv_header() << '\n';
    for (const CsvRow& r : rows) std::cout << csv_line(r) << '\n';
    return;
  }
  write_csv(c.out, rows);
  std::cout << "wrote " << c.out;
  if (svg) {
    std::string sp = svg_path(c.out);
    svg(sp);
    std::cout << " and " << sp;
  }
  std::cout << '\n';
}

inline CsvRow base_row(const std::string& command, const EnvKind& kind, double rho,
                       const Topology& topo, double eps, double horizon, int replicas,
                       uint64_t seed) {
  CsvRow r;
  r.command = command;
  r.kind = to_string(kind.family);
  r.rho = rho;
  r.epsilon = eps;
  r.L = topo.L;
  r.topology = to_string(topo.shape);
  r.horizon = horizon;
  r.replicas = replicas;
  r.seed = seed;
  return r;
}

inline void fill_estimate(CsvRow& r, const EstimateWithCI& e) {
  r.value = e.value;
  r.se = e.se;
  r.ci_lo = e.ci_lo;
  r.ci_hi = e.ci_hi;
  r.n_batches = e.n_batches;
  r.runtime_s = e.budget.wall_s;
}

inline void fill_scalar(CsvRow& r, double value) {
  r.value = value;
  r.se = 0.0;
  r.ci_lo = value;
  r.ci_hi = value;
  r.n_batches = 0;
}

// ---------------------------------------------------------------------------
// Subcommand runners
// ---------------------------------------------------------------------------

struct SimulateParams {
  Common c;
  std::string kind = "east";
  double gamma = 1.0, rho = 0.5, eps = 0.1, horizon = 1000.0, burn = -1.0;
  int L = 256, replicas = 40;
};

inline void run_simulate(const SimulateParams& p) {
  EnvKind kind = env_kind_from_string(p.kind, p.gamma);
  EnvParams env{kind, p.rho, Topology::ring(p.L)};
  double burn = p.burn >= 0.0 ? p.burn : default_burn_in(kind, p.rho);
  EstimateWithCI est =
      estimate_velocity(env, p.eps, p.horizon, burn, p.replicas, p.c.seed, p.c.workers);
  CsvRow row = base_row("simulate", kind, p.rho, env.topology, p.eps, p.horizon, p.replicas,
                        p.c.seed);
  fill_estimate(row, est);
  row.param1 = burn;
  emit(p.c, {row});
}

struct ProfileParams {
  Common c;
  std::string kind = "east";
  double gamma = 1.0, rho = 0.5, eps = 0.1, horizon = 500.0, burn = -1.0;
  int L = 64, window = 8, replicas = 40;
};

inline void run_profile(const ProfileParams& p) {
  EnvKind kind = env_kind_from_string(p.kind, p.gamma);
  EnvParams env{kind, p.rho, Topology::ring(p.L)};
  double burn = p.burn >= 0.0 ? p.burn : default_burn_in(kind, p.rho);
  ProfileEstimate prof =
      estimate_profile(env, p.eps, p.horizon, burn, p.window, p.replicas, p.c.seed, p.c.workers);
  std::vector<CsvRow> rows;
  SvgSeries series;
  for (size_t i = 0; i < prof.offsets.size(); ++i) {
    CsvRow row = base_row("profile", kind, p.rho, env.topology, p.eps, p.horizon, p.replicas,
                          p.c.seed);
    fill_estimate(row, prof.density[i]);
    row.param1 = prof.offsets[i];
    rows.push_back(row);
    series.x.push_back(prof.offsets[i]);
    series.y.push_back(prof.density[i].value);
    series.yerr.push_back(1.96 * prof.density[i].se);
  }
  emit(p.c, rows, [&](const std::string& path) {
    SvgPlot plot;
    plot.title = "density around the walker";
    plot.xlabel = "offset x";
    plot.ylabel = "occupation";
    series.label = "simulated";
    plot.series.push_back(series);
    write_svg(path, plot);
  });
}

struct USurvivalParams {
  Common c;
  double rho = 0.5, s_max = -1.0;
  int L = 64, points = 20, replicas = 1000;
};

inline void run_u_survival(const USurvivalParams& p) {
  double lambda = gap_hint(EnvKind::east(), p.rho);
  double s_max = p.s_max > 0.0 ? p.s_max : 8.0 / lambda;
  if (p.points < 2) throw ValidationError("need at least 2 grid points");
  std::vector<double> grid;
  for (int i = 0; i < p.points; ++i) grid.push_back(s_max * i / (p.points - 1));
  USurvivalEstimate est = estimate_u(p.rho, p.L, grid, p.replicas, p.c.seed, p.c.workers);

  std::vector<CsvRow> rows;
  SvgSeries series;
  Topology topo = Topology::segment(p.L);
  for (size_t i = 0; i < grid.size(); ++i) {
    CsvRow row = base_row("u-survival", EnvKind::east(), p.rho, topo, 0.0, s_max, p.replicas,
                          p.c.seed);
    fill_estimate(row, est.u[i]);
    row.param1 = grid[i];
    row.param2 = est.survival[i].value;
    rows.push_back(row);
    series.x.push_back(grid[i]);
    series.y.push_back(est.u[i].value);
    series.yerr.push_back(1.96 * est.u[i].se);
  }
  CsvRow lam = base_row("u-survival:lambda-hat", EnvKind::east(), p.rho, topo, 0.0, s_max,
                        p.replicas, p.c.seed);
  fill_scalar(lam, lambda);
  rows.push_back(lam);
  emit(p.c, rows, [&](const std::string& path) {
    SvgPlot plot;
    plot.title = "profile source term";
    plot.xlabel = "s";
    plot.ylabel = "u(s)";
    series.label = "u(s)";
    plot.series.push_back(series);
    write_svg(path, plot);
  });
}

struct KappaParams {
  Common c;
  std::string kind = "east";
  double gamma = 1.0, rho = 0.5, horizon = -1.0;
  int L = 128, outer = 200, inner = 2;
};

inline void run_kappa(const KappaParams& p) {
  EnvKind kind = env_kind_from_string(p.kind, p.gamma);
  EnvParams env{kind, p.rho, Topology::ring(p.L)};
  KappaEstimate est = estimate_kappa(env, p.outer, p.inner, p.horizon, p.c.seed, p.c.workers);
  CsvRow row = base_row("kappa", kind, p.rho, env.topology, 0.0, est.inner_horizon, p.outer,
                        p.c.seed);
  fill_estimate(row, est.value);
  row.param1 = est.inner_horizon;
  row.param2 = p.inner;
  row.param3 = est.inner_pairs;
  emit(p.c, {row});
}

struct CriterionParams {
  Common c;
  std::string measure = "three-point";
  double rho = 0.5;
  std::vector<double> t_grid{0.5, 1.0, 2.0};
  std::vector<double> s_grid{0.5, 1.0, 2.0};
  std::vector<int> y_grid{1, 2, 3};
  int replicas = 4000;
};

inline void run_criterion(const CriterionParams& p) {
  std::vector<CsvRow> rows;
  if (p.measure == "three-point") {
    for (double t : p.t_grid)
      for (double s : p.s_grid)
        for (int y : p.y_grid) {
          EstimateWithCI est = correlator3(p.rho, t, s, y, p.replicas, p.c.seed, p.c.workers);
          int L = detail::anchored_L(t + s);
          CsvRow row = base_row("criterion:three-point", EnvKind::east(), p.rho,
                                Topology::segment(L), 0.0, t + s, p.replicas, p.c.seed);
          fill_estimate(row, est);
          row.param1 = t;
          row.param2 = s;
          row.param3 = y;
          rows.push_back(row);
        }
  } else if (p.measure == "orientation" || p.measure == "two-point") {
    for (double t : p.t_grid) {
      OrientationEstimate est =
          orientation_test(p.rho, t, p.y_grid, p.replicas, p.c.seed, p.c.workers);
      int L = detail::anchored_L(t);
      for (size_t i = 0; i < est.y.size(); ++i) {
        CsvRow row = base_row("criterion:" + p.measure, EnvKind::east(), p.rho,
                              Topology::segment(L), 0.0, t, p.replicas, p.c.seed);
        fill_estimate(row, p.measure == "orientation" ? est.centered[i] : est.two_point[i]);
        row.param1 = t;
        row.param3 = est.y[i];
        rows.push_back(row);
      }
    }
  } else {
    throw ValidationError("measure must be three-point, orientation or two-point");
  }
  emit(p.c, rows);
}

struct FrontParams {
  Common c;
  double rho = 0.5, horizon = 1000.0;
  int L = 4096, replicas = 40;
};

inline void run_front(const FrontParams& p) {
  batch_count(p.replicas);
  Topology topo = Topology::segment(p.L);
  std::vector<double> yspeed(p.replicas), fspeed(p.replicas);
  std::vector<uint64_t> viol(p.replicas), events(p.replicas);
  std::vector<uint8_t> hit(p.replicas);
  detail::Timer timer;
  parallel_replicas(p.replicas, p.c.workers, [&](int r) {
    CoupledResult res = coupled_run(p.rho, p.L, p.horizon, replica_seed(p.c.seed, "front", r));
    yspeed[r] = (res.y_final - res.y0) / res.t_end;
    fspeed[r] = (res.f_final - res.f0) / res.t_end;
    viol[r] = res.violations;
    events[r] = res.events;
    hit[r] = res.boundary_hit ? 1 : 0;
  });
  EstimateWithCI fe = batch_means(fspeed), ye = batch_means(yspeed);
  uint64_t total_events = 0, total_viol = 0;
  int hits = 0;
  for (int r = 0; r < p.replicas; ++r) {
    total_events += events[r];
    total_viol += viol[r];
    hits += hit[r];
  }
  fe.budget = {total_events, timer.seconds()};
  ye.budget = fe.budget;

  std::vector<CsvRow> rows;
  CsvRow rf = base_row("front:front-speed", EnvKind::east(), p.rho, topo, 0.0, p.horizon,
                       p.replicas, p.c.seed);
  fill_estimate(rf, fe);
  rows.push_back(rf);
  CsvRow ry = base_row("front:walker-speed", EnvKind::east(), p.rho, topo, -0.5, p.horizon,
                       p.replicas, p.c.seed);
  fill_estimate(ry, ye);
  rows.push_back(ry);
  CsvRow rv = base_row("front:coupling-violations", EnvKind::east(), p.rho, topo, 0.0, p.horizon,
                       p.replicas, p.c.seed);
  fill_scalar(rv, static_cast<double>(total_viol));
  rv.param1 = static_cast<double>(total_events);
  rows.push_back(rv);
  CsvRow rb = base_row("front:boundary-hits", EnvKind::east(), p.rho, topo, 0.0, p.horizon,
                       p.replicas, p.c.seed);
  fill_scalar(rb, hits);
  rows.push_back(rb);
  emit(p.c, rows);
}

struct ExactParams {
  Common c;
  std::string kind = "east";
  double gamma = 1.0, rho = 0.5, eps = 0.1;
  int L = 6;
};

inline void run_exact(const ExactParams& p) {
  EnvKind kind = env_kind_from_string(p.kind, p.gamma);
  exact::StateSpace space = exact::StateSpace::make(kind, p.L, p.rho);
  exact::Vec mu0 = exact::measure_vector(space);
  exact::SpMat Genv = exact::build_env_generator(space);
  double gap = exact::spectral_gap(Genv, mu0);

  exact::SpMat Gp = exact::build_ew_generator(space, p.eps);
  exact::SpMat Gm = exact::build_ew_generator(space, -p.eps);
  exact::Vec mu_p = exact::stationary_distribution(Gp);
  exact::Vec mu_m = exact::stationary_distribution(Gm);
  exact::Vec mu_zero = exact::stationary_distribution(exact::build_ew_generator(space, 0.0));

  double vp = 2.0 * p.eps * (2.0 * exact::mean_occupation_at_origin(space, mu_p) - 1.0);
  double vm = 2.0 * -p.eps * (2.0 * exact::mean_occupation_at_origin(space, mu_m) - 1.0);
  double stat_res = (exact::SpMat(Gp.transpose()) * mu_p).lpNorm<Eigen::Infinity>();
  double mu0_res = (mu_zero - mu0).lpNorm<Eigen::Infinity>();
  double tv = exact::tv_distance(mu_p, mu_m);
  double mean_occ = exact::mean_occupation_at_origin(space, mu0);

  Topology topo = Topology::ring(p.L);
  std::vector<CsvRow> rows;
  auto scalar_row = [&](const std::string& cmd, double eps_col, double value) {
    CsvRow r = base_row(cmd, kind, p.rho, topo, eps_col, 0.0, 0, p.c.seed);
    fill_scalar(r, value);
    rows.push_back(r);
  };
  scalar_row("exact:gap", 0.0, gap);
  scalar_row("exact:mean-occupation", 0.0, mean_occ);
  scalar_row("exact:velocity", p.eps, vp);
  scalar_row("exact:velocity", -p.eps, vm);
  scalar_row("exact:antisymmetry-residual", p.eps, std::abs(vp + vm));
  scalar_row("exact:stationarity-residual", p.eps, stat_res);
  scalar_row("exact:unperturbed-residual", 0.0, mu0_res);
  scalar_row("exact:tv-eps-pm", p.eps, tv);

  std::vector<std::string> failures;
  auto check = [&](const std::string& name, bool ok, double value) {
    std::cout << "check " << name << ": " << (ok ? "ok" : "FAIL") << " (" << format_g17(value)
              << ")\n";
    if (!ok) failures.push_back(name);
  };
  check("gap-positive", gap > 0.0, gap);
  check("stationarity-residual", stat_res < 1e-12, stat_res);
  check("unperturbed-stationary-matches-product", mu0_res < 1e-12, mu0_res);
  check("velocity-antisymmetry", std::abs(vp + vm) < 1e-10, std::abs(vp + vm));
  if (kind.family == EnvFamily::East || kind.family == EnvFamily::West) {
    double ve = exact::exact_velocity(EnvKind::east(), p.L, p.rho, p.eps);
    double vw = exact::exact_velocity(EnvKind::west(), p.L, p.rho, p.eps);
    scalar_row("exact:east-west-residual", p.eps, std::abs(ve - vw));
    check("east-west-equality", std::abs(ve - vw) < 1e-10, std::abs(ve - vw));
  }
  if (kind.family == EnvFamily::East)
    check("perturbed-measures-differ", tv > 1e-4, tv);
  if (kind.family == EnvFamily::IndependentSpinFlip) {
    check("spin-flip-gap-is-gamma", std::abs(gap - kind.gamma) < 1e-10, gap);
    check("spin-flip-velocity-zero", std::abs(vp) < 1e-10, vp);
  }
  if (p.rho == 0.5 && p.L <= 12) {
    double kap = exact::resolvent_kappa(kind, p.L, p.rho);
    scalar_row("exact:resolvent-kappa", 0.0, kap);
    if (kind.family == EnvFamily::IndependentSpinFlip)
      check("spin-flip-kappa-zero", std::abs(kap) < 1e-10, kap);
  }

  emit(p.c, rows);
  if (!failures.empty()) {
    std::string msg = "oracle invariant check failed:";
    for (const std::string& f : failures) msg += " " + f;
    throw SimulationError(msg);
  }
}

struct SeriesParams {
  Common c;
  std::string kind = "east";
  double gamma = 1.0, rho = 0.5, eps = 0.05;
  int L = 6, n_max = 4, grid_points = 200;
};

inline void run_series_check(const SeriesParams& p) {
  EnvKind kind = env_kind_from_string(p.kind, p.gamma);
  if (p.n_max < 0 || p.n_max > 6) throw ValidationError("n-max must lie in [0, 6]");
  exact::DysonSeries ds(kind, p.L, p.rho, p.eps, p.grid_points);
  exact::Vec f = ds.observable_occupation();
  exact::Vec j = ds.observable_drift();

  exact::StateSpace space = exact::StateSpace::make(kind, p.L, p.rho);
  exact::Vec mu_eps = exact::stationary_distribution(exact::build_ew_generator(space, p.eps));
  double exact_val = mu_eps.dot(f);
  double partial = ds.partial_sum(p.n_max, f);
  double tail = ds.tail_bound(p.n_max, f);
  std::cout << "note: bounds use the finite-L gap " << format_g17(ds.env_gap())
            << " as a stand-in for the infinite-volume rate\n";

  Topology topo = Topology::ring(p.L);
  std::vector<CsvRow> rows;
  std::vector<std::string> failures;
  for (int n = 0; n <= p.n_max; ++n) {
    double term = ds.term(n, f);
    double bound = ds.term_bound(n, f);
    CsvRow r = base_row("series-check:term", kind, p.rho, topo, p.eps, 0.0, 0, p.c.seed);
    fill_scalar(r, term);
    r.param1 = n;
    r.param2 = bound;
    rows.push_back(r);
    std::cout << "term " << n << ": " << format_g17(term) << " (bound " << format_g17(bound)
              << ")\n";
    if (!(std::abs(term) <= bound + 1e-8)) failures.push_back("term-bound-" + std::to_string(n));
  }
  auto scalar_row = [&](const std::string& cmd, double value, double p1 = 0.0) {
    CsvRow r = base_row(cmd, kind, p.rho, topo, p.eps, 0.0, 0, p.c.seed);
    fill_scalar(r, value);
    r.param1 = p1;
    rows.push_back(r);
  };
  scalar_row("series-check:gap", ds.env_gap());
  scalar_row("series-check:partial-sum", partial, p.n_max);
  scalar_row("series-check:stationary-average", exact_val);
  scalar_row("series-check:tail-bound", tail, p.n_max);
  double diff = std::abs(partial - exact_val);
  std::cout << "partial sum through n=" << p.n_max << ": " << format_g17(partial)
            << " vs stationary " << format_g17(exact_val) << " (tail bound " << format_g17(tail)
            << ")\n";
  if (!(diff <= tail + 1e-7)) failures.push_back("partial-sum-consistency");

  exact::EvenTermResiduals even{ds.term(0, j), ds.term(2, j)};
  scalar_row("series-check:even-residual", even.index0, 0.0);
  scalar_row("series-check:even-residual", even.index2, 2.0);
  if (!(std::abs(even.index0) < 1e-7)) failures.push_back("even-residual-0");
  if (!(std::abs(even.index2) < 1e-6)) failures.push_back("even-residual-2");

  emit(p.c, rows);
  if (!failures.empty()) {
    std::string msg = "series check failed:";
    for (const std::string& fmsg : failures) msg += " " + fmsg;
    throw SimulationError(msg);
  }
}

struct Figure3Params {
  Common c;
  double rho = 0.5, horizon = 2000.0, burn = -1.0;
  int L = 128, replicas = 64;
  std::vector<double> eps_grid;
};

inline void run_figure3(const Figure3Params& p) {
  std::vector<double> grid = p.eps_grid;
  if (grid.empty())
    for (int i = -8; i <= 8; ++i) grid.push_back(0.05 * i);
  EnvKind kind = EnvKind::east();
  EnvParams env{kind, p.rho, Topology::ring(p.L)};
  double burn = p.burn >= 0.0 ? p.burn : default_burn_in(kind, p.rho);

  std::vector<CsvRow> rows;
  SvgSeries series;
  for (double eps : grid) {
    EstimateWithCI est = estimate_velocity(env, eps, p.horizon, burn, p.replicas,
                                           derive_key(p.c.seed, hash_tag("figure3")), p.c.workers);
    CsvRow row = base_row("figure3", kind, p.rho, env.topology, eps, p.horizon, p.replicas,
                          p.c.seed);
    fill_estimate(row, est);
    row.param1 = burn;
    rows.push_back(row);
    series.x.push_back(eps);
    series.y.push_back(est.value);
    series.yerr.push_back(1.96 * est.se);
  }
  emit(p.c, rows, [&](const std::string& path) {
    SvgPlot plot;
    plot.title = "walker velocity vs bias";
    plot.xlabel = "eps";
    plot.ylabel = "velocity";
    series.label = "simulated";
    plot.series.push_back(series);
    write_svg(path, plot);
  });
}

struct Figure6Params {
  Common c;
  double rho = 0.5, eps = 0.1, horizon = 800.0, burn = -1.0;
  int L = 64, window = 10, replicas = 60, prediction_replicas = 2000;
};

inline void run_figure6(const Figure6Params& p) {
  EnvKind kind = EnvKind::east();
  EnvParams env{kind, p.rho, Topology::ring(p.L)};
  double burn = p.burn >= 0.0 ? p.burn : default_burn_in(kind, p.rho);
  ProfileEstimate prof =
      estimate_profile(env, p.eps, p.horizon, burn, p.window, p.replicas, p.c.seed, p.c.workers);
  FirstOrderProfile pred = first_order_profile(p.rho, p.window, p.prediction_replicas,
                                               derive_key(p.c.seed, hash_tag("figure6-pred")),
                                               p.c.workers);
  std::vector<CsvRow> rows;
  SvgSeries mc, fo;
  mc.color = "#2a6fb0";
  fo.color = "#c05020";
  for (size_t i = 0; i < prof.offsets.size(); ++i) {
    CsvRow row = base_row("figure6:simulated", kind, p.rho, env.topology, p.eps, p.horizon,
                          p.replicas, p.c.seed);
    fill_estimate(row, prof.density[i]);
    row.param1 = prof.offsets[i];
    rows.push_back(row);
    mc.x.push_back(prof.offsets[i]);
    mc.y.push_back(prof.density[i].value);
    mc.yerr.push_back(1.96 * prof.density[i].se);

    CsvRow rowp = base_row("figure6:first-order", kind, p.rho, env.topology, p.eps, pred.horizon,
                           p.prediction_replicas, p.c.seed);
    const EstimateWithCI& d = pred.deps[i];
    rowp.value = p.rho + p.eps * d.value;
    rowp.se = p.eps * d.se;
    rowp.ci_lo = rowp.value - 1.96 * rowp.se;
    rowp.ci_hi = rowp.value + 1.96 * rowp.se;
    rowp.n_batches = d.n_batches;
    rowp.runtime_s = d.budget.wall_s;
    rowp.param1 = pred.offsets[i];
    rows.push_back(rowp);
    fo.x.push_back(pred.offsets[i]);
    fo.y.push_back(rowp.value);
    fo.yerr.push_back(1.96 * rowp.se);
  }
  emit(p.c, rows, [&](const std::string& path) {
    SvgPlot plot;
    plot.title = "density around the walker";
    plot.xlabel = "offset x";
    plot.ylabel = "occupation";
    mc.label = "simulated";
    fo.label = "first order";
    plot.series.push_back(mc);
    plot.series.push_back(fo);
    write_svg(path, plot);
  });
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline void report_error(int code, const char* kind, const std::string& msg) {
  std::cerr << "eastwalk: code=" << code << " kind=" << kind << " msg=\"" << msg << "\"\n";
}

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"random walks on kinetically constrained spin chains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateParams sim;
  OptionBook sim_book;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "walker velocity on a ring");
  add_common(sim_cmd, sim_book, sim.c);
  add_opt(sim_cmd, sim_book, "kind", sim.kind, "east|west|fa1f|spinflip");
  add_opt(sim_cmd, sim_book, "gamma", sim.gamma, "spin refresh rate (spinflip)");
  add_opt(sim_cmd, sim_book, "rho", sim.rho, "equilibrium density");
  add_opt(sim_cmd, sim_book, "eps", sim.eps, "walker bias in [-1/2, 1/2]");
  add_opt(sim_cmd, sim_book, "L", sim.L, "ring size");
  add_opt(sim_cmd, sim_book, "horizon", sim.horizon, "simulated time");
  add_opt(sim_cmd, sim_book, "burn-in", sim.burn, "time discarded (<0: 10/gap)");
  add_opt(sim_cmd, sim_book, "replicas", sim.replicas, "independent replicas (>= 20)");
  sim_cmd->callback([&] {
    apply_config(sim_cmd, sim_book, sim.c.config);
    run_simulate(sim);
  });

  ProfileParams prof;
  OptionBook prof_book;
  CLI::App* prof_cmd = app.add_subcommand("profile", "density seen from the walker");
  add_common(prof_cmd, prof_book, prof.c);
  add_opt(prof_cmd, prof_book, "kind", prof.kind, "east|west|fa1f|spinflip");
  add_opt(prof_cmd, prof_book, "gamma", prof.gamma, "spin refresh rate (spinflip)");
  add_opt(prof_cmd, prof_book, "rho", prof.rho, "equilibrium density");
  add_opt(prof_cmd, prof_book, "eps", prof.eps, "walker bias");
  add_opt(prof_cmd, prof_book, "L", prof.L, "ring size");
  add_opt(prof_cmd, prof_book, "window", prof.window, "half-width W (offsets -W..W)");
  add_opt(prof_cmd, prof_book, "horizon", prof.horizon, "simulated time");
  add_opt(prof_cmd, prof_book, "burn-in", prof.burn, "time discarded (<0: 10/gap)");
  add_opt(prof_cmd, prof_book, "replicas", prof.replicas, "independent replicas");
  prof_cmd->callback([&] {
    apply_config(prof_cmd, prof_book, prof.c.config);
    run_profile(prof);
  });

  USurvivalParams us;
  OptionBook us_book;
  CLI::App* us_cmd = app.add_subcommand("u-survival", "first-ring survival and u(s)");
  add_common(us_cmd, us_book, us.c);
  add_opt(us_cmd, us_book, "rho", us.rho, "equilibrium density");
  add_opt(us_cmd, us_book, "L", us.L, "segment size");
  add_opt(us_cmd, us_book, "s-max", us.s_max, "grid end (<0: 8/gap)");
  add_opt(us_cmd, us_book, "points", us.points, "grid points");
  add_opt(us_cmd, us_book, "replicas", us.replicas, "independent replicas");
  us_cmd->callback([&] {
    apply_config(us_cmd, us_book, us.c.config);
    run_u_survival(us);
  });

  KappaParams kap;
  OptionBook kap_book;
  CLI::App* kap_cmd = app.add_subcommand("kappa", "cubic velocity coefficient, nested sampling");
  add_common(kap_cmd, kap_book, kap.c);
  add_opt(kap_cmd, kap_book, "kind", kap.kind, "east|west|fa1f|spinflip");
  add_opt(kap_cmd, kap_book, "gamma", kap.gamma, "spin refresh rate (spinflip)");
  add_opt(kap_cmd, kap_book, "rho", kap.rho, "must be 1/2");
  add_opt(kap_cmd, kap_book, "L", kap.L, "ring size");
  add_opt(kap_cmd, kap_book, "horizon", kap.horizon, "inner horizon (<0: 12/gap)");
  add_opt(kap_cmd, kap_book, "outer", kap.outer, "environment samples");
  add_opt(kap_cmd, kap_book, "inner", kap.inner, "trajectories per sample (>= 2)");
  kap_cmd->callback([&] {
    apply_config(kap_cmd, kap_book, kap.c.config);
    run_kappa(kap);
  });

  CriterionParams cri;
  OptionBook cri_book;
  CLI::App* cri_cmd = app.add_subcommand("criterion", "fixed-frame correlator grids");
  add_common(cri_cmd, cri_book, cri.c);
  add_opt(cri_cmd, cri_book, "measure", cri.measure, "three-point|orientation|two-point")
      ->check(CLI::IsMember({"three-point", "orientation", "two-point"}));
  add_opt(cri_cmd, cri_book, "rho", cri.rho, "equilibrium density");
  add_opt(cri_cmd, cri_book, "t-grid", cri.t_grid, "first times");
  add_opt(cri_cmd, cri_book, "s-grid", cri.s_grid, "second times (three-point)");
  add_opt(cri_cmd, cri_book, "y-grid", cri.y_grid, "probe offsets (>= 1)");
  add_opt(cri_cmd, cri_book, "replicas", cri.replicas, "independent replicas");
  cri_cmd->callback([&] {
    apply_config(cri_cmd, cri_book, cri.c.config);
    run_criterion(cri);
  });

  FrontParams fr;
  OptionBook fr_book;
  CLI::App* fr_cmd = app.add_subcommand("front", "front and degenerate edge walker, coupled");
  add_common(fr_cmd, fr_book, fr.c);
  add_opt(fr_cmd, fr_book, "rho", fr.rho, "equilibrium density");
  add_opt(fr_cmd, fr_book, "L", fr.L, "segment size");
  add_opt(fr_cmd, fr_book, "horizon", fr.horizon, "simulated time");
  add_opt(fr_cmd, fr_book, "replicas", fr.replicas, "independent replicas");
  fr_cmd->callback([&] {
    apply_config(fr_cmd, fr_book, fr.c.config);
    run_front(fr);
  });

  ExactParams ex;
  OptionBook ex_book;
  CLI::App* ex_cmd = app.add_subcommand("exact", "finite-ring oracle suite");
  add_common(ex_cmd, ex_book, ex.c);
  add_opt(ex_cmd, ex_book, "kind", ex.kind, "east|west|fa1f|spinflip");
  add_opt(ex_cmd, ex_book, "gamma", ex.gamma, "spin refresh rate (spinflip)");
  add_opt(ex_cmd, ex_book, "rho", ex.rho, "equilibrium density");
  add_opt(ex_cmd, ex_book, "eps", ex.eps, "walker bias");
  add_opt(ex_cmd, ex_book, "L", ex.L, "ring size (3..14)");
  ex_cmd->callback([&] {
    apply_config(ex_cmd, ex_book, ex.c.config);
    run_exact(ex);
  });

  SeriesParams ser;
  OptionBook ser_book;
  CLI::App* ser_cmd = app.add_subcommand("series-check", "expansion terms and bounds");
  add_common(ser_cmd, ser_book, ser.c);
  add_opt(ser_cmd, ser_book, "kind", ser.kind, "east|west|fa1f|spinflip");
  add_opt(ser_cmd, ser_book, "gamma", ser.gamma, "spin refresh rate (spinflip)");
  add_opt(ser_cmd, ser_book, "rho", ser.rho, "equilibrium density");
  add_opt(ser_cmd, ser_book, "eps", ser.eps, "walker bias");
  add_opt(ser_cmd, ser_book, "L", ser.L, "ring size (<= 12)");
  add_opt(ser_cmd, ser_book, "n-max", ser.n_max, "deepest term (<= 6)");
  add_opt(ser_cmd, ser_book, "grid-points", ser.grid_points, "quadrature grid size");
  ser_cmd->callback([&] {
    apply_config(ser_cmd, ser_book, ser.c.config);
    run_series_check(ser);
  });

  Figure3Params f3;
  OptionBook f3_book;
  CLI::App* f3_cmd = app.add_subcommand("figure3", "velocity sweep over a bias grid");
  add_common(f3_cmd, f3_book, f3.c);
  add_opt(f3_cmd, f3_book, "rho", f3.rho, "equilibrium density");
  add_opt(f3_cmd, f3_book, "L", f3.L, "ring size");
  add_opt(f3_cmd, f3_book, "horizon", f3.horizon, "simulated time per point");
  add_opt(f3_cmd, f3_book, "burn-in", f3.burn, "time discarded (<0: 10/gap)");
  add_opt(f3_cmd, f3_book, "replicas", f3.replicas, "replicas per point");
  add_opt(f3_cmd, f3_book, "eps-grid", f3.eps_grid, "bias values (default -0.4..0.4 step 0.05)");
  f3_cmd->callback([&] {
    apply_config(f3_cmd, f3_book, f3.c.config);
    run_figure3(f3);
  });

  Figure6Params f6;
  OptionBook f6_book;
  CLI::App* f6_cmd = app.add_subcommand("figure6", "profile window with first-order overlay");
  add_common(f6_cmd, f6_book, f6.c);
  add_opt(f6_cmd, f6_book, "rho", f6.rho, "equilibrium density");
  add_opt(f6_cmd, f6_book, "eps", f6.eps, "walker bias");
  add_opt(f6_cmd, f6_book, "L", f6.L, "ring size");
  add_opt(f6_cmd, f6_book, "window", f6.window, "half-width W");
  add_opt(f6_cmd, f6_book, "horizon", f6.horizon, "simulated time");
  add_opt(f6_cmd, f6_book, "burn-in", f6.burn, "time discarded (<0: 10/gap)");
  add_opt(f6_cmd, f6_book, "replicas", f6.replicas, "simulation replicas");
  add_opt(f6_cmd, f6_book, "prediction-replicas", f6.prediction_replicas,
          "replicas for the first-order curve");
  f6_cmd->callback([&] {
    apply_config(f6_cmd, f6_book, f6.c.config);
    run_figure6(f6);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    if (rc == 0) return 0;
    report_error(2, "validation", "command line parse error");
    return 2;
  } catch (const ValidationError& e) {
    report_error(2, "validation", e.what());
    return 2;
  } catch (const SimulationError& e) {
    report_error(3, "runtime", e.what());
    return 3;
  } catch (const std::exception& e) {
    report_error(3, "runtime", e.what());
    return 3;
  }
  return 0;
}

}  // namespace cli
}  // namespace eastwalk
