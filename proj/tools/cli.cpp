#include "cli.hpp"

#include "jumpsteer/diffusive_sim.hpp"
#include "jumpsteer/direct_detect.hpp"
#include "jumpsteer/errors.hpp"
#include "jumpsteer/jump_sim.hpp"
#include "jumpsteer/parallel.hpp"
#include "jumpsteer/seeding.hpp"
#include "jumpsteer/steering.hpp"
#include "jumpsteer/unravelling.hpp"
#include "jumpsteer/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

namespace jumpsteer::cli {
namespace {

using json = nlohmann::ordered_json;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

enum class Print { json, csv, scalar };

struct Outcome {
  json summary = json::object();
  Table table;
  std::vector<std::uint64_t> seeds;
  int code = kExitOk;
  Print print = Print::json;
  std::string scalar;
};

struct Common {
  std::string output;
  std::string envelope;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool timing = false;
};

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }

json cell_value(const std::string& cell) {
  const char* first = cell.data();
  const char* last = first + cell.size();
  std::uint64_t u = 0;
  if (auto [p, ec] = std::from_chars(first, last, u); ec == std::errc() && p == last) return u;
  double d = 0.0;
  if (auto [p, ec] = std::from_chars(first, last, d); ec == std::errc() && p == last && std::isfinite(d)) return d;
  return cell;
}

json rows_as_objects(const Table& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i]] = cell_value(r[i]);
    rows.push_back(std::move(obj));
  }
  return rows;
}

std::string to_csv(const Table& t) {
  std::string s;
  auto line = [&s](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  line(t.columns);
  for (const auto& r : t.rows) line(r);
  return s;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw std::invalid_argument("failed writing '" + path + "'");
}

// "a:b:k" expands to k evenly spaced values from a to b.
std::vector<double> expand_reals(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& item : items) {
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      out.push_back(std::stod(item));
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    if (c2 == std::string::npos) throw std::invalid_argument("range '" + item + "' must be start:stop:count");
    const double a = std::stod(item.substr(0, c1));
    const double b = std::stod(item.substr(c1 + 1, c2 - c1 - 1));
    const int k = std::stoi(item.substr(c2 + 1));
    if (k < 1) throw std::invalid_argument("range '" + item + "' needs a positive count");
    for (int i = 0; i < k; ++i) out.push_back(k == 1 ? a : a + (b - a) * i / (k - 1));
  }
  return out;
}

MEParams ratio_params(double ratio) {
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) throw std::invalid_argument("R must be a finite non-negative number");
  return MEParams::from_ratio(ratio);
}

void check_eta(double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in (0, 1]");
}

struct RunFlags {
  std::uint64_t n_jumps = 10000;
  std::uint64_t n_burn = 10;
  std::size_t n_traj = 0;
  double jump_dt = 0.0;
  double dt = 0.0;
  double t_total = 0.0;
  double t_burn = 0.0;
  std::string scheme = "milstein";
  CLI::Option* n_traj_opt = nullptr;
  CLI::Option* dt_opt = nullptr;
  CLI::Option* t_total_opt = nullptr;
  CLI::Option* t_burn_opt = nullptr;

  void add(CLI::App* sub) {
    sub->add_option("--n-jumps", n_jumps, "Recorded clicks per jump trajectory")->capture_default_str();
    sub->add_option("--n-burn", n_burn, "Discarded clicks per jump trajectory")->capture_default_str();
    n_traj_opt = sub->add_option("--n-traj", n_traj, "Trajectories per point (default: 10 jump, 1 diffusive)");
    sub->add_option("--jump-dt", jump_dt, "Jump integrator step (default 1e-3/gamma_sigma)");
    dt_opt = sub->add_option("--dt", dt, "SDE step (default 1e-3/gamma_sigma)");
    t_total_opt = sub->add_option("--t-total", t_total, "SDE averaging time (default 2e4/gamma_sigma)");
    t_burn_opt = sub->add_option("--t-burn", t_burn, "SDE burn-in time (default 20/gamma_sigma)");
    sub->add_option("--scheme", scheme, "SDE scheme")
        ->check(CLI::IsMember({"euler", "milstein"}))
        ->capture_default_str();
  }

  SteeringRunConfig config(std::size_t threads) const {
    SteeringRunConfig run;
    run.n_jumps = n_jumps;
    run.n_burn = n_burn;
    run.jump_dt = jump_dt;
    if (n_traj_opt->count()) {
      if (n_traj < 1) throw std::invalid_argument("--n-traj must be at least 1");
      run.jump_trajectories = n_traj;
      run.diffusive_trajectories = n_traj;
    }
    if (dt_opt->count()) run.sde_dt = dt;
    if (t_total_opt->count()) run.t_total = t_total;
    if (t_burn_opt->count()) run.t_burn = t_burn;
    run.sde_scheme = parse_sde_scheme(scheme);
    run.threads = threads;
    return run;
  }
};

const std::vector<std::string> kEstimateColumns = {"S", "stderr", "term1", "term2"};

void append_estimate(std::vector<std::string>& row, const SteeringEstimate& e) {
  row.push_back(fmt(e.s.value));
  row.push_back(fmt(e.s.error));
  row.push_back(fmt(e.term1.value));
  row.push_back(fmt(e.term2.value));
}

json estimate_json(const SteeringEstimate& e) {
  return json{{"mode", std::string(to_string(e.mode))},
              {"S", e.s.value},
              {"stderr", e.s.error},
              {"term1", e.term1.value},
              {"term1_stderr", e.term1.error},
              {"term2", e.term2.value},
              {"term2_stderr", e.term2.error},
              {"f_n", e.f_n}};
}

json option_echo(const CLI::App* app) {
  json cfg = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "version") continue;
    if (opt->count()) {
      const auto& res = opt->results();
      if (opt->get_type_size() == 0) {
        cfg[name] = true;
      } else if (res.size() == 1) {
        cfg[name] = res.front();
      } else {
        cfg[name] = res;
      }
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

Outcome run_simulate_jump(const Common& common, double ratio, double eta, double phi, const std::string& n_text,
                          const std::string& unravelling, const RunFlags& flags) {
  check_eta(eta);
  const MEParams params = ratio_params(ratio);
  const bool z_scheme = unravelling == "z";
  std::vector<double> phis{phi};
  if (!n_text.empty() && !z_scheme) {
    const Settings n = Settings::parse(n_text);
    if (n.is_infinite()) throw std::invalid_argument("simulate-jump: --n must be finite");
    phis.clear();
    for (int j = 1; j <= n.count(); ++j) phis.push_back(j * std::numbers::pi / n.count());
  }
  const std::size_t n_traj = flags.n_traj_opt->count() ? flags.n_traj : 10;
  if (n_traj < 1) throw std::invalid_argument("--n-traj must be at least 1");

  JumpRunConfig cfg;
  cfg.n_burn = flags.n_burn;
  cfg.n_jumps = flags.n_jumps;
  cfg.dt = flags.jump_dt;

  Outcome res;
  res.table.columns = {"setting", "phi", "abs_sigma_phi", "abs_sigma_phi_se", "x", "x_se", "z", "z_se",
                       "transverse", "transverse_se", "jumps", "time", "seed"};
  double term1 = 0.0;
  double term1_var = 0.0;
  for (std::size_t j = 0; j < phis.size(); ++j) {
    const std::uint64_t seed = derive_seed(common.seed, j);
    const JumpScheme scheme = z_scheme ? JumpScheme::direct(eta) : JumpScheme::adaptive_phi(eta, phis[j]);
    const TrajectoryStats st = simulate_jumps_pooled(params, scheme, cfg, seed, n_traj, common.threads);
    const Estimate a = st.estimate(Observable::abs_sigma_phi);
    const Estimate x = st.estimate(Observable::x);
    const Estimate z = st.estimate(Observable::z);
    const Estimate tr = st.estimate(Observable::transverse);
    term1 += a.value;
    term1_var += a.error * a.error;
    res.seeds.push_back(seed);
    res.table.rows.push_back({fmt(std::uint64_t{j}), fmt(z_scheme ? 0.0 : phis[j]), fmt(a.value), fmt(a.error),
                              fmt(x.value), fmt(x.error), fmt(z.value), fmt(z.error), fmt(tr.value),
                              fmt(tr.error), fmt(st.jumps), fmt(st.total_time()), fmt(seed)});
  }
  const double k = static_cast<double>(phis.size());
  res.summary = json{{"subcommand", "simulate-jump"}, {"R", ratio}, {"eta", eta}, {"unravelling", unravelling},
                     {"trajectories", n_traj}};
  if (!z_scheme) {
    res.summary["term1"] = term1 / k;
    res.summary["term1_stderr"] = std::sqrt(term1_var) / k;
  }
  res.summary["rows"] = rows_as_objects(res.table);
  return res;
}

Outcome run_simulate_diffusion(const Common& common, double ratio, double eta, const RunFlags& flags) {
  check_eta(eta);
  const MEParams params = ratio_params(ratio);
  const SteeringRunConfig run = flags.config(common.threads);
  const SDEConfig base = run.sde_config(params, common.seed);
  base.validate();
  const std::size_t n_traj = run.diffusive_trajectories;

  std::vector<TrajectoryStats> per(n_traj);
  parallel_for(n_traj, common.threads, [&](std::size_t k) {
    SDEConfig cfg = base;
    cfg.seed = derive_seed(common.seed, k);
    per[k] = simulate_diffusive(params, eta, cfg);
  });

  Outcome res;
  res.table.columns = {"traj", "seed", "x", "x_se", "abs_x", "abs_x_se", "z", "z_se",
                       "transverse", "transverse_se", "var_x", "var_z", "time"};
  TrajectoryStats pooled;
  for (std::size_t k = 0; k < n_traj; ++k) {
    const TrajectoryStats& st = per[k];
    pooled.merge(st);
    const std::uint64_t seed = derive_seed(common.seed, k);
    const Estimate x = st.estimate(Observable::x);
    const Estimate a = st.estimate(Observable::abs_sigma_phi);
    const Estimate z = st.estimate(Observable::z);
    const Estimate tr = st.estimate(Observable::transverse);
    res.seeds.push_back(seed);
    res.table.rows.push_back({fmt(std::uint64_t{k}), fmt(seed), fmt(x.value), fmt(x.error), fmt(a.value),
                              fmt(a.error), fmt(z.value), fmt(z.error), fmt(tr.value), fmt(tr.error),
                              fmt(st.averages.variance(Observable::x, Observable::x_squared)),
                              fmt(st.averages.variance(Observable::z, Observable::z_squared)),
                              fmt(st.total_time())});
  }
  const Estimate a = pooled.estimate(Observable::abs_sigma_phi);
  const Estimate tr = pooled.estimate(Observable::transverse);
  const Estimate z = pooled.estimate(Observable::z);
  res.summary = json{{"subcommand", "simulate-diffusion"},
                     {"R", ratio},
                     {"eta", eta},
                     {"scheme", std::string(to_string(base.scheme))},
                     {"dt", base.dt},
                     {"trajectories", n_traj},
                     {"abs_x", a.value},
                     {"abs_x_stderr", a.error},
                     {"transverse", tr.value},
                     {"transverse_stderr", tr.error},
                     {"z", z.value},
                     {"z_stderr", z.error},
                     {"var_x", pooled.averages.variance(Observable::x, Observable::x_squared)},
                     {"rows", rows_as_objects(res.table)}};
  return res;
}

Outcome run_direct_detect(double ratio, double eta) {
  check_eta(eta);
  const MEParams params = ratio_params(ratio);
  const DestinationProbabilities p = jump_destination_probs(params, eta);
  const ZUnravellingAverage avg = ez_average_detail(params, eta);
  Outcome res;
  res.table.columns = {"R", "eta", "p_plus", "p_minus", "mean_dwell_time", "ez_average", "quadrature_error"};
  res.table.rows.push_back({fmt(ratio), fmt(eta), fmt(p.north), fmt(p.south), fmt(avg.mean_dwell_time),
                            fmt(avg.transverse), fmt(avg.quadrature_error)});
  res.summary = json{{"subcommand", "direct-detect"},
                     {"R", ratio},
                     {"eta", eta},
                     {"p_plus", p.north},
                     {"p_minus", p.south},
                     {"mean_dwell_time", avg.mean_dwell_time},
                     {"ez_average", avg.transverse},
                     {"quadrature_error", avg.quadrature_error}};
  return res;
}

Outcome run_sweep(const Common& common, const std::vector<std::string>& eta_items,
                  const std::vector<std::string>& ratio_items, const std::vector<std::string>& n_items,
                  const std::vector<std::string>& mode_items, const RunFlags& flags, std::ostream& err) {
  const std::vector<double> etas = expand_reals(eta_items);
  const std::vector<double> ratios = expand_reals(ratio_items);
  for (double e : etas) check_eta(e);
  for (double r : ratios) ratio_params(r);
  std::vector<Settings> ns;
  for (const auto& s : n_items) ns.push_back(Settings::parse(s));
  std::vector<Mode> modes;
  for (const auto& m : mode_items) modes.push_back(parse_mode(m));

  const auto points = sweep_grid(etas, ratios, ns, modes);
  const std::vector<SweepRow> rows = sweep(points, flags.config(common.threads), common.seed);

  Outcome res;
  res.print = Print::csv;
  res.table.columns = {"eta", "R", "n", "mode", "S", "stderr", "term1", "term2", "seed", "walltime_s"};
  std::size_t failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    std::vector<std::string> row{fmt(r.point.eta), fmt(r.point.ratio), r.point.n.label(),
                                 std::string(to_string(r.point.mode))};
    if (r.estimate) {
      append_estimate(row, *r.estimate);
    } else {
      ++failed;
      err << "point " << i << " failed: " << r.error << '\n';
      for (int k = 0; k < 4; ++k) row.emplace_back("nan");
    }
    row.push_back(fmt(r.seed));
    row.push_back(common.timing ? fmt(r.walltime_s) : "0");
    res.seeds.push_back(r.seed);
    res.table.rows.push_back(std::move(row));
  }
  res.summary = json{{"subcommand", "steering-sweep"}, {"points", rows.size()}, {"failed", failed}};
  if (failed) res.code = kExitNumeric;
  return res;
}

Outcome run_find_eta_c(const Common& common, double ratio, const std::string& n_text, const std::string& mode_text,
                       const EtaSearchConfig& search, const RunFlags& flags) {
  const MEParams params = ratio_params(ratio);
  const Settings n = Settings::parse(n_text);
  const Mode mode = parse_mode(mode_text);
  const ThresholdResult r = find_eta_c(params, n, mode, flags.config(common.threads), search, common.seed);
  Outcome res;
  res.table.columns = {"eta", "S", "stderr", "term1", "term2"};
  for (const auto& e : r.evaluations) {
    std::vector<std::string> row{fmt(e.eta)};
    append_estimate(row, e.estimate);
    res.table.rows.push_back(std::move(row));
  }
  res.seeds.push_back(common.seed);
  res.summary = json{{"subcommand", "find-eta-c"},
                     {"R", ratio},
                     {"n", n.label()},
                     {"mode", mode_text},
                     {"eta_c", r.eta_c},
                     {"bracket_width", r.bracket_width},
                     {"noise_limited", r.noise_limited},
                     {"evaluations", rows_as_objects(res.table)}};
  return res;
}

Outcome run_find_r_opt(const Common& common, double eta, const std::string& n_text, const std::string& mode_text,
                       const RatioSearchConfig& search, const RunFlags& flags) {
  check_eta(eta);
  const Settings n = Settings::parse(n_text);
  const Mode mode = parse_mode(mode_text);
  const RatioOptimum r = find_r_opt(eta, n, mode, flags.config(common.threads), search, common.seed);
  Outcome res;
  res.table.columns = {"R", "S", "stderr", "term1", "term2"};
  for (const auto& g : r.grid) {
    std::vector<std::string> row{fmt(g.ratio)};
    append_estimate(row, g.estimate);
    res.table.rows.push_back(std::move(row));
  }
  res.seeds.push_back(common.seed);
  res.summary = json{{"subcommand", "find-r-opt"},
                     {"eta", eta},
                     {"n", n.label()},
                     {"mode", mode_text},
                     {"violation", r.violation},
                     {"R_opt", r.r_opt},
                     {"S_max", r.at_opt.s.value},
                     {"S_max_stderr", r.at_opt.s.error},
                     {"local_maxima", r.local_maxima},
                     {"at_opt", estimate_json(r.at_opt)}};
  if (!r.violation) res.code = kExitNegative;
  return res;
}

DiffusiveUnravelling parse_unravelling(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("unravelling must be an object");
  const std::size_t L = j.at("L").get<std::size_t>();
  DiffusiveUnravelling u;
  u.etas = j.at("etas").get<std::vector<double>>();
  if (u.etas.size() != L) throw std::invalid_argument("etas must have L entries");
  const json& rows = j.at("upsilon");
  if (!rows.is_array() || rows.size() != L) throw std::invalid_argument("upsilon must have L rows");
  u.upsilon = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
  for (std::size_t r = 0; r < L; ++r) {
    if (!rows[r].is_array() || rows[r].size() != L) throw std::invalid_argument("upsilon rows must have L entries");
    for (std::size_t c = 0; c < L; ++c) {
      const json& z = rows[r][c];
      if (!z.is_array() || z.size() != 2) throw std::invalid_argument("upsilon entries must be [re, im]");
      u.upsilon(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = {z[0].get<double>(), z[1].get<double>()};
    }
  }
  validate_structure(u);
  return u;
}

Outcome run_nogo_check(const std::string& input) {
  json doc;
  if (input == "-") {
    doc = json::parse(std::cin);
  } else {
    std::ifstream f(input);
    if (!f) throw std::invalid_argument("cannot open '" + input + "'");
    doc = json::parse(f);
  }
  const json* list = &doc;
  json wrapped;
  if (doc.is_object() && doc.contains("unravellings")) {
    list = &doc["unravellings"];
  } else if (doc.is_object()) {
    wrapped = json::array({doc});
    list = &wrapped;
  }
  if (!list->is_array()) throw std::invalid_argument("expected an array of unravellings");
  std::vector<DiffusiveUnravelling> set;
  for (const auto& j : *list) set.push_back(parse_unravelling(j));
  const NoGoCertificate cert = nogo_certificate(set);

  Outcome res;
  res.table.columns = {"member", "L", "max_eta", "lambda_min", "tolerance", "dominated"};
  for (const auto& w : cert.witnesses) {
    res.table.rows.push_back({fmt(std::uint64_t{w.index}), fmt(std::uint64_t{cert.channels}), fmt(w.max_eta),
                              fmt(w.lambda_min), fmt(w.tolerance), w.dominated ? "true" : "false"});
  }
  json members = json::array();
  for (const auto& w : cert.witnesses) {
    members.push_back(
        json{{"member", w.index}, {"max_eta", w.max_eta}, {"lambda_min", w.lambda_min}, {"dominated", w.dominated}});
  }
  res.summary = json{{"subcommand", "nogo-check"},
                     {"certificate", cert.found},
                     {"channels", cert.channels},
                     {"efficiencies_in_nogo_regime", cert.efficiencies_in_nogo_regime},
                     {"members", members}};
  if (!cert.found) res.code = kExitNegative;
  return res;
}

Outcome run_fn_bound(const std::string& n_text) {
  const Settings n = Settings::parse(n_text);
  const double f = f_bound(n);
  Outcome res;
  res.print = Print::scalar;
  res.scalar = fmt(f);
  res.table.columns = {"n", "f"};
  res.table.rows.push_back({n.label(), fmt(f)});
  res.summary = json{{"subcommand", "fn-bound"}, {"n", n.label()}, {"f", f}};
  return res;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string version_string() {
  return std::string("jumpsteer ") + kVersion + " (csv schema " + std::to_string(kCsvSchema) + ", envelope schema " +
         std::to_string(kEnvelopeSchema) + ")";
}

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum-trajectory simulations of a driven, damped qubit and EPR-steering tests", "jumpsteer"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Common common;
  common.threads = default_thread_count();
  app.add_option("--seed", common.seed, "Base seed")->capture_default_str();
  app.add_option("--threads", common.threads, "Worker threads (default: JUMPSTEER_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("-o,--output", common.output, "CSV output path");
  app.add_option("--json", common.envelope, "Write a JSON result envelope to this path");
  app.add_flag("--timing", common.timing, "Record wall time in sweep rows");

  std::map<std::string, std::function<Outcome()>> handlers;
  auto subcommand = [&app](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    return sub;
  };

  double ratio = 0.0;
  double eta = 0.0;
  double phi = 0.0;
  std::string n_text;
  std::string mode_text = "jump";
  std::string unravelling = "phi";
  RunFlags flags;

  {
    CLI::App* sub = subcommand("simulate-jump", "Simulate adaptive-phi or direct-detection jump trajectories");
    sub->add_option("--R,--ratio", ratio, "gamma_+ / gamma_-")->required();
    sub->add_option("--eta", eta, "Detection efficiency")->required();
    sub->add_option("--phi", phi, "Equatorial angle of the adaptive scheme")->capture_default_str();
    sub->add_option("--n", n_text, "Simulate the n settings phi_j = j pi / n instead of --phi");
    sub->add_option("--unravelling", unravelling, "phi (adaptive local oscillator) or z (direct detection)")
        ->check(CLI::IsMember({"phi", "z"}))
        ->capture_default_str();
    flags.add(sub);
    handlers[sub->get_name()] = [&] {
      return run_simulate_jump(common, ratio, eta, phi, n_text, unravelling, flags);
    };
  }
  RunFlags diff_flags;
  {
    CLI::App* sub = subcommand("simulate-diffusion", "Simulate homodyne (diffusive) trajectories");
    sub->add_option("--R,--ratio", ratio, "gamma_+ / gamma_-")->required();
    sub->add_option("--eta", eta, "Detection efficiency")->required();
    diff_flags.add(sub);
    handlers[sub->get_name()] = [&] { return run_simulate_diffusion(common, ratio, eta, diff_flags); };
  }
  {
    CLI::App* sub = subcommand("direct-detect", "Jump-destination probabilities and the z-unravelling average");
    sub->add_option("--R,--ratio", ratio, "gamma_+ / gamma_-")->required();
    sub->add_option("--eta", eta, "Detection efficiency")->required();
    handlers[sub->get_name()] = [&] { return run_direct_detect(ratio, eta); };
  }

  std::vector<std::string> eta_items;
  std::vector<std::string> ratio_items;
  std::vector<std::string> n_items{"inf"};
  std::vector<std::string> mode_items{"jump"};
  RunFlags sweep_flags;
  {
    CLI::App* sub = subcommand("steering-sweep", "Steering parameter over an eta x R x n x mode grid (CSV)");
    sub->add_option("--eta", eta_items, "Efficiencies; comma list or start:stop:count")->delimiter(',');
    sub->add_option("--R,--ratio", ratio_items, "Ratios; comma list or start:stop:count")->delimiter(',');
    sub->add_option("--n", n_items, "Setting counts or inf")->delimiter(',')->capture_default_str();
    sub->add_option("--mode", mode_items, "jump and/or diffusive")->delimiter(',')->capture_default_str();
    sweep_flags.add(sub);
    handlers[sub->get_name()] = [&] {
      return run_sweep(common, eta_items, ratio_items, n_items, mode_items, sweep_flags, err);
    };
  }

  EtaSearchConfig eta_search;
  RunFlags eta_flags;
  std::string eta_n = "inf";
  {
    CLI::App* sub = subcommand("find-eta-c", "Critical efficiency where the steering parameter changes sign");
    sub->add_option("--R,--ratio", ratio, "gamma_+ / gamma_-")->required();
    sub->add_option("--n", eta_n, "Setting count or inf")->capture_default_str();
    sub->add_option("--mode", mode_text, "jump or diffusive")->capture_default_str();
    sub->add_option("--lo", eta_search.lo, "Lower end of the eta bracket")->capture_default_str();
    sub->add_option("--hi", eta_search.hi, "Upper end of the eta bracket")->capture_default_str();
    sub->add_option("--tol", eta_search.tolerance, "Final bracket width")->capture_default_str();
    sub->add_option("--sigmas", eta_search.significance, "Stop once |S| is within this many stderrs")
        ->capture_default_str();
    sub->add_option("--max-evals", eta_search.max_evaluations, "Evaluation budget")->capture_default_str();
    eta_flags.add(sub);
    handlers[sub->get_name()] = [&] {
      return run_find_eta_c(common, ratio, eta_n, mode_text, eta_search, eta_flags);
    };
  }

  RatioSearchConfig ratio_search;
  RunFlags ratio_flags;
  std::string ratio_n = "4";
  std::string ratio_mode = "jump";
  {
    CLI::App* sub = subcommand("find-r-opt", "Ratio R maximizing the steering parameter at fixed eta");
    sub->add_option("--eta", eta, "Detection efficiency")->required();
    sub->add_option("--n", ratio_n, "Setting count or inf")->capture_default_str();
    sub->add_option("--mode", ratio_mode, "jump or diffusive")->capture_default_str();
    sub->add_option("--r-min", ratio_search.r_min, "Smallest grid ratio")->capture_default_str();
    sub->add_option("--r-max", ratio_search.r_max, "Largest grid ratio")->capture_default_str();
    sub->add_option("--grid", ratio_search.grid_points, "Grid points")->capture_default_str();
    sub->add_option("--refine", ratio_search.refine_iterations, "Golden-section iterations")
        ->capture_default_str();
    ratio_flags.add(sub);
    handlers[sub->get_name()] = [&] {
      return run_find_r_opt(common, eta, ratio_n, ratio_mode, ratio_search, ratio_flags);
    };
  }

  std::string nogo_input;
  {
    CLI::App* sub = subcommand("nogo-check", "Dominance certificate for a set of diffusive unravellings");
    sub->add_option("input,--input", nogo_input, "JSON file, or - for stdin")->required();
    handlers[sub->get_name()] = [&] { return run_nogo_check(nogo_input); };
  }

  std::string fn_n;
  {
    CLI::App* sub = subcommand("fn-bound", "Steering bound f(n)");
    sub->add_option("--n", fn_n, "Setting count or inf")->required();
    handlers[sub->get_name()] = [&] { return run_fn_bound(fn_n); };
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const auto start = std::chrono::steady_clock::now();
  Outcome res;
  try {
    res = handlers.at(sub->get_name())();
  } catch (const NegativeVerdict& e) {
    err << "negative verdict: " << e.what() << '\n';
    out << json{{"subcommand", sub->get_name()}, {"verdict", "negative"}, {"message", e.what()}}.dump() << '\n';
    return kExitNegative;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  const double walltime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  try {
    if (!common.output.empty()) write_file(common.output, to_csv(res.table));
    if (!common.envelope.empty()) {
      json config = option_echo(&app);
      config.update(option_echo(sub));
      json rows = json::array();
      for (const auto& r : res.table.rows) rows.push_back(r);
      const json env{{"artifact", "jumpsteer"},
                     {"version", kVersion},
                     {"schema", kEnvelopeSchema},
                     {"csv_schema", kCsvSchema},
                     {"subcommand", sub->get_name()},
                     {"argv", args},
                     {"config", config},
                     {"summary", res.summary},
                     {"columns", res.table.columns},
                     {"rows", rows},
                     {"seeds", res.seeds},
                     {"exit_code", res.code},
                     {"walltime_s", walltime}};
      write_file(common.envelope, env.dump(2) + "\n");
    }
  } catch (const std::invalid_argument& e) {
    err << "output: " << e.what() << '\n';
    return kExitUsage;
  }

  switch (res.print) {
    case Print::csv:
      out << to_csv(res.table);
      break;
    case Print::scalar:
      out << res.scalar << '\n';
      break;
    case Print::json:
      out << res.summary.dump() << '\n';
      break;
  }
  return res.code;
}

int parse_and_dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return parse_and_dispatch(args, std::cout, std::cerr);
}

}  // namespace jumpsteer::cli
