// Command-line surface: analyze | verify | geodesic | pair-check.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "finsler/flow.hpp"

namespace {

using finsler::FiberPoint;
using finsler::MetricSpec;
using json = nlohmann::ordered_json;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitHypotheses = 4;

[[noreturn]] void die(int code, const std::string& kind, const std::string& msg) {
  std::cerr << "error[" << kind << "]: " << msg << "\n";
  std::exit(code);
}

json load_spec_json(const std::string& arg) {
  std::string text = arg;
  if (!arg.empty() && arg.front() != '{') {
    std::ifstream in(arg);
    if (!in) die(kExitInput, "input", "cannot open metric spec file '" + arg + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    die(kExitInput, "input", std::string("metric spec is not valid JSON: ") + e.what());
  }
}

MetricSpec load_spec(const std::string& arg, const std::string& volume_expr) {
  MetricSpec spec = finsler::metric_from_spec(load_spec_json(arg));
  if (!volume_expr.empty() && volume_expr != "1")
    spec.volume = finsler::VolumeDensity::from_expression(volume_expr,
                                                          spec.kernel.dim());
  return spec;
}

Eigen::VectorXd parse_vector(const std::string& text, int dim,
                             const std::string& name) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      vals.push_back(std::stod(item, &pos));
      while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos])))
        ++pos;
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      die(kExitInput, "input", "bad number '" + item + "' in --" + name);
    }
  }
  if (static_cast<int>(vals.size()) != dim)
    die(kExitInput, "input",
        "--" + name + " needs " + std::to_string(dim) + " comma-separated values");
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

void emit(const json& report, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) die(kExitInput, "input", "cannot open output file '" + out_path + "'");
  out << report.dump(2) << "\n";
}

struct CommonOpts {
  std::string metric;
  std::string aux;
  std::string volume = "1";
  std::string out;
  std::uint64_t seed = 42;
  double tol = 1e-6;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_aux = false) {
  cmd->add_option("--metric", o.metric, "metric spec: JSON file path or inline JSON")
      ->required();
  auto* aux = cmd->add_option("--aux", o.aux,
                              "auxiliary metric spec (same format as --metric)");
  if (need_aux) aux->required();
  cmd->add_option("--volume", o.volume, "volume density sigma(x), expression in x1..xn");
  cmd->add_option("--out", o.out, "output path (default stdout)");
  cmd->add_option("--seed", o.seed, "PRNG seed");
  cmd->add_option("--tol", o.tol, "verdict tolerance");
}

int run_analyze(const CommonOpts& o, const std::string& x_text,
                const std::string& y_text) {
  MetricSpec spec = load_spec(o.metric, o.volume);
  const int n = spec.kernel.dim();
  FiberPoint p{parse_vector(x_text, n, "x"), parse_vector(y_text, n, "y")};
  if (!spec.kernel.in_domain(p.x))
    die(kExitInput, "input",
        "base point outside the metric domain (|x| < radius required)");
  if (p.y.norm() == 0.0) die(kExitInput, "input", "fiber point y must be nonzero");

  std::optional<MetricSpec> aux;
  if (!o.aux.empty()) {
    aux = load_spec(o.aux, "1");
    if (aux->kernel.dim() != n)
      die(kExitInput, "input", "--aux dimension differs from --metric");
  }

  const finsler::MetricJet mj = finsler::metric_jet(spec.kernel, spec.volume, p);
  const finsler::SprayData sp = finsler::spray(spec.kernel, p);
  const finsler::CurvaturePack cp =
      finsler::curvature_pack(spec.kernel, spec.volume, p);
  const finsler::IntegralValues iv = finsler::integral_values(
      spec.kernel, spec.volume, p, aux ? &aux->kernel : nullptr, o.tol);
  const finsler::AlphaForm af = finsler::alpha_form(spec.kernel, spec.volume, p);
  const finsler::BorderedDetChecks bd = finsler::bordered_det_checks(
      spec.kernel, aux ? &aux->kernel : nullptr, p);

  json report;
  report["command"] = "analyze";
  report["label"] = spec.kernel.label();
  report["dim"] = n;
  report["x"] = to_json(p.x);
  report["y"] = to_json(p.y);
  report["F"] = mj.F;
  report["det_g"] = mj.det_g;
  report["tau"] = mj.tau;
  report["S"] = cp.S;
  report["g"] = to_json(mj.g);
  report["g_inv"] = to_json(mj.g_inv);
  report["h"] = to_json(mj.h);
  report["y_low"] = to_json(mj.y_low);
  report["mean_cartan"] = to_json(mj.I);
  report["G"] = to_json(sp.G);
  report["N"] = to_json(sp.N);
  report["E"] = to_json(cp.E);
  report["E_alt"] = to_json(cp.E_alt);
  report["chi"] = to_json(cp.chi);
  report["chi_alt"] = to_json(cp.chi_alt);
  report["rank_E"] = finsler::rank_E(cp.E, 1e-8);
  report["lambda"] = iv.lambda;
  if (iv.f) report["f"] = *iv.f;
  if (iv.f_residual) report["f_residual"] = *iv.f_residual;
  if (iv.I0) report["I0"] = *iv.I0;
  if (iv.P_trace) report["P_trace"] = *iv.P_trace;
  if (iv.P_log) report["P_log"] = *iv.P_log;
  if (iv.rapcsak) report["rapcsak"] = to_json(*iv.rapcsak);
  report["alpha"] = {{"horizontal", to_json(af.horizontal)},
                     {"vertical", to_json(af.vertical)},
                     {"i_G_alpha", af.i_G_alpha}};
  report["bordered"] = {{"rund_residual", bd.rund_residual},
                        {"gg_residual", bd.gg_residual}};
  emit(report, o.out);
  return kExitPass;
}

const char* verdict_name(finsler::TheoremVerdict::Verdict v) {
  switch (v) {
    case finsler::TheoremVerdict::Verdict::Pass: return "pass";
    case finsler::TheoremVerdict::Verdict::Fail: return "fail";
    default: return "hypotheses_fail";
  }
}

int run_verify(const CommonOpts& o, int theorem, int samples, int trajectories) {
  MetricSpec spec = load_spec(o.metric, o.volume);
  finsler::VerifyTolerances tol;
  tol.chi = o.tol;
  tol.drift = o.tol;
  const finsler::TheoremVerdict v =
      theorem == 1 ? finsler::verify_theorem1(spec.kernel, spec.volume, samples,
                                              trajectories, o.seed, tol)
                   : finsler::verify_theorem2(spec.kernel, spec.volume, samples,
                                              trajectories, o.seed, tol);
  json report;
  report["command"] = "verify";
  report["theorem"] = theorem;
  report["label"] = spec.kernel.label();
  report["verdict"] = verdict_name(v.verdict);
  report["chi_max_norm"] = v.chi_max_norm;
  report["rank_E_modal"] = v.rank_E_modal;
  if (v.scalar_residual_max) report["scalar_residual_max"] = *v.scalar_residual_max;
  if (v.lambda_sample) report["lambda_sample"] = *v.lambda_sample;
  if (v.f_sample) report["f_sample"] = *v.f_sample;
  if (v.f_spread) report["f_spread"] = *v.f_spread;
  if (v.df_dy_max) report["df_dy_max"] = *v.df_dy_max;
  if (theorem == 2 && v.verdict != finsler::TheoremVerdict::Verdict::HypothesesFail)
    report["f_constant"] = (v.verdict == finsler::TheoremVerdict::Verdict::Pass);
  json drift = json::object();
  for (const auto& [name, e] : v.integral_drift.quantities)
    drift[name] = {{"initial", e.initial},
                   {"max_drift", e.max_drift},
                   {"t_at_max", e.t_at_max}};
  report["drift"] = drift;
  report["samples"] = v.samples;
  report["trajectories"] = v.trajectories;
  report["seed"] = v.seed;
  emit(report, o.out);
  switch (v.verdict) {
    case finsler::TheoremVerdict::Verdict::Pass: return kExitPass;
    case finsler::TheoremVerdict::Verdict::Fail: return kExitFail;
    default: return kExitHypotheses;
  }
}

int run_geodesic(const CommonOpts& o, const std::string& x0_text,
                 const std::string& y0_text, double t_end,
                 const std::string& controller, double dt, double rtol,
                 double atol, const std::string& track_text, int max_states) {
  MetricSpec spec = load_spec(o.metric, o.volume);
  const int n = spec.kernel.dim();
  const Eigen::VectorXd x0 = parse_vector(x0_text, n, "x0");
  const Eigen::VectorXd y0 = parse_vector(y0_text, n, "y0");

  std::optional<MetricSpec> aux;
  if (!o.aux.empty()) {
    aux = load_spec(o.aux, "1");
    if (aux->kernel.dim() != n)
      die(kExitInput, "input", "--aux dimension differs from --metric");
  }

  std::vector<std::string> track;
  if (!track_text.empty()) {
    std::stringstream ss(track_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item != "F" && item != "lambda" && item != "I0" && item != "f")
        die(kExitInput, "input",
            "--track accepts a comma-separated subset of F,lambda,I0,f");
      track.push_back(item);
    }
  }
  if (std::find(track.begin(), track.end(), "I0") != track.end() && !aux)
    die(kExitInput, "input", "--track I0 requires --aux");

  finsler::IntegratorController ctrl;
  if (controller == "fixed") {
    ctrl = finsler::IntegratorController::fixed_rk4(dt);
  } else if (controller == "adaptive") {
    ctrl = finsler::IntegratorController::adaptive(rtol, atol);
  } else {
    die(kExitInput, "input", "--controller must be 'fixed' or 'adaptive'");
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out);
    if (!file) die(kExitInput, "input", "cannot open output file '" + o.out + "'");
    out = &file;
  }

  // Header first so a failed run still leaves a parseable (truncated) file.
  *out << "t";
  for (int i = 1; i <= n; ++i) *out << ",x" << i;
  for (int i = 1; i <= n; ++i) *out << ",y" << i;
  for (const std::string& name : track) *out << "," << name;
  *out << "\n";

  finsler::Trajectory traj;
  finsler::DriftReport drift;
  try {
    traj = finsler::integrate_geodesic(spec.kernel, x0, y0, t_end, ctrl,
                                       max_states);
    std::set<std::string> which(track.begin(), track.end());
    drift = finsler::track_first_integrals(
        spec.kernel, aux ? &aux->kernel : nullptr, spec.volume, traj, which);
  } catch (const finsler::DomainError& e) {
    *out << "# truncated\n";
    die(kExitInput, "input", e.what());
  } catch (const finsler::ParamError& e) {
    *out << "# truncated\n";
    die(kExitInput, "input", e.what());
  } catch (const finsler::Error& e) {
    *out << "# truncated\n";
    die(kExitNumerical, "numerical", e.what());
  }

  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    *out << buf;
  };
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    put(traj.times[i]);
    for (int k = 0; k < n; ++k) {
      *out << ",";
      put(traj.states[i].x[k]);
    }
    for (int k = 0; k < n; ++k) {
      *out << ",";
      put(traj.states[i].y[k]);
    }
    for (const std::string& name : track) {
      *out << ",";
      put(traj.tracked[name][i]);
    }
    *out << "\n";
  }
  if (traj.status == finsler::Trajectory::Status::DomainExit)
    *out << "# domain_exit\n";

  std::cerr << "drift:";
  if (track.empty()) std::cerr << " (nothing tracked)";
  for (const std::string& name : track) {
    std::snprintf(buf, sizeof buf, "%.3g", drift.quantities[name].max_drift);
    std::cerr << " " << name << "=" << buf;
  }
  std::cerr << " states=" << traj.states.size() << "\n";
  return kExitPass;
}

int run_pair_check(const CommonOpts& o, int samples) {
  MetricSpec a = load_spec(o.metric, o.volume);
  MetricSpec b = load_spec(o.aux, "1");
  if (a.kernel.dim() != b.kernel.dim())
    die(kExitInput, "input", "--metric and --aux dimensions differ");

  double rapcsak_max = 0.0;
  double gap_max = 0.0;
  int used = 0;
  for (const FiberPoint& p :
       finsler::sample_fiber_points(a.kernel, samples, o.seed)) {
    if (!b.kernel.in_domain(p.x)) continue;
    ++used;
    rapcsak_max = std::max(
        rapcsak_max,
        finsler::rapcsak_residual(a.kernel, b.kernel, p).lpNorm<Eigen::Infinity>());
    const finsler::ProjectiveFactor pf =
        finsler::projective_factor(a.kernel, b.kernel, a.volume, p);
    gap_max = std::max(gap_max, std::abs(pf.P_trace - pf.P_log));
  }
  if (used == 0) die(kExitInput, "input", "no sample point lies in both domains");

  json report;
  report["command"] = "pair-check";
  report["labels"] = {a.kernel.label(), b.kernel.label()};
  report["rapcsak_max"] = rapcsak_max;
  report["P_trace_vs_log_max_gap"] = gap_max;
  report["projectively_related"] = rapcsak_max <= o.tol;
  report["samples"] = used;
  report["seed"] = o.seed;
  emit(report, o.out);
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finsler metric analysis and first-integral verification"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string x_text, y_text, x0_text, y0_text;
  std::string controller = "adaptive", track_text;
  int theorem = 1, samples = 20, trajectories = 10, max_states = 200;
  double t_end = 3.0, dt = 1e-2, rtol = 1e-10, atol = 1e-12;

  CLI::App* analyze = app.add_subcommand(
      "analyze", "evaluate metric, curvature and first-integral data at a point");
  add_common(analyze, o);
  analyze->add_option("--x", x_text, "base point, comma-separated")->required();
  analyze->add_option("--y", y_text, "fiber point, comma-separated")->required();

  CLI::App* verify =
      app.add_subcommand("verify", "run a theorem verification and report a verdict");
  add_common(verify, o);
  verify->add_option("--theorem", theorem, "1 or 2")
      ->check(CLI::IsMember({1, 2}))
      ->required();
  verify->add_option("--samples", samples, "static sample count");
  verify->add_option("--trajectories", trajectories, "geodesic count");

  CLI::App* geodesic =
      app.add_subcommand("geodesic", "integrate one geodesic and write CSV");
  add_common(geodesic, o);
  geodesic->add_option("--x0", x0_text, "initial base point")->required();
  geodesic->add_option("--y0", y0_text, "initial velocity")->required();
  geodesic->add_option("--t", t_end, "integration time (may be negative)");
  geodesic->add_option("--controller", controller, "fixed | adaptive");
  geodesic->add_option("--dt", dt, "fixed-step size");
  geodesic->add_option("--rtol", rtol, "adaptive relative tolerance");
  geodesic->add_option("--atol", atol, "adaptive absolute tolerance");
  geodesic->add_option("--track", track_text, "comma list from F,lambda,I0,f");
  geodesic->add_option("--max-states", max_states, "stored states after thinning");

  CLI::App* pair =
      app.add_subcommand("pair-check", "test two metrics for projective relatedness");
  add_common(pair, o, /*need_aux=*/true);
  pair->add_option("--samples", samples, "sample count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error[input]: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (analyze->parsed()) return run_analyze(o, x_text, y_text);
    if (verify->parsed()) return run_verify(o, theorem, samples, trajectories);
    if (geodesic->parsed())
      return run_geodesic(o, x0_text, y0_text, t_end, controller, dt, rtol, atol,
                          track_text, max_states);
    return run_pair_check(o, samples);
  } catch (const finsler::ParseError& e) {
    std::cerr << "error[input]: " << e.what() << "\n";
    return kExitInput;
  } catch (const finsler::ParamError& e) {
    std::cerr << "error[input]: " << e.what() << "\n";
    return kExitInput;
  } catch (const finsler::ArityError& e) {
    std::cerr << "error[input]: " << e.what() << "\n";
    return kExitInput;
  } catch (const finsler::DomainError& e) {
    std::cerr << "error[input]: " << e.what() << "\n";
    return kExitInput;
  } catch (const finsler::Error& e) {
    std::cerr << "error[numerical]: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return kExitNumerical;
  }
}
