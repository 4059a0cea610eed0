// Command-line front end: data ingestion, pipeline orchestration, report and
// plot-data emission.  One command per process; every command is
// deterministic given (input bytes, flags, seed).
//
// Exit status: 0 success, 1 usage/configuration error, 2 data error,
// 3 numerical failure (a diagnostics file is written alongside).
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "thorne/thorne.hpp"

namespace {

using nlohmann::json;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// One numeric per line; blank lines and '#' comments are ignored.
std::vector<double> read_variates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw thorne::data_error("cannot open input: " + path);
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r\n");
    const std::string tok = line.substr(b, e - b + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size() || !std::isfinite(v))
        throw std::invalid_argument("not a finite numeric");
      out.push_back(v);
    } catch (const std::exception&) {
      throw thorne::data_error("bad numeric on line " + std::to_string(lineno) +
                               ": '" + tok + "'");
    }
  }
  if (out.empty()) throw thorne::data_error("no variates in " + path);
  return out;
}

/// Differences of logs of successive values; requires positive variates.
std::vector<double> log_return_transform(const std::vector<double>& v) {
  if (v.size() < 2)
    throw thorne::data_error("log-returns need at least two variates");
  std::vector<double> r;
  r.reserve(v.size() - 1);
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i - 1] > 0.0) || !(v[i] > 0.0))
      throw thorne::data_error(
          "log-returns require strictly positive variates");
    r.push_back(std::log(v[i]) - std::log(v[i - 1]));
  }
  return r;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw thorne::data_error("cannot open for writing: " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

/// Accepts either a bare model document or a fit-report document that wraps
/// one under the "model" key.
thorne::ThorneModel load_model_arg(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw thorne::data_error("cannot open model: " + path);
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw thorne::data_error(std::string("model JSON parse failure: ") +
                             e.what());
  }
  if (j.is_object() && !j.contains("components") && j.contains("model"))
    return thorne::model_from_json(j.at("model"));
  return thorne::model_from_json(j);
}

std::string output_stem(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const auto sep = path.find_last_of('/');
  if (dot == std::string::npos || (sep != std::string::npos && dot < sep))
    return path;
  return path.substr(0, dot);
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------
int run_fit(const std::string& input, const std::string& output,
            bool log_returns, bool symmetric, std::size_t max_components,
            std::size_t bins) {
  std::vector<double> data = read_variates(input);
  if (log_returns) data = log_return_transform(data);
  const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
  if (!(*mx > *mn))
    throw thorne::data_error("degenerate data: all variates are equal");

  thorne::DensityHistogram hist;
  json hist_extras;
  if (bins > 0) {
    hist = thorne::plain_histogram(data, bins);
    hist_extras["policy"] = "plain";
  } else {
    const thorne::OptimizedHistogram oh = thorne::optimized_histogram(data);
    hist_extras["policy"] = "optimized";
    hist_extras["lambda"] = oh.lambda;
    hist_extras["tail_alpha"] = oh.alpha;
    hist_extras["edf"] = oh.edf;
    hist = oh;
  }
  hist_extras["bins"] = hist.bin_count();
  hist_extras["sample_count"] = data.size();

  const thorne::TransformedHistogram th = thorne::transform_histogram(hist);
  thorne::FitOptions opts;
  opts.symmetric = symmetric;
  opts.max_components = max_components;
  const thorne::FitReport rep = thorne::auto_fit(th, opts);

  json doc = thorne::to_json(rep);
  doc["histogram"] = hist_extras;
  doc["log_returns"] = log_returns;
  write_output(output, doc.dump(2));

  if (!output.empty()) {
    // plot-data overlays at the bin representatives: linear and semi-log
    const std::string stem = output_stem(output);
    std::ostringstream lin, slog;
    lin << "x\thistogram\tfitted\n";
    slog << "x\tlog10_histogram\tlog10_fitted\n";
    for (std::size_t i = 0; i < hist.bin_count(); ++i) {
      const double x = hist.representatives[i];
      const double d = hist.densities[i];
      const double f = rep.model.pdf(x);
      lin << fmt(x) << '\t' << fmt(d) << '\t' << fmt(f) << '\n';
      if (d > 0.0 && f > 0.0)
        slog << fmt(x) << '\t' << fmt(std::log10(d)) << '\t'
             << fmt(std::log10(f)) << '\n';
    }
    write_output(stem + "_linear.tsv", lin.str());
    write_output(stem + "_semilog.tsv", slog.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval / sample / moments / risk
// ---------------------------------------------------------------------------
int run_eval(const std::string& model_path, const std::string& input,
             const std::string& output) {
  const thorne::ThorneModel model = load_model_arg(model_path);
  const std::vector<double> points = read_variates(input);
  std::ostringstream os;
  os << "x\tdensity\n";
  for (double x : points) os << fmt(x) << '\t' << fmt(model.pdf(x)) << '\n';
  write_output(output, os.str());
  return 0;
}

int run_sample(const std::string& model_path, std::size_t count,
               std::uint64_t seed, const std::string& output) {
  const thorne::ThorneModel model = load_model_arg(model_path);
  const std::vector<double> draws = thorne::sample_variates(model, count, seed);
  std::ostringstream os;
  for (double v : draws) os << fmt(v) << '\n';
  write_output(output, os.str());
  return 0;
}

int run_moments(const std::string& model_path, const std::string& output) {
  const thorne::ThorneModel model = load_model_arg(model_path);
  const thorne::MomentSummary m = thorne::moments(model);
  json doc;
  doc["mean"] = m.mean;
  doc["std_dev"] = m.std_dev;
  doc["skew"] = m.skew;
  if (m.kurtosis)
    doc["kurtosis"] = *m.kurtosis;
  else
    doc["kurtosis"] = nullptr;
  write_output(output, doc.dump(2));
  return 0;
}

int run_risk(const std::string& model_path, double alpha,
             const std::string& tail, const std::string& output) {
  const thorne::ThorneModel model = load_model_arg(model_path);
  const thorne::Tail t =
      tail == "upper" ? thorne::Tail::upper : thorne::Tail::lower;
  const thorne::RiskReport rep = thorne::expected_shortfall(model, alpha, t);
  write_output(output, thorne::to_json(rep).dump(2));
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------
int run_simulate(const std::string& model_path, double x0, double dt,
                 std::size_t steps, std::size_t paths,
                 const std::string& scheme, std::uint64_t seed,
                 const std::string& output) {
  const thorne::ThorneModel model = load_model_arg(model_path);
  const bool closed = scheme != "euler";
  const bool corrected = scheme != "closed-form-literal";
  const thorne::SdeSpec spec =
      thorne::to_sde_spec(model, x0, dt, steps, /*normalize_weights=*/closed);

  auto one_path = [&](std::uint64_t s) {
    if (!closed) return thorne::simulate_euler(spec, s);
    std::vector<double> times(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k)
      times[k] = static_cast<double>(k) * dt;
    return thorne::simulate_closed_form(spec, times, s, corrected);
  };

  if (paths <= 1) {
    write_output(output, thorne::export_path(one_path(seed)));
  } else {
    std::vector<thorne::SamplePath> ensemble;
    ensemble.reserve(paths);
    for (std::size_t i = 0; i < paths; ++i)
      ensemble.push_back(one_path(thorne::derive_seed(seed, i)));
    write_output(output, thorne::export_ensemble(ensemble));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------
double loglog_tail_slope() {
  std::vector<double> lx, lf;
  for (int i = 0; i <= 60; ++i) {
    const double x = 20.0 * std::pow(10.0, i / 60.0);
    lx.push_back(std::log(x));
    lf.push_back(std::log(thorne::synthetic_pdf(x)));
  }
  const double n = static_cast<double>(lx.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += lf[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * lf[i];
  }
  return (sxy - sx * sy / n) / (sxx - sx * sx / n);
}

int run_validate(std::uint64_t seed, std::size_t draws,
                 const std::string& output) {
  json checks = json::array();
  std::size_t failures = 0;
  const auto add = [&](const std::string& name, double computed,
                       double reference, double tolerance, bool pass,
                       bool recorded, const std::string& note) {
    json c;
    c["name"] = name;
    c["computed"] = computed;
    c["reference"] = reference;
    c["tolerance"] = tolerance;
    c["status"] = recorded ? "recorded" : (pass ? "pass" : "fail");
    c["note"] = note;
    if (!recorded && !pass) ++failures;
    checks.push_back(std::move(c));
  };

  // normalization constant of the canonical three-component model
  const double ct_quad = thorne::thorne_constant();
  const double ct_series = thorne::thorne_constant_series();
  const double ct_variant = thorne::thorne_constant_unit_amplitude_variant();
  const double ct_reference = 3.697252480597963;
  add("constant_quadrature_vs_series", ct_quad, ct_series, 1e-10,
      std::fabs(ct_quad - ct_series) <= 1e-10, false,
      "independent quadrature and series evaluations must agree");
  add("constant_vs_reference", ct_quad, ct_reference, 0.0, false, true,
      "definition as written; informational comparison only");
  add("constant_unit_amplitude_variant_vs_reference", ct_variant, ct_reference,
      0.0, false, true,
      "variant with unit amplitudes matches the reference value");

  // synthetic heavy-tail law: moments and tail behavior by quadrature
  const auto mean_q = thorne::integrate_line(
      [](double x) { return x * thorne::synthetic_pdf(x); }, 0.0, 1.0, 1e-12,
      1e-15);
  add("synthetic_mean", mean_q.value, 0.0, 1e-9,
      std::fabs(mean_q.value) <= 1e-9, false, "first moment of the test law");
  const double var_v = thorne::synthetic_second_moment();
  add("synthetic_variance", var_v, 2.0, 1e-6, std::fabs(var_v - 2.0) <= 1e-6,
      false, "second moment of the test law");
  const double slope = loglog_tail_slope();
  add("synthetic_tail_slope", slope, -3.5, 0.05,
      std::fabs(slope + 3.5) <= 0.05, false,
      "log-log least-squares slope over [20, 200]");

  // rejection sampler: envelope threshold and measured acceptance rate
  const double m_threshold = thorne::rejection_threshold();
  add("envelope_threshold_vs_reference", m_threshold, 1.798, 0.0, false, true,
      "computed stationary-point threshold; informational comparison only");
  {
    const double target_rate = 1.0 / m_threshold;
    const std::size_t accepted =
        static_cast<std::size_t>(std::llround(1e6 * target_rate));
    std::size_t proposals = 0;
    thorne::synthetic_sample(accepted, thorne::derive_seed(seed, 1000003),
                             &proposals);
    const double rate =
        static_cast<double>(accepted) / static_cast<double>(proposals);
    add("acceptance_rate_vs_inverse_threshold", rate, target_rate,
        0.002 * target_rate, std::fabs(rate - target_rate) <= 0.002 * target_rate,
        false, "measured over about one million proposals");
  }

  // component geometry of the two reference width/weight triples
  {
    using P = thorne::WidthWeightPoint;
    const std::vector<P> daily{{0.98951, 8.6495}, {4.9413, 63.184},
                               {18.165, 253.60}};
    const std::vector<P> minute{{0.75463, 1.8916}, {1.5102, 3.7854},
                                {4.1436, 10.386}};
    const double rd = thorne::analyze_component_geometry(daily)
                          .geometry.segment_ratio;
    const double rm = thorne::analyze_component_geometry(minute)
                          .geometry.segment_ratio;
    add("segment_ratio_daily", rd, 3.488, 0.005 * 3.488,
        std::fabs(rd - 3.488) <= 0.005 * 3.488, false,
        "geometric-mean segment ratio, daily triple");
    add("segment_ratio_minute", rm, 3.488, 0.005 * 3.488,
        std::fabs(rm - 3.488) <= 0.005 * 3.488, false,
        "geometric-mean segment ratio, minute triple");
    add("segment_ratio_cross_agreement", rd, rm, 0.002 * rm,
        std::fabs(rd - rm) <= 0.002 * std::fabs(rm), false,
        "the two resolutions agree to 0.2%");
  }

  // end-to-end pipeline: sample, histogram, transform, ladder fit, score
  const thorne::PipelineReport rep = thorne::run_pipeline(draws, seed);
  const bool full_scale = draws >= 750000;
  const double r2_floor = full_scale ? 0.9995 : 0.999;
  const double ise_ceiling = full_scale ? 5e-4 : 1e-3;
  const double n = static_cast<double>(rep.fit.n_components);
  add("fit_components_in_range", n, 5.5, 1.5, n >= 4.0 && n <= 7.0, false,
      "selected component count must land in 4..7");
  add("fit_components_vs_reference", n, 6.0, 0.0, false, true,
      "informational comparison against the reference count");
  add("fit_r2", rep.fit.r2, r2_floor, 0.0, rep.fit.r2 >= r2_floor, false,
      "coefficient of determination floor for this scale");
  add("fit_r2_vs_reference", rep.fit.r2, 0.999959, 0.0, false, true,
      "informational comparison against the reference value");
  add("density_ise", rep.ise_fit, ise_ceiling, 0.0,
      rep.ise_fit <= ise_ceiling, false,
      "integrated squared error ceiling for this scale");
  add("density_ise_vs_reference", rep.ise_fit, 5.33e-5, 0.0, false, true,
      "informational comparison against the reference value");
  const double crit1 = thorne::chi_square_quantile(
      0.99, static_cast<double>(rep.chi_square.dof));
  add("chi_square_non_rejection_1pct", rep.chi_square.statistic, crit1, 0.0,
      !rep.chi_square.reject_1, false,
      "statistic must sit below the 1% critical value");
  add("chi_square_statistic_vs_reference", rep.chi_square.statistic, 2.26, 0.0,
      false, true, "informational comparison against the reference value");

  json doc;
  doc["seed"] = seed;
  doc["draws"] = draws;
  doc["checks"] = std::move(checks);
  doc["fit"] = thorne::to_json(rep.fit);
  doc["chi_square"] = {{"statistic", rep.chi_square.statistic},
                       {"dof", rep.chi_square.dof},
                       {"p_value", rep.chi_square.p_value},
                       {"reject_10", rep.chi_square.reject_10},
                       {"reject_5", rep.chi_square.reject_5},
                       {"reject_1", rep.chi_square.reject_1}};
  doc["ise_fit"] = rep.ise_fit;
  doc["ise_histogram"] = rep.ise_histogram;
  doc["failed_checks"] = failures;
  doc["passed"] = failures == 0;
  write_output(output, doc.dump(2));

  if (failures > 0)
    throw thorne::numerical_error(std::to_string(failures) +
                                  " validation check(s) failed");
  return 0;
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------
int run_benchmark(const std::string& sizes_csv, std::size_t trials,
                  std::uint64_t seed, const std::string& output) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(sizes_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      const long long v = std::stoll(tok);
      if (v < 20) throw std::invalid_argument("size too small");
      sizes.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw thorne::config_error("bad --sizes entry: '" + tok + "'");
    }
  }
  if (sizes.empty()) throw thorne::config_error("--sizes is empty");
  const thorne::BenchmarkResult res =
      thorne::amise_benchmark(sizes, trials, seed);
  std::string text = thorne::export_benchmark(res);
  if (!res.failures.empty()) {
    text += "# trial failures:\n";
    for (const auto& f : res.failures) text += "#   " + f + "\n";
  }
  write_output(output, text);
  return 0;
}

void write_diagnostics(const std::string& command, const std::string& what) {
  std::ofstream out("thorne_diagnostics.txt");
  if (!out) return;
  out << "command: " << command << '\n' << "error: " << what << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "thorne: heavy-tail density estimation, risk measures, and diffusion "
      "paths built on exponentiated Gaussian sums"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand(
      "fit", "estimate a model from variates (one numeric per line)");
  std::string fit_input, fit_output;
  bool fit_log_returns = false;
  bool fit_symmetric = true;
  std::size_t fit_max_components = 10;
  std::size_t fit_bins = 0;
  fit->add_option("--input", fit_input, "input variates file")->required();
  fit->add_option("--output", fit_output,
                  "report file (plot data written alongside)");
  fit->add_flag("--log-returns", fit_log_returns,
                "difference logs of successive positive values first");
  fit->add_flag("--symmetric,!--asymmetric", fit_symmetric,
                "constrain component means to zero (default on)");
  fit->add_option("--max-components", fit_max_components,
                  "ladder cap on the component count")
      ->check(CLI::Range(std::size_t{1}, std::size_t{32}));
  fit->add_option("--bins", fit_bins,
                  "fixed bin count (0 = optimized histogram)");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a model density at points");
  std::string eval_model, eval_input, eval_output;
  eval->add_option("--model", eval_model, "model JSON file")->required();
  eval->add_option("--input", eval_input, "points file (one x per line)")
      ->required();
  eval->add_option("--output", eval_output, "output file (default stdout)");

  // sample
  auto* sample = app.add_subcommand("sample", "draw variates from a model");
  std::string sample_model, sample_output;
  std::size_t sample_count = 1000;
  std::uint64_t sample_seed = 0;
  sample->add_option("--model", sample_model, "model JSON file")->required();
  sample->add_option("--count", sample_count, "number of draws");
  sample->add_option("--seed", sample_seed, "generator seed");
  sample->add_option("--output", sample_output, "output file (default stdout)");

  // moments
  auto* mom = app.add_subcommand("moments", "moment summary of a model");
  std::string mom_model, mom_output;
  mom->add_option("--model", mom_model, "model JSON file")->required();
  mom->add_option("--output", mom_output, "output file (default stdout)");

  // risk
  auto* risk = app.add_subcommand(
      "risk", "value-at-risk and expected shortfall of a model");
  std::string risk_model, risk_output, risk_tail = "lower";
  double risk_alpha = 0.01;
  risk->add_option("--model", risk_model, "model JSON file")->required();
  risk->add_option("--alpha", risk_alpha, "tail probability in (0, 0.5)");
  risk->add_option("--tail", risk_tail, "which tail")
      ->check(CLI::IsMember({"lower", "upper"}));
  risk->add_option("--output", risk_output, "output file (default stdout)");

  // simulate
  auto* sim = app.add_subcommand(
      "simulate", "diffusion paths driven by a model's components");
  std::string sim_model, sim_output, sim_scheme = "euler";
  double sim_x0 = 1.0, sim_dt = 1e-3;
  std::size_t sim_steps = 1000, sim_paths = 1;
  std::uint64_t sim_seed = 0;
  sim->add_option("--model", sim_model, "model JSON file")->required();
  sim->add_option("--x0", sim_x0, "initial value (> 0)");
  sim->add_option("--dt", sim_dt, "time step (> 0)");
  sim->add_option("--steps", sim_steps, "number of steps");
  sim->add_option("--paths", sim_paths, "ensemble size (1 = single path)");
  sim->add_option("--scheme", sim_scheme, "integration scheme")
      ->check(CLI::IsMember({"euler", "closed-form", "closed-form-literal"}));
  sim->add_option("--seed", sim_seed, "generator seed");
  sim->add_option("--output", sim_output, "output file (default stdout)");

  // validate
  auto* val = app.add_subcommand(
      "validate", "end-to-end pipeline validation with reference comparisons");
  std::string val_output;
  std::uint64_t val_seed = 0;
  std::size_t val_samples = 750000;
  val->add_option("--seed", val_seed, "generator seed");
  val->add_option("--samples", val_samples, "number of synthetic draws")
      ->check(CLI::Range(std::size_t{1000}, std::size_t{100000000}));
  val->add_option("--output", val_output, "report file (default stdout)");

  // benchmark
  auto* bench = app.add_subcommand(
      "benchmark", "compare estimator errors across sample sizes");
  std::string bench_sizes = "100,1000", bench_output;
  std::size_t bench_trials = 24;
  std::uint64_t bench_seed = 0;
  bench->add_option("--sizes", bench_sizes, "comma-separated sample sizes");
  bench->add_option("--trials", bench_trials, "trials per size")
      ->check(CLI::Range(std::size_t{1}, std::size_t{10000}));
  bench->add_option("--seed", bench_seed, "generator seed");
  bench->add_option("--output", bench_output, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::string command = "?";
  try {
    if (app.got_subcommand(fit)) {
      command = "fit";
      return run_fit(fit_input, fit_output, fit_log_returns, fit_symmetric,
                     fit_max_components, fit_bins);
    }
    if (app.got_subcommand(eval)) {
      command = "eval";
      return run_eval(eval_model, eval_input, eval_output);
    }
    if (app.got_subcommand(sample)) {
      command = "sample";
      return run_sample(sample_model, sample_count, sample_seed, sample_output);
    }
    if (app.got_subcommand(mom)) {
      command = "moments";
      return run_moments(mom_model, mom_output);
    }
    if (app.got_subcommand(risk)) {
      command = "risk";
      return run_risk(risk_model, risk_alpha, risk_tail, risk_output);
    }
    if (app.got_subcommand(sim)) {
      command = "simulate";
      return run_simulate(sim_model, sim_x0, sim_dt, sim_steps, sim_paths,
                          sim_scheme, sim_seed, sim_output);
    }
    if (app.got_subcommand(val)) {
      command = "validate";
      return run_validate(val_seed, val_samples, val_output);
    }
    if (app.got_subcommand(bench)) {
      command = "benchmark";
      return run_benchmark(bench_sizes, bench_trials, bench_seed, bench_output);
    }
  } catch (const thorne::config_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const thorne::data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const thorne::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    write_diagnostics(command, e.what());
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    write_diagnostics(command, e.what());
    return 3;
  }
  return 1;
}
