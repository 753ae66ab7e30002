/**
 * @file commands.hpp
 * @brief The solve, rectify, symmetry and diagnose commands, and the argument parser around them.
 *
 * Exit codes: 0 success, 1 hypothesis or verification failure, 2 numerical failure, 3 input error.
 */
#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cli/problem.hpp"
#include "cli/report.hpp"
#include "rectify/diagnostics.hpp"
#include "rectify/rectification.hpp"
#include "rectify/symmetry.hpp"

namespace rectify::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kSuccess = 0, kHypothesisFailure = 1, kNumericalFailure = 2, kInputError = 3 };

struct Options {
  std::string command;
  std::string subcommand;
  std::string problem;
  std::filesystem::path out = "out";
  std::optional<double> rtol;
  std::optional<double> atol;
  std::optional<std::size_t> samples;
  std::vector<std::string> elements;
  std::optional<double> t0;
  std::vector<double> x0;
  std::optional<double> target;
  bool timing = false;
};

struct Outcome {
  int exit_code = kSuccess;
  Json results = Json::object();
};

namespace detail {

inline const char* escape_name(EscapeKind k) { return k == EscapeKind::DomainEscape ? "DomainEscape" : "BlowUp"; }

inline const char* failure_name(ProbeFailureKind k) {
  return k == ProbeFailureKind::DomainEscape ? "DomainEscape" : "BlowUp";
}

inline std::optional<SpaceTimePoint> try_point(const auto& fn) {
  try {
    return fn();
  } catch (const TrajectoryError&) {
  } catch (const OutOfRange&) {
  } catch (const EvalError&) {
  }
  return std::nullopt;
}

inline Json expressions_json(const std::vector<Expression>& es) {
  Json out = Json::array();
  for (const auto& e : es) {
    out.push_back(e.to_string());
  }
  return out;
}

inline Json element_json(const WreathElement& a) {
  Json j{{"f", a.f().to_string()}, {"g", expressions_json(a.g())}};
  if (a.f_inv_t()) {
    j["f_inv"] = a.f_inv_t()->to_string();
  }
  if (a.g_inv()) {
    j["g_inv"] = expressions_json(*a.g_inv());
  }
  return j;
}

inline Json symmetry_report_json(const SymmetryCheckReport& r) {
  Json residuals = Json::array();
  for (const auto& v : r.residuals) {
    residuals.push_back(v ? json_number(*v) : Json(nullptr));
  }
  return {{"tested_solutions", r.tested_solutions}, {"max_residual", json_number(r.max_residual)},
          {"undefined_transforms", r.undefined_transforms}, {"threshold", json_number(r.threshold)},
          {"pass", r.pass}, {"residuals", residuals}};
}

inline void write_symmetry_residuals(const Problem& p, const SymmetryCheckReport& r, const Options& o) {
  auto header = point_header(p.dimension);
  header.push_back("residual");
  CsvTable table(header);
  for (std::size_t i = 0; i < p.check_ics.size(); ++i) {
    auto row = point_cells(p.check_ics[i]);
    row.push_back(r.residuals[i]);
    table.add(row);
  }
  table.write(o.out / "residuals.csv");
}

inline SymmetryCheckReport run_check(const SpaceTimeMap& m, const Problem& p) {
  if (p.check_ics.empty()) {
    throw InvalidInput("symmetry check needs initial conditions in [check]");
  }
  return is_symmetry(m, p.spec(), p.check_ics, p.check_window.value_or(p.window), p.tol, {p.samples, 1e-4});
}

/// Build Phi; when the smoke probe fails, still construct it unprobed so the failures can be listed.
inline Rectification rectification_for(const Problem& p, std::optional<std::string>& probe_error) {
  try {
    return build_rectification(p.spec(), p.base_time, p.window, p.tol, p.require_probe_box());
  } catch (const ProbeFailed& e) {
    probe_error = e.what();
    return Rectification(p.spec(), p.base_time.value_or(p.window.midpoint()), p.window, p.tol,
                         p.require_probe_box());
  }
}

}  // namespace detail

[[nodiscard]] inline Outcome cmd_solve(const Problem& p, const Options& o) {
  const double t0 = o.t0 ? *o.t0 : p.solve_t0 ? *p.solve_t0 : p.base_time.value_or(p.window.lower);
  const double target = o.target ? *o.target : p.solve_target ? *p.solve_target : p.window.upper;
  Vector x0;
  if (!o.x0.empty()) {
    x0 = Eigen::Map<const Vector>(o.x0.data(), static_cast<Eigen::Index>(o.x0.size()));
  } else if (p.solve_x0) {
    x0 = *p.solve_x0;
  } else {
    throw InvalidInput("solve needs an initial state: [solve] x0 or --x0");
  }
  const auto sol = integrate(p.spec(), t0, x0, target, p.tol);
  const auto& term = sol.termination();

  CsvTable table(point_header(p.dimension));
  for (double t : linspace(sol.base_time(), sol.end_time(), p.samples)) {
    table.add(point_cells({t, sol.sample(t)}));
  }
  table.write(o.out / "trajectory.csv");

  Outcome out;
  out.results = {{"t0", json_number(t0)},
                 {"x0", json_vector(x0)},
                 {"target", json_number(target)},
                 {"termination", std::string(termination_name(term.kind))},
                 {"reached", term.reached()},
                 {"end_time", json_number(sol.end_time())},
                 {"end_state", json_vector(sol.end_state())},
                 {"steps", sol.size() - 1},
                 {"samples", table.rows()}};
  if (!term.reached()) {
    Json event{{"kind", std::string(termination_name(term.kind))}, {"time", json_number(term.time)}};
    if (term.kind == TerminationKind::DomainEscape) {
      event["face_axis"] = term.face_axis + 1;
      event["face"] = term.face_upper ? "upper" : "lower";
    }
    out.results["events"] = Json::array({event});
  } else {
    out.results["events"] = Json::array();
  }
  switch (term.kind) {
    case TerminationKind::ReachedTarget: out.exit_code = kSuccess; break;
    case TerminationKind::StepUnderflow: out.exit_code = kNumericalFailure; break;
    default: out.exit_code = kHypothesisFailure;
  }
  return out;
}

[[nodiscard]] inline Outcome cmd_rectify(const Problem& p, const Options& o) {
  std::optional<std::string> probe_error;
  const auto r = detail::rectification_for(p, probe_error);
  const auto grid = p.probe_grid();
  const auto rep = verify_rectification(r, grid);

  CsvTable forward(point_header(p.dimension, "phi"));
  CsvTable inverse(point_header(p.dimension, "phi_inv"));
  auto res_header = point_header(p.dimension);
  res_header.push_back("pushforward_residual");
  CsvTable residuals(res_header);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& q = grid[i];
    forward.add(pair_cells(q, detail::try_point([&] { return r.apply(q.t, q.x); })));
    inverse.add(pair_cells(q, detail::try_point([&] { return r.apply_inverse(q.t, q.x); })));
    auto row = point_cells(q);
    row.push_back(rep.pushforward_residuals[i]);
    residuals.add(row);
  }
  forward.write(o.out / "grid_forward.csv");
  inverse.write(o.out / "grid_inverse.csv");
  residuals.write(o.out / "residuals.csv");

  Json failures = Json::array();
  for (const auto& f : rep.failures) {
    failures.push_back({{"point", json_point(f.point)},
                        {"kind", detail::failure_name(f.kind)},
                        {"event_time", json_number(f.event_time)}});
  }
  const bool ok = !probe_error && rep.passed(1e-5, 1e-5);
  Outcome out;
  out.results = {{"base_time", json_number(r.base_time())},
                 {"window", {json_number(r.window().lower), json_number(r.window().upper)}},
                 {"probes", rep.probes},
                 {"max_pushforward_residual", json_number(rep.max_pushforward_residual)},
                 {"max_roundtrip_residual", json_number(rep.max_roundtrip_residual)},
                 {"failures", failures},
                 {"threshold", json_number(1e-5)},
                 {"passed", ok}};
  if (probe_error) {
    out.results["smoke_probe"] = *probe_error;
  }
  out.exit_code = ok ? kSuccess : kHypothesisFailure;
  return out;
}

[[nodiscard]] inline Outcome cmd_symmetry_compose(const Problem& p, const Options& o) {
  if (o.elements.size() != 2) {
    throw InvalidInput("compose needs exactly two --element names");
  }
  const auto a = p.element(o.elements[0]);
  const auto b = p.element(o.elements[1]);
  const auto ab = wreath_compose(a, b);
  double worst = 0.0;
  std::size_t failures = 0;
  for (const auto& q : p.probe_grid()) {
    try {
      const auto direct = wreath_act(ab, q.t, q.x);
      const auto inner = wreath_act(b, q.t, q.x);
      const auto seq = wreath_act(a, inner.t, inner.x);
      worst = std::max({worst, std::abs(direct.t - seq.t), (direct.x - seq.x).lpNorm<Eigen::Infinity>()});
    } catch (const EvalError&) {
      ++failures;
    }
  }
  Outcome out;
  out.results = {{"left", o.elements[0]},
                 {"right", o.elements[1]},
                 {"composed", detail::element_json(ab)},
                 {"pointwise_residual", json_number(worst)},
                 {"eval_failures", failures}};
  out.exit_code = (worst <= 1e-9 && failures == 0) ? kSuccess : kHypothesisFailure;
  return out;
}

[[nodiscard]] inline Outcome cmd_symmetry_conjugate(const Problem& p, const Options& o) {
  if (o.elements.size() != 1) {
    throw InvalidInput("conjugate needs exactly one --element name");
  }
  const auto alpha = wreath_to_map(p.element(o.elements[0]));
  Outcome out;
  std::optional<std::string> probe_error;
  const auto r = detail::rectification_for(p, probe_error);
  out.results["element"] = o.elements[0];
  if (probe_error) {
    out.results["smoke_probe"] = *probe_error;
    out.exit_code = kHypothesisFailure;
    return out;
  }
  SpaceTimeMap beta = SpaceTimeMap::identity(p.dimension);
  try {
    beta = conjugate_symmetry(r, alpha);
  } catch (const NotTrivialForm& e) {
    out.results["not_trivial_form"] = e.what();
    out.exit_code = kHypothesisFailure;
    return out;
  }
  CsvTable grid(point_header(p.dimension, "beta"));
  std::size_t undefined = 0;
  for (const auto& q : p.probe_grid()) {
    const auto img = detail::try_point([&] { return beta(q); });
    undefined += img ? 0 : 1;
    grid.add(pair_cells(q, img));
  }
  grid.write(o.out / "grid_forward.csv");
  out.results["grid_points"] = grid.rows();
  out.results["grid_undefined"] = undefined;
  if (!p.check_ics.empty()) {
    const auto rep = detail::run_check(beta, p);
    detail::write_symmetry_residuals(p, rep, o);
    out.results["check"] = detail::symmetry_report_json(rep);
    out.exit_code = rep.pass ? kSuccess : kHypothesisFailure;
  }
  return out;
}

[[nodiscard]] inline Outcome cmd_symmetry_check(const Problem& p, const Options& o) {
  if (o.elements.size() != 1) {
    throw InvalidInput("check needs exactly one --element name");
  }
  const auto m = wreath_to_map(p.element(o.elements[0]));
  const auto rep = detail::run_check(m, p);
  detail::write_symmetry_residuals(p, rep, o);
  Outcome out;
  out.results = {{"element", o.elements[0]}, {"check", detail::symmetry_report_json(rep)}};
  out.exit_code = rep.pass ? kSuccess : kHypothesisFailure;
  return out;
}

[[nodiscard]] inline Outcome cmd_diagnose(const Problem& p, const Options&) {
  const Box& box = p.require_probe_box();
  const auto prof = estimate_lipschitz(p.spec(), p.window, box, p.probe_times, p.probe_per_axis, p.radii);
  Json refinements = Json::array();
  Json flags = Json::array();
  for (const auto& ref : prof.refinement_trend) {
    Json q = Json::array();
    for (double v : ref.quotients) {
      q.push_back(json_number(v));
    }
    refinements.push_back({{"center", json_point(ref.center)}, {"quotients", q}, {"unbounded", ref.unbounded}});
    if (ref.unbounded) {
      flags.push_back(json_point(ref.center));
    }
  }
  Json estimates = Json::array();
  for (std::size_t i = 0; i < prof.times.size(); ++i) {
    estimates.push_back({{"t", json_number(prof.times[i])}, {"L", json_number(prof.estimates[i])}});
  }
  Json eval_failures = Json::array();
  for (const auto& f : prof.eval_failures) {
    eval_failures.push_back(json_point(f));
  }
  Json radii = Json::array();
  for (double r : p.radii) {
    radii.push_back(json_number(r));
  }

  std::vector<SpaceTimePoint> ics;
  for (const auto& x : box_grid(box, p.probe_per_axis)) {
    ics.push_back({p.base_time.value_or(p.window.midpoint()), x});
  }
  const auto inv = probe_invariance(p.spec(), p.window, ics, p.tol);
  Json escapes = Json::array();
  for (const auto& e : inv.escapes) {
    escapes.push_back({{"initial", json_point(e.initial)},
                       {"kind", detail::escape_name(e.kind)},
                       {"event_time", json_number(e.event_time)},
                       {"direction", e.direction > 0 ? "forward" : "backward"}});
  }

  Json probes = Json::array();
  bool uniqueness_flag = !flags.empty();
  for (const auto& pt : p.uniqueness_points) {
    const double t_end = p.uniqueness_t_end.value_or(pt.t + 1.0);
    const auto u = probe_uniqueness(p.spec(), pt, p.radii, p.candidates, t_end);
    Json cands = Json::array();
    for (const auto& c : u.candidates) {
      cands.push_back({{"label", c.label},
                       {"max_residual", json_number(c.max_residual)},
                       {"passes_through_point", c.passes_through_point},
                       {"is_solution", c.is_solution}});
    }
    Json q = Json::array();
    for (double v : u.refinement.quotients) {
      q.push_back(json_number(v));
    }
    probes.push_back({{"point", json_point(pt)},
                      {"flagged", u.flagged},
                      {"quotients", q},
                      {"candidates", cands},
                      {"non_uniqueness_witnessed", u.non_uniqueness_witnessed()}});
    uniqueness_flag = uniqueness_flag || u.flagged || u.non_uniqueness_witnessed();
  }

  Outcome out;
  out.results = {
      {"lipschitz",
       {{"estimates", estimates},
        {"sup_estimate", json_number(prof.sup_estimate)},
        {"radii", radii},
        {"refinements", refinements},
        {"eval_failures", eval_failures},
        {"flagged_unbounded", prof.flagged_unbounded}}},
      {"invariance",
       {{"probed", inv.probed}, {"escapes", escapes}, {"invariant_on_probes", inv.invariant_on_probes()}}},
      {"uniqueness", {{"flags", flags}, {"probes", probes}, {"flagged", uniqueness_flag}}}};
  const bool clean = !prof.flagged_unbounded && !uniqueness_flag && inv.invariant_on_probes();
  out.exit_code = clean ? kSuccess : kHypothesisFailure;
  return out;
}

/// Exit code for an exception escaping a command.
[[nodiscard]] inline int classify(const std::exception& e) {
  if (dynamic_cast<const SyntaxError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
      dynamic_cast<const InvalidInput*>(&e) || dynamic_cast<const MissingInverse*>(&e) ||
      dynamic_cast<const OutOfRange*>(&e) || dynamic_cast<const boost::property_tree::ptree_error*>(&e)) {
    return kInputError;
  }
  if (dynamic_cast<const NotTrivialForm*>(&e) || dynamic_cast<const ProbeFailed*>(&e) ||
      dynamic_cast<const TrajectoryError*>(&e)) {
    return kHypothesisFailure;
  }
  return kNumericalFailure;
}

[[nodiscard]] inline Json command_json(const Options& o) {
  Json c{{"name", o.command}, {"problem", o.problem}};
  if (!o.subcommand.empty()) {
    c["subcommand"] = o.subcommand;
  }
  if (!o.elements.empty()) {
    c["elements"] = o.elements;
  }
  if (o.rtol) {
    c["rtol"] = json_number(*o.rtol);
  }
  if (o.atol) {
    c["atol"] = json_number(*o.atol);
  }
  if (o.samples) {
    c["samples"] = *o.samples;
  }
  if (o.t0) {
    c["t0"] = json_number(*o.t0);
  }
  if (!o.x0.empty()) {
    Json x = Json::array();
    for (double v : o.x0) {
      x.push_back(json_number(v));
    }
    c["x0"] = x;
  }
  if (o.target) {
    c["target"] = json_number(*o.target);
  }
  return c;
}

/// Load the problem, run the command, write report.json into the output directory.
[[nodiscard]] inline int execute(const Options& o, std::ostream& err = std::cerr) {
  const auto start = std::chrono::steady_clock::now();
  Json report{{"command", command_json(o)}, {"version", kVersion}};
  int code = kSuccess;
  try {
    std::filesystem::create_directories(o.out);
  } catch (const std::exception& e) {
    err << "error: cannot create output directory: " << e.what() << "\n";
    return kInputError;
  }
  try {
    Problem p = load_problem(o.problem);
    if (o.rtol) {
      p.tol.rtol = *o.rtol;
    }
    if (o.atol) {
      p.tol.atol = *o.atol;
    }
    if (o.samples) {
      p.samples = *o.samples;
    }
    p.tol.validate();
    if (p.samples < 2) {
      throw InvalidInput("--samples must be at least 2");
    }
    Outcome out;
    if (o.command == "solve") {
      out = cmd_solve(p, o);
    } else if (o.command == "rectify") {
      out = cmd_rectify(p, o);
    } else if (o.command == "diagnose") {
      out = cmd_diagnose(p, o);
    } else if (o.subcommand == "compose") {
      out = cmd_symmetry_compose(p, o);
    } else if (o.subcommand == "conjugate") {
      out = cmd_symmetry_conjugate(p, o);
    } else if (o.subcommand == "check") {
      out = cmd_symmetry_check(p, o);
    } else {
      throw InvalidInput("unknown command");
    }
    code = out.exit_code;
    report["results"] = out.results;
  } catch (const std::exception& e) {
    code = classify(e);
    report["error"] = e.what();
    err << "error: " << e.what() << "\n";
  }
  report["exit_code"] = code;
  if (o.timing) {
    report["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  try {
    write_text(o.out / "report.json", to_json_text(report));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return code;
}

/// Parse argv and execute. Usage errors exit with 3, help with 0.
[[nodiscard]] inline int run(int argc, const char* const* argv) {
  Options o;
  CLI::App app{"Rectify ODE flows, build and conjugate wreath-product symmetries, diagnose hypotheses."};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--problem", o.problem, "Problem file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--rtol", o.rtol, "Relative tolerance");
    sub->add_option("--atol", o.atol, "Absolute tolerance");
    sub->add_option("--samples", o.samples, "Sample count for trajectories and transformed curves");
    sub->add_flag("--timing", o.timing, "Record wall time in the report");
  };

  auto* solve = app.add_subcommand("solve", "Integrate one initial value problem");
  common(solve);
  solve->add_option("--t0", o.t0, "Initial time");
  solve->add_option("--x0", o.x0, "Initial state")->expected(1, -1);
  solve->add_option("--target", o.target, "Target time");

  auto* rect = app.add_subcommand("rectify", "Build and verify the rectification on the probe grid");
  common(rect);

  auto* sym = app.add_subcommand("symmetry", "Wreath-product symmetries");
  sym->require_subcommand(1);
  auto* compose_cmd = sym->add_subcommand("compose", "Compose two named elements");
  auto* conjugate_cmd = sym->add_subcommand("conjugate", "Conjugate a trivial-form element through the rectification");
  auto* check_cmd = sym->add_subcommand("check", "Check an element as a symmetry on integrated solutions");
  for (auto* sub : {compose_cmd, conjugate_cmd, check_cmd}) {
    common(sub);
    sub->add_option("--element", o.elements, "Element name (repeat for compose)")->required();
  }

  auto* diag = app.add_subcommand("diagnose", "Probe Lipschitz, invariance and uniqueness hypotheses");
  common(diag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return kInputError;
  }
  for (auto* sub : app.get_subcommands()) {
    o.command = sub->get_name();
  }
  if (sym->parsed()) {
    for (auto* sub : sym->get_subcommands()) {
      o.subcommand = sub->get_name();
    }
  }
  return execute(o);
}

}  // namespace rectify::cli
