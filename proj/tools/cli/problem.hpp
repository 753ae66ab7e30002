/**
 * @file problem.hpp
 * @brief Problem files: sectioned key = value text read with Boost.PropertyTree's INI parser.
 *
 *   [field]        dimension, v1..vn, interval = "a b", box1..boxn = "lo hi"
 *   [run]          base_time, window = "a b", rtol, atol, samples
 *   [probe]        times, per_axis, box1..boxn
 *   [solve]        t0, x0 = "x1 .. xn", target
 *   [element.NAME] f, f_inv, g1..gn, g1_inv..gn_inv
 *   [check]        window, ic1, ic2, ... = "t x1 .. xn"
 *   [diagnose]     radii = "r1 r2 ..."
 *   [uniqueness]   t_end, point1, point2, ... = "t x1 .. xn"
 *   [candidate.LABEL] x1..xn (expressions in t)
 *
 * Bounds accept inf / -inf.
 */
#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rectify/diagnostics.hpp"
#include "rectify/integrator.hpp"
#include "rectify/symmetry.hpp"

namespace rectify::cli {

namespace pt = boost::property_tree;

struct Problem {
  std::size_t dimension = 0;
  std::optional<VectorFieldSpec> field;
  std::optional<double> base_time;
  Interval window;
  Tolerances tol;
  std::size_t samples = 201;

  std::size_t probe_times = 5;
  std::size_t probe_per_axis = 5;
  std::optional<Box> probe_box;

  std::optional<double> solve_t0;
  std::optional<Vector> solve_x0;
  std::optional<double> solve_target;

  std::map<std::string, WreathElement> elements;

  std::optional<Interval> check_window;
  std::vector<SpaceTimePoint> check_ics;

  std::vector<double> radii{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};

  std::optional<double> uniqueness_t_end;
  std::vector<SpaceTimePoint> uniqueness_points;
  std::vector<CandidateSolution> candidates;

  [[nodiscard]] const VectorFieldSpec& spec() const { return *field; }

  [[nodiscard]] const Box& require_probe_box() const {
    if (!probe_box) {
      throw InvalidInput("problem has no [probe] box");
    }
    return *probe_box;
  }

  [[nodiscard]] std::vector<SpaceTimePoint> probe_grid() const {
    return space_time_grid(window, probe_times, require_probe_box(), probe_per_axis);
  }

  /// Named element, or the built-in "identity".
  [[nodiscard]] WreathElement element(const std::string& name) const {
    if (name == "identity") {
      return WreathElement::identity(dimension);
    }
    const auto it = elements.find(name);
    if (it == elements.end()) {
      throw InvalidInput("no wreath element named '" + name + "'");
    }
    return it->second;
  }
};

namespace detail {

inline std::vector<double> numbers(const std::string& text, const std::string& where) {
  std::vector<double> out;
  std::string s = text;
  for (char& c : s) {
    if (c == ',') {
      c = ' ';
    }
  }
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
      throw InvalidInput(where + ": '" + tok + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

inline std::vector<double> numbers(const std::string& text, const std::string& where, std::size_t count) {
  auto v = numbers(text, where);
  if (v.size() != count) {
    throw InvalidInput(where + ": expected " + std::to_string(count) + " numbers, got " + std::to_string(v.size()));
  }
  return v;
}

inline Interval interval(const std::string& text, const std::string& where) {
  const auto v = numbers(text, where, 2);
  return {v[0], v[1]};
}

inline std::optional<double> optional_number(const pt::ptree& sec, const std::string& key, const std::string& where) {
  if (const auto s = sec.get_optional<std::string>(key)) {
    return numbers(*s, where + "." + key, 1)[0];
  }
  return std::nullopt;
}

inline std::size_t count(const pt::ptree& sec, const std::string& key, const std::string& where, std::size_t fallback) {
  const auto v = optional_number(sec, key, where);
  if (!v) {
    return fallback;
  }
  if (!(*v >= 1.0) || *v != std::floor(*v)) {
    throw InvalidInput(where + "." + key + " must be a positive integer");
  }
  return static_cast<std::size_t>(*v);
}

/// box1..boxn, or nullopt if none of them is present.
inline std::optional<Box> box(const pt::ptree& sec, std::size_t n, const std::string& where) {
  std::vector<Interval> axes;
  for (std::size_t i = 1; i <= n; ++i) {
    const auto s = sec.get_optional<std::string>("box" + std::to_string(i));
    if (!s) {
      if (i == 1) {
        return std::nullopt;
      }
      throw InvalidInput(where + ": box" + std::to_string(i) + " missing");
    }
    axes.push_back(interval(*s, where + ".box" + std::to_string(i)));
  }
  return Box(std::move(axes));
}

inline SpaceTimePoint point(const std::string& text, std::size_t n, const std::string& where) {
  const auto v = numbers(text, where, n + 1);
  Vector x(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    x[static_cast<Eigen::Index>(i)] = v[i + 1];
  }
  return {v[0], x};
}

/// Keys prefix1, prefix2, ... in order until the first gap.
inline std::vector<std::string> numbered(const pt::ptree& sec, const std::string& prefix) {
  std::vector<std::string> out;
  for (std::size_t i = 1;; ++i) {
    const auto s = sec.get_optional<std::string>(prefix + std::to_string(i));
    if (!s) {
      return out;
    }
    out.push_back(*s);
  }
}

inline const pt::ptree* section(const pt::ptree& tree, const std::string& name) {
  const auto it = tree.find(name);
  return it == tree.not_found() ? nullptr : &it->second;
}

inline WreathElement element(const pt::ptree& sec, std::size_t n, const std::string& where) {
  const auto f = sec.get_optional<std::string>("f");
  if (!f) {
    throw InvalidInput(where + ": f missing");
  }
  std::vector<std::string> g;
  std::vector<std::string> g_inv;
  for (std::size_t i = 1; i <= n; ++i) {
    const auto gi = sec.get_optional<std::string>("g" + std::to_string(i));
    if (!gi) {
      throw InvalidInput(where + ": g" + std::to_string(i) + " missing");
    }
    g.push_back(*gi);
    if (const auto inv = sec.get_optional<std::string>("g" + std::to_string(i) + "_inv")) {
      g_inv.push_back(*inv);
    }
  }
  if (!g_inv.empty() && g_inv.size() != n) {
    throw InvalidInput(where + ": give all or none of the g inverse components");
  }
  return WreathElement::parse(n, *f, g, sec.get<std::string>("f_inv", ""), g_inv);
}

}  // namespace detail

[[nodiscard]] inline Problem parse_problem(std::istream& in) {
  pt::ptree tree;
  pt::read_ini(in, tree);
  Problem p;

  const auto* field = detail::section(tree, "field");
  if (!field) {
    throw InvalidInput("problem has no [field] section");
  }
  p.dimension = detail::count(*field, "dimension", "field", 0);
  if (p.dimension == 0) {
    throw InvalidInput("field.dimension missing");
  }
  const auto components = detail::numbered(*field, "v");
  if (components.size() != p.dimension) {
    throw DimensionError("field has " + std::to_string(components.size()) + " components, dimension is " +
                         std::to_string(p.dimension));
  }
  Interval interval;
  if (const auto s = field->get_optional<std::string>("interval")) {
    interval = detail::interval(*s, "field.interval");
  }
  p.field = VectorFieldSpec::parse(components, interval, detail::box(*field, p.dimension, "field"));

  if (const auto* run = detail::section(tree, "run")) {
    p.base_time = detail::optional_number(*run, "base_time", "run");
    if (const auto s = run->get_optional<std::string>("window")) {
      p.window = detail::interval(*s, "run.window");
    }
    p.tol.rtol = detail::optional_number(*run, "rtol", "run").value_or(p.tol.rtol);
    p.tol.atol = detail::optional_number(*run, "atol", "run").value_or(p.tol.atol);
    p.samples = detail::count(*run, "samples", "run", p.samples);
  }
  if (!p.window.finite()) {
    p.window = {-1.0, 1.0};
  }

  if (const auto* probe = detail::section(tree, "probe")) {
    p.probe_times = detail::count(*probe, "times", "probe", p.probe_times);
    p.probe_per_axis = detail::count(*probe, "per_axis", "probe", p.probe_per_axis);
    p.probe_box = detail::box(*probe, p.dimension, "probe");
  }

  if (const auto* solve = detail::section(tree, "solve")) {
    p.solve_t0 = detail::optional_number(*solve, "t0", "solve");
    p.solve_target = detail::optional_number(*solve, "target", "solve");
    if (const auto s = solve->get_optional<std::string>("x0")) {
      const auto v = detail::numbers(*s, "solve.x0", p.dimension);
      p.solve_x0 = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  }

  if (const auto* check = detail::section(tree, "check")) {
    if (const auto s = check->get_optional<std::string>("window")) {
      p.check_window = detail::interval(*s, "check.window");
    }
    for (const auto& s : detail::numbered(*check, "ic")) {
      p.check_ics.push_back(detail::point(s, p.dimension, "check.ic"));
    }
  }

  if (const auto* diag = detail::section(tree, "diagnose")) {
    if (const auto s = diag->get_optional<std::string>("radii")) {
      p.radii = detail::numbers(*s, "diagnose.radii");
    }
  }

  if (const auto* uq = detail::section(tree, "uniqueness")) {
    p.uniqueness_t_end = detail::optional_number(*uq, "t_end", "uniqueness");
    for (const auto& s : detail::numbered(*uq, "point")) {
      p.uniqueness_points.push_back(detail::point(s, p.dimension, "uniqueness.point"));
    }
  }

  for (const auto& [name, sec] : tree) {
    if (name.rfind("element.", 0) == 0) {
      const std::string label = name.substr(8);
      if (label.empty() || label == "identity") {
        throw InvalidInput("invalid element name '" + label + "'");
      }
      p.elements.emplace(label, detail::element(sec, p.dimension, name));
    } else if (name.rfind("candidate.", 0) == 0) {
      CandidateSolution c{name.substr(10), {}};
      for (std::size_t i = 1; i <= p.dimension; ++i) {
        const auto s = sec.get_optional<std::string>("x" + std::to_string(i));
        if (!s) {
          throw InvalidInput(name + ": x" + std::to_string(i) + " missing");
        }
        Expression e = parse(*s, p.dimension);
        for (std::size_t j = 0; j < p.dimension; ++j) {
          if (e.depends_on(Variable::space(j))) {
            throw InvalidInput(name + ": candidate components must depend on t only");
          }
        }
        c.components.push_back(std::move(e));
      }
      p.candidates.push_back(std::move(c));
    }
  }
  return p;
}

[[nodiscard]] inline Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInput("cannot open problem file '" + path + "'");
  }
  return parse_problem(in);
}

}  // namespace rectify::cli
