#pragma once

// Job configuration: a versioned JSON document naming a built-in family or an
// inline system, plus depths, tolerances, outputs and sample points.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "limodel/core.hpp"
#include "limodel/dynamics.hpp"
#include "limodel/systems.hpp"

namespace limodel {

inline constexpr const char* kConfigSchema = "limodel/1";

struct Depths {
  std::optional<Index> coefficients;
  std::optional<Index> kernel;
  std::optional<Index> verification;
  std::optional<Index> prep;
  std::optional<Index> radii;
  std::optional<Index> pairing;
};

struct Tolerances {
  double left_inverse_floor = 1e-6;
  double orthonormality = 1e-12;
  double cauchy_dual = 1e-10;
  double rank = 1e-8;
  double prep = 1e-10;
  double coefficients = 1e-12;
  double constants = 1e-12;
  double intertwining = 1e-10;
  double pairing = 1e-9;
  double shimorin = 1e-12;
  double symmetry = 1e-12;
  double band = 1e-12;
  double psd = 1e-9;
  double margin = 0.05;

  std::map<std::string, double> as_map() const {
    return {{"band", band},
            {"cauchy_dual", cauchy_dual},
            {"coefficients", coefficients},
            {"constants", constants},
            {"intertwining", intertwining},
            {"left_inverse_floor", left_inverse_floor},
            {"margin", margin},
            {"orthonormality", orthonormality},
            {"pairing", pairing},
            {"prep", prep},
            {"psd", psd},
            {"rank", rank},
            {"shimorin", shimorin},
            {"symmetry", symmetry}};
  }
};

struct JobConfig {
  std::string name;
  nlohmann::json system_doc;  // the "system" object as given
  SystemSpec system;
  std::int64_t window_extent = 0;
  Depths depths;
  Tolerances tolerances;
  std::set<std::string> outputs;
  std::vector<Complex> sample_points;
  Index random_pairs = 100;
  std::uint64_t seed = 1;
  std::string source_text;  // raw document, hashed into the report
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::config_validation, where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw Error(ErrorKind::config_validation, where + ": unknown key '" + it.key() + "'");
}

inline Complex to_complex(const nlohmann::json& v, const std::string& field) {
  Complex c;
  if (v.is_number()) {
    c = Complex(v.get<double>(), 0.0);
  } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    c = Complex(v[0].get<double>(), v[1].get<double>());
  } else {
    throw Error(ErrorKind::config_validation, field + ": expected a number or [re, im]");
  }
  if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
    throw Error(ErrorKind::config_validation, field + ": non-finite value");
  return c;
}

inline Complex nonzero_weight(const nlohmann::json& v, const std::string& field) {
  const Complex c = to_complex(v, field);
  if (c == Complex(0)) throw Error(ErrorKind::config_validation, field + ": weight must be nonzero");
  return c;
}

inline std::vector<Complex> weight_list(const nlohmann::json& v, const std::string& field) {
  if (!v.is_array()) throw Error(ErrorKind::config_validation, field + ": expected an array");
  std::vector<Complex> out;
  for (Index i = 0; i < v.size(); ++i) out.push_back(nonzero_weight(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::int64_t integer(const nlohmann::json& obj, const std::string& key, const std::string& where,
                            std::optional<std::int64_t> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw Error(ErrorKind::config_validation, where + "." + key + ": required");
  }
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw Error(ErrorKind::config_validation, where + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

inline void check_extent(std::int64_t points, const std::string& where) {
  if (points > static_cast<std::int64_t>(kMaxWindowPoints))
    throw Error(ErrorKind::config_validation, where + ": window of " + std::to_string(points) +
                                                  " points exceeds the cap of " + std::to_string(kMaxWindowPoints));
}

inline std::pair<std::string, std::int64_t> line_column(const std::string& text, std::size_t byte) {
  std::int64_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {std::to_string(line) + ":" + std::to_string(col), line};
}

inline SystemSpec build_system(const nlohmann::json& sys, std::optional<std::int64_t> extent_override,
                               std::int64_t& extent) {
  const std::string where = "system";
  if (!sys.is_object()) throw Error(ErrorKind::config_validation, "system: expected an object");
  if (sys.contains("inline")) {
    reject_unknown(sys, {"inline"}, where);
    const auto& in = sys.at("inline");
    reject_unknown(in, {"points"}, "system.inline");
    if (!in.contains("points") || !in.at("points").is_array())
      throw Error(ErrorKind::config_validation, "system.inline.points: expected an array");
    const auto& pts = in.at("points");
    check_extent(static_cast<std::int64_t>(pts.size()), "system.inline.points");
    std::vector<std::string> ids;
    for (Index i = 0; i < pts.size(); ++i) {
      const std::string f = "system.inline.points[" + std::to_string(i) + "]";
      reject_unknown(pts[i], {"id", "phi", "weight", "complete"}, f);
      if (!pts[i].contains("id") || !pts[i].at("id").is_string())
        throw Error(ErrorKind::config_validation, f + ".id: expected a string");
      ids.push_back(pts[i].at("id").get<std::string>());
    }
    std::map<std::string, Index> pos;
    for (Index i = 0; i < ids.size(); ++i)
      if (!pos.emplace(ids[i], i).second)
        throw Error(ErrorKind::config_validation, "system.inline.points: duplicate id '" + ids[i] + "'");
    std::vector<Image> phi;
    std::vector<Complex> w;
    std::vector<bool> complete;
    for (Index i = 0; i < pts.size(); ++i) {
      const std::string f = "system.inline.points[" + std::to_string(i) + "]";
      const auto& p = pts[i];
      if (!p.contains("phi")) throw Error(ErrorKind::config_validation, f + ".phi: required (string, null or \"@outside\")");
      const auto& ph = p.at("phi");
      if (ph.is_null()) {
        phi.push_back(Image::none());
      } else if (ph.is_string() && ph.get<std::string>() == "@outside") {
        phi.push_back(Image::beyond());
      } else if (ph.is_string()) {
        auto it = pos.find(ph.get<std::string>());
        if (it == pos.end()) throw Error(ErrorKind::config_validation, f + ".phi: unknown point '" + ph.get<std::string>() + "'");
        phi.push_back(Image::to(it->second));
      } else {
        throw Error(ErrorKind::config_validation, f + ".phi: expected a string or null");
      }
      w.push_back(p.contains("weight") ? nonzero_weight(p.at("weight"), f + ".weight") : Complex(1.0));
      if (p.contains("complete") && !p.at("complete").is_boolean())
        throw Error(ErrorKind::config_validation, f + ".complete: expected a boolean");
      complete.push_back(p.value("complete", true));
    }
    extent = static_cast<std::int64_t>(ids.size());
    return SystemSpec(ids, phi, w, complete, {"inline", extent, std::nullopt});
  }

  if (!sys.contains("builtin") || !sys.at("builtin").is_string())
    throw Error(ErrorKind::config_validation, "system: needs \"builtin\" or \"inline\"");
  const std::string kind = sys.at("builtin").get<std::string>();
  const std::string bw = "system(" + kind + ")";

  if (kind == "cycle") {
    reject_unknown(sys, {"builtin", "n", "weights"}, bw);
    if (!sys.contains("weights")) throw Error(ErrorKind::config_validation, bw + ".weights: required");
    auto w = weight_list(sys.at("weights"), bw + ".weights");
    const std::int64_t n = integer(sys, "n", bw, static_cast<std::int64_t>(w.size()));
    if (n < 1 || static_cast<Index>(n) != w.size())
      throw Error(ErrorKind::config_validation, bw + ".n: must equal the number of weights");
    check_extent(n, bw);
    extent = n;
    return systems::cycle(w);
  }
  if (kind == "bilateral") {
    reject_unknown(sys, {"builtin", "rule", "window"}, bw);
    const std::string rule = sys.value("rule", std::string("unit"));
    systems::BilateralRule r;
    if (rule == "unit") r = systems::BilateralRule::unit;
    else if (rule == "half_below_zero") r = systems::BilateralRule::half_below_zero;
    else throw Error(ErrorKind::config_validation, bw + ".rule: expected \"unit\" or \"half_below_zero\"");
    const std::int64_t n = extent_override.value_or(integer(sys, "window", bw, 64));
    if (n < 1) throw Error(ErrorKind::config_validation, bw + ".window: must be >= 1");
    check_extent(2 * n + 1, bw);
    extent = n;
    return systems::bilateral(n, r);
  }
  if (kind == "ray_cycle") {
    reject_unknown(sys, {"builtin", "k", "cycle_weights", "ray_weight", "ray_weights", "window"}, bw);
    const std::int64_t k = integer(sys, "k", bw);
    if (k < 0) throw Error(ErrorKind::config_validation, bw + ".k: must be >= 0");
    std::vector<Complex> cw = sys.contains("cycle_weights") ? weight_list(sys.at("cycle_weights"), bw + ".cycle_weights")
                                                            : std::vector<Complex>(static_cast<Index>(k + 1), 1.0);
    if (cw.size() != static_cast<Index>(k + 1))
      throw Error(ErrorKind::config_validation, bw + ".cycle_weights: expected k+1 entries");
    const std::int64_t n = extent_override.value_or(integer(sys, "window", bw, 64));
    if (n < 1) throw Error(ErrorKind::config_validation, bw + ".window: must be >= 1");
    check_extent(n + k + 1, bw);
    std::vector<Complex> rw;
    if (sys.contains("ray_weights")) {
      rw = weight_list(sys.at("ray_weights"), bw + ".ray_weights");
      if (rw.size() != static_cast<Index>(n))
        throw Error(ErrorKind::config_validation, bw + ".ray_weights: expected one weight per ray point");
    } else {
      const Complex c = sys.contains("ray_weight") ? nonzero_weight(sys.at("ray_weight"), bw + ".ray_weight") : Complex(1.0);
      rw.assign(static_cast<Index>(n), c);
    }
    extent = n;
    return systems::ray_cycle(k, cw, [rw](std::int64_t i) { return rw[static_cast<Index>(i)]; }, n);
  }
  if (kind == "rooted_ray") {
    reject_unknown(sys, {"builtin", "window", "weight"}, bw);
    const std::int64_t n = extent_override.value_or(integer(sys, "window", bw, 64));
    if (n < 1) throw Error(ErrorKind::config_validation, bw + ".window: must be >= 1");
    check_extent(n + 1, bw);
    extent = n;
    const Complex w = sys.contains("weight") ? nonzero_weight(sys.at("weight"), bw + ".weight") : Complex(1.0);
    return systems::rooted_ray(n, w);
  }
  if (kind == "branching_tree") {
    reject_unknown(sys, {"builtin", "spine", "ray_weights", "ray_length", "spine_weight"}, bw);
    const std::int64_t spine = integer(sys, "spine", bw, 0);
    const std::int64_t len = extent_override.value_or(integer(sys, "ray_length", bw, 32));
    if (!sys.contains("ray_weights")) throw Error(ErrorKind::config_validation, bw + ".ray_weights: required");
    auto rw = weight_list(sys.at("ray_weights"), bw + ".ray_weights");
    if (rw.empty() || spine < 0 || len < 1)
      throw Error(ErrorKind::config_validation, bw + ": needs spine >= 0, ray_length >= 1 and at least one ray");
    check_extent(1 + spine + len * static_cast<std::int64_t>(rw.size()), bw);
    const Complex sw = sys.contains("spine_weight") ? nonzero_weight(sys.at("spine_weight"), bw + ".spine_weight") : Complex(1.0);
    extent = len;
    return systems::branching_tree(spine, rw, len, sw);
  }
  if (kind == "ray_line") {
    reject_unknown(sys, {"builtin", "window", "above", "below", "ray_weights"}, bw);
    const std::int64_t n = extent_override.value_or(integer(sys, "window", bw, 32));
    if (n < 1) throw Error(ErrorKind::config_validation, bw + ".window: must be >= 1");
    auto rw = sys.contains("ray_weights") ? weight_list(sys.at("ray_weights"), bw + ".ray_weights") : std::vector<Complex>{};
    check_extent(2 * n + 1 + n * static_cast<std::int64_t>(rw.size()), bw);
    const Complex above = sys.contains("above") ? nonzero_weight(sys.at("above"), bw + ".above") : Complex(1.0);
    const Complex below = sys.contains("below") ? nonzero_weight(sys.at("below"), bw + ".below") : Complex(1.0);
    extent = n;
    return systems::ray_line(n, above, below, rw);
  }
  if (kind == "rooted_tree") {
    reject_unknown(sys, {"builtin", "nodes"}, bw);
    if (!sys.contains("nodes") || !sys.at("nodes").is_array())
      throw Error(ErrorKind::config_validation, bw + ".nodes: expected an array");
    std::vector<systems::TreeNode> nodes;
    const auto& arr = sys.at("nodes");
    check_extent(static_cast<std::int64_t>(arr.size()), bw);
    for (Index i = 0; i < arr.size(); ++i) {
      const std::string f = bw + ".nodes[" + std::to_string(i) + "]";
      reject_unknown(arr[i], {"id", "parent", "weight", "complete"}, f);
      systems::TreeNode node;
      if (!arr[i].contains("id") || !arr[i].at("id").is_string())
        throw Error(ErrorKind::config_validation, f + ".id: expected a string");
      node.id = arr[i].at("id").get<std::string>();
      if (arr[i].contains("parent") && !arr[i].at("parent").is_null()) {
        if (!arr[i].at("parent").is_string()) throw Error(ErrorKind::config_validation, f + ".parent: expected a string");
        node.parent = arr[i].at("parent").get<std::string>();
      }
      if (arr[i].contains("weight")) node.weight = nonzero_weight(arr[i].at("weight"), f + ".weight");
      if (arr[i].contains("complete")) {
        if (!arr[i].at("complete").is_boolean()) throw Error(ErrorKind::config_validation, f + ".complete: expected a boolean");
        node.complete = arr[i].at("complete").get<bool>();
      }
      nodes.push_back(node);
    }
    extent = static_cast<std::int64_t>(nodes.size());
    return systems::rooted_tree(nodes);
  }
  throw Error(ErrorKind::config_validation, "system.builtin: unknown family '" + kind + "'");
}

}  // namespace detail

inline JobConfig parse_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t at = e.byte == 0 ? 0 : e.byte - 1;
    throw Error(ErrorKind::config_parse, "line:column " + detail::line_column(text, at).first + ": " + e.what());
  }
  detail::reject_unknown(doc, {"schema", "name", "system", "window_extent", "depths", "tolerances", "outputs",
                               "sample_points", "random_pairs", "seed"},
                         "config");
  if (!doc.contains("schema") || doc.at("schema") != kConfigSchema)
    throw Error(ErrorKind::config_validation, std::string("schema: expected \"") + kConfigSchema + "\"");

  JobConfig cfg;
  cfg.source_text = text;
  if (doc.contains("name")) {
    if (!doc.at("name").is_string()) throw Error(ErrorKind::config_validation, "name: expected a string");
    cfg.name = doc.at("name").get<std::string>();
  }

  std::optional<std::int64_t> extent_override;
  if (doc.contains("window_extent")) {
    const auto& v = doc.at("window_extent");
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
      throw Error(ErrorKind::config_validation, "window_extent: expected a positive integer");
    if (v.get<std::int64_t>() > static_cast<std::int64_t>(kMaxWindowPoints))
      throw Error(ErrorKind::config_validation, "window_extent: exceeds the cap of " + std::to_string(kMaxWindowPoints));
    extent_override = v.get<std::int64_t>();
  }
  if (!doc.contains("system")) throw Error(ErrorKind::config_validation, "system: required");
  cfg.system_doc = doc.at("system");
  try {
    cfg.system = detail::build_system(cfg.system_doc, extent_override, cfg.window_extent);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_system) throw Error(ErrorKind::config_validation, std::string("system: ") + e.what());
    throw;
  }

  if (doc.contains("depths")) {
    const auto& d = doc.at("depths");
    detail::reject_unknown(d, {"coefficients", "kernel", "verification", "prep", "radii", "pairing"}, "depths");
    auto grab = [&](const char* key, std::optional<Index>& slot) {
      if (!d.contains(key)) return;
      const auto& v = d.at(key);
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || v.get<std::int64_t>() > 100000)
        throw Error(ErrorKind::config_validation, std::string("depths.") + key + ": expected an integer in [0, 100000]");
      slot = static_cast<Index>(v.get<std::int64_t>());
    };
    grab("coefficients", cfg.depths.coefficients);
    grab("kernel", cfg.depths.kernel);
    grab("verification", cfg.depths.verification);
    grab("prep", cfg.depths.prep);
    grab("radii", cfg.depths.radii);
    grab("pairing", cfg.depths.pairing);
  }

  if (doc.contains("tolerances")) {
    const auto& t = doc.at("tolerances");
    if (!t.is_object()) throw Error(ErrorKind::config_validation, "tolerances: expected an object");
    std::map<std::string, double*> slots{{"left_inverse_floor", &cfg.tolerances.left_inverse_floor},
                                         {"orthonormality", &cfg.tolerances.orthonormality},
                                         {"cauchy_dual", &cfg.tolerances.cauchy_dual},
                                         {"rank", &cfg.tolerances.rank},
                                         {"prep", &cfg.tolerances.prep},
                                         {"coefficients", &cfg.tolerances.coefficients},
                                         {"constants", &cfg.tolerances.constants},
                                         {"intertwining", &cfg.tolerances.intertwining},
                                         {"pairing", &cfg.tolerances.pairing},
                                         {"shimorin", &cfg.tolerances.shimorin},
                                         {"symmetry", &cfg.tolerances.symmetry},
                                         {"band", &cfg.tolerances.band},
                                         {"psd", &cfg.tolerances.psd},
                                         {"margin", &cfg.tolerances.margin}};
    for (auto it = t.begin(); it != t.end(); ++it) {
      auto s = slots.find(it.key());
      if (s == slots.end()) throw Error(ErrorKind::config_validation, "tolerances: unknown key '" + it.key() + "'");
      if (!it.value().is_number() || !(it.value().get<double>() > 0.0) || !std::isfinite(it.value().get<double>()))
        throw Error(ErrorKind::config_validation, "tolerances." + it.key() + ": expected a positive number");
      *s->second = it.value().get<double>();
    }
  }

  cfg.outputs = {"verify", "radii"};
  if (doc.contains("outputs")) {
    const auto& o = doc.at("outputs");
    if (!o.is_array()) throw Error(ErrorKind::config_validation, "outputs: expected an array");
    cfg.outputs.clear();
    const std::set<std::string> allowed{"coefficients", "blocks", "radii", "verify"};
    for (const auto& v : o) {
      if (!v.is_string() || !allowed.count(v.get<std::string>()))
        throw Error(ErrorKind::config_validation, "outputs: entries must be one of coefficients, blocks, radii, verify");
      cfg.outputs.insert(v.get<std::string>());
    }
  }

  if (doc.contains("sample_points")) {
    const auto& s = doc.at("sample_points");
    if (!s.is_array()) throw Error(ErrorKind::config_validation, "sample_points: expected an array");
    for (Index i = 0; i < s.size(); ++i)
      cfg.sample_points.push_back(detail::to_complex(s[i], "sample_points[" + std::to_string(i) + "]"));
  }
  if (doc.contains("random_pairs")) {
    const auto& v = doc.at("random_pairs");
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || v.get<std::int64_t>() > 100000)
      throw Error(ErrorKind::config_validation, "random_pairs: expected an integer in [0, 100000]");
    cfg.random_pairs = static_cast<Index>(v.get<std::int64_t>());
  }
  if (doc.contains("seed")) {
    const auto& v = doc.at("seed");
    if (!v.is_number_unsigned()) throw Error(ErrorKind::config_validation, "seed: expected a nonnegative integer");
    cfg.seed = v.get<std::uint64_t>();
  }
  return cfg;
}

}  // namespace limodel
