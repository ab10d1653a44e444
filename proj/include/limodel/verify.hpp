#pragma once

// The verification pipeline behind the CLI: runs every structural check on a
// configured system and collects statuses, metrics and witnesses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"
#include "limodel/config.hpp"
#include "limodel/core.hpp"
#include "limodel/dynamics.hpp"
#include "limodel/kernel.hpp"
#include "limodel/model.hpp"
#include "limodel/operators.hpp"

namespace limodel {

using Json = nlohmann::json;

inline const std::vector<std::string>& pipeline_stages() {
  static const std::vector<std::string> stages{
      "orbit_analysis",     "operator_build",   "left_invertibility", "wandering_subspace", "li_condition",
      "prep_condition",     "cauchy_dual_oracle", "model_coefficients", "intertwining",     "pairing_isometry",
      "radii",              "shimorin_coincidence", "kernel_blocks",  "kernel_two_path",    "band_structure",
      "reproducing_property", "gram_positivity", "eigenrelation"};
  return stages;
}

enum class Mode { verify, model, kernel, radii };

inline std::set<std::string> stages_for(Mode mode) {
  const auto& all = pipeline_stages();
  switch (mode) {
    case Mode::verify: return {all.begin(), all.end()};
    case Mode::model:
      return {"orbit_analysis",     "operator_build",     "left_invertibility", "wandering_subspace",
              "li_condition",       "prep_condition",     "cauchy_dual_oracle", "model_coefficients",
              "intertwining"};
    case Mode::kernel:
      return {"orbit_analysis",  "operator_build",  "left_invertibility",  "wandering_subspace",
              "li_condition",    "prep_condition",  "radii",               "kernel_blocks",
              "kernel_two_path", "band_structure",  "reproducing_property", "gram_positivity"};
    case Mode::radii:
      return {"orbit_analysis", "operator_build", "left_invertibility", "wandering_subspace", "radii"};
  }
  return {};
}

struct CheckResult {
  std::string name;
  Status status = Status::skipped;
  std::string message;
  Json metrics = Json::object();
  Json witness = Json::object();
};

struct Report {
  std::string name;
  std::string command = "verify";
  std::vector<CheckResult> checks;
  Json system = Json::object();
  Json provenance = Json::object();
  Json radii;         // null unless requested
  Json coefficients;  // null unless requested
  Json blocks;        // null unless requested
  std::vector<std::string> notes;

  const CheckResult* find(const std::string& n) const {
    for (const auto& c : checks)
      if (c.name == n) return &c;
    return nullptr;
  }

  int exit_code() const {
    bool inconclusive = false;
    for (const auto& c : checks) {
      if (c.status == Status::fail) return 1;
      if (c.status == Status::inconclusive) inconclusive = true;
    }
    return inconclusive ? 3 : 0;
  }
};

struct RunOptions {
  Mode mode = Mode::verify;
  std::optional<Index> depth_override;
  std::optional<std::uint64_t> seed;
};

struct ResolvedDepths {
  Index coefficients = 0;
  Index kernel = 0;
  Index verification = 0;
  Index prep = 0;
  Index radii = 0;
  Index pairing = 0;
};

inline ResolvedDepths resolve_depths(const JobConfig& cfg, std::optional<Index> depth_override) {
  const Index n = cfg.system.size();
  const auto extent = static_cast<Index>(std::max<std::int64_t>(cfg.window_extent, 1));
  ResolvedDepths d;
  d.coefficients = cfg.depths.coefficients.value_or(std::max<Index>(8, extent / 2));
  d.kernel = cfg.depths.kernel.value_or(20);
  d.verification = depth_override.value_or(cfg.depths.verification.value_or(n));
  d.prep = cfg.depths.prep.value_or(20);
  d.radii = cfg.depths.radii.value_or(40);
  d.pairing = cfg.depths.pairing.value_or(std::min<Index>(20000, std::max<Index>(400, 4 * n)));
  return d;
}

inline std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, text.data(), text.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return out.str();
}

inline Json complex_json(Complex c) { return Json::array({c.real(), c.imag()}); }

namespace detail {

inline Vector random_unit(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = nd(rng);
    const double im = nd(rng);
    v(i) = Complex(re, im);
  }
  return v / v.norm();
}

/// Raw sparse power T^n x with no exactness bookkeeping.
inline Vector plain_power(const SparseMatrix& m, const Vector& x, Index n) {
  Vector y = x;
  for (Index k = 0; k < n; ++k) y = m * y;
  return y;
}

inline std::vector<Index> basis_sample(Index n, Index cap) {
  std::vector<Index> out;
  if (n <= cap) {
    for (Index i = 0; i < n; ++i) out.push_back(i);
  } else {
    for (Index k = 0; k < cap; ++k) out.push_back(k * (n - 1) / (cap - 1));
  }
  return out;
}

/// `count` points with moduli spread over [lo, hi] and rotating arguments.
inline std::vector<Complex> spread_points(double lo, double hi, Index count, double phase) {
  std::vector<Complex> out;
  for (Index k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(count - 1);
    const double r = lo + t * (hi - lo);
    const double a = phase + 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
    out.push_back(std::polar(r, a));
  }
  return out;
}

inline std::optional<Index> construction_root(const SystemSpec& spec, const std::string& trace) {
  const auto colon = trace.find(':');
  if (colon == std::string::npos) return std::nullopt;
  return spec.find(trace.substr(colon + 1));
}

}  // namespace detail

inline Report run_verify(const JobConfig& cfg, const RunOptions& opt = {}) {
  Report rep;
  rep.name = cfg.name;
  const std::set<std::string> wanted = stages_for(opt.mode);
  const ResolvedDepths depth = resolve_depths(cfg, opt.depth_override);
  const std::uint64_t seed = opt.seed.value_or(cfg.seed);
  const Tolerances& tol = cfg.tolerances;
  const SystemSpec& spec = cfg.system;
  const Index n = spec.size();

  rep.provenance = {{"config_sha256", sha256_hex(cfg.source_text)},
                    {"version", kVersion},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"seed", seed},
                    {"depths",
                     {{"coefficients", depth.coefficients},
                      {"kernel", depth.kernel},
                      {"verification", depth.verification},
                      {"prep", depth.prep},
                      {"radii", depth.radii},
                      {"pairing", depth.pairing}}},
                    {"tolerances", tol.as_map()}};
  rep.system = {{"family", spec.meta().family}, {"points", n}, {"extent", cfg.window_extent}, {"closed", spec.closed()}};

  std::optional<OrbitStructure> orbits;
  std::optional<TruncatedOperator> t, tp;
  std::optional<WanderingSubspace> e;
  std::optional<RadiiEstimate> radii;
  std::optional<KernelBlocks> blocks;
  std::optional<std::int64_t> kphi;
  bool li_ok = false;
  bool prep_ok = false;
  bool prep_applicable = true;
  bool fallback_e = false;
  std::set<std::string> failed;

  auto run = [&](const std::string& name, const std::vector<std::string>& needs, const std::function<void(CheckResult&)>& body) {
    if (!wanted.count(name)) return;
    CheckResult c;
    c.name = name;
    for (const auto& dep : needs) {
      if (failed.count(dep) || (wanted.count(dep) == 0 && dep != "")) {
        if (failed.count(dep)) {
          c.status = Status::skipped;
          c.message = "depends on " + dep;
          failed.insert(name);
          rep.checks.push_back(c);
          return;
        }
      }
    }
    try {
      body(c);
    } catch (const Error& err) {
      c.status = Status::fail;
      c.message = err.what();
      c.witness["error"] = to_string(err.kind());
    } catch (const std::exception& err) {
      c.status = Status::fail;
      c.message = err.what();
    }
    if (c.status == Status::fail || c.status == Status::skipped) failed.insert(name);
    rep.checks.push_back(c);
  };

  // -------------------------------------------------------------------------
  run("orbit_analysis", {}, [&](CheckResult& c) {
    orbits = analyze_orbits(spec);
    Json cyc = Json::array();
    for (const auto& o : orbits->orbits) {
      Json ids = Json::array();
      for (Index x : o.cycle) ids.push_back(spec.id(x));
      cyc.push_back(ids);
    }
    c.metrics = {{"orbits", orbits->orbits.size()},
                 {"cycles", cyc},
                 {"branching_points", orbits->branching_points.size()},
                 {"branching_index", orbits->branching_index}};
    if (auto w = orbits->omega()) c.metrics["omega"] = spec.id(*w);
    // level law off cycles
    for (Index x = 0; x < n; ++x) {
      if (orbits->on_cycle[x] || !spec.phi(x).inside()) continue;
      if (orbits->level[spec.phi(x).index] + 1 != orbits->level[x]) {
        c.status = Status::fail;
        c.message = "level law broken";
        c.witness = {{"point", spec.id(x)}};
        return;
      }
    }
    rep.system["has_cycle"] = orbits->has_cycle();
    c.status = Status::pass;
  });

  run("operator_build", {"orbit_analysis"}, [&](CheckResult& c) {
    t = build_composition(spec);
    const GramDiagonal g = gram_diagonal(*t, spec);
    const Matrix d = t->dense();
    double worst = 0.0;
    Index interior = 0;
    for (Index x = 0; x < n; ++x) {
      if (!g.interior[x]) continue;
      ++interior;
      worst = std::max(worst, std::abs(d.col(static_cast<Eigen::Index>(x)).squaredNorm() - g.values[x]));
    }
    c.metrics = {{"nonzeros", t->matrix().nonZeros()}, {"interior_columns", interior}, {"gram_diagonal_error", worst}};
    c.status = worst <= 1e-12 * std::max(1.0, d.cwiseAbs2().maxCoeff()) ? Status::pass : Status::fail;
  });

  run("left_invertibility", {"operator_build"}, [&](CheckResult& c) {
    const LeftInvertibility li = is_left_invertible(*t, spec, tol.left_inverse_floor);
    c.metrics = {{"min_gram", li.min_gram}, {"floor", tol.left_inverse_floor}, {"boundary_failures", li.boundary_failures.size()}};
    if (li.witness) c.witness["argmin"] = spec.id(*li.witness);
    if (!li.holds) {
      c.status = Status::fail;
      c.message = "C*C falls below the floor";
      return;
    }
    tp = cauchy_dual(*t, spec);
    c.status = Status::pass;
  });

  run("wandering_subspace", {"left_invertibility"}, [&](CheckResult& c) {
    e = wandering_subspace(spec, *orbits);
    const Index d = e->dim();
    const Matrix gram = e->basis.adjoint() * e->basis;
    const double ortho = d == 0 ? 0.0 : (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    double kernel = 0.0;
    for (Index b = 0; b < d; ++b) {
      const std::string& tr = e->construction_trace[b];
      if (tr.rfind("cycle_point", 0) == 0) {
        fallback_e = true;
        continue;
      }
      auto root = detail::construction_root(spec, tr);
      if (!root) continue;
      const Vector cv = t->adjoint_matrix() * e->basis.col(static_cast<Eigen::Index>(b));
      for (Index x : descendants(spec, *root).points) kernel = std::max(kernel, std::abs(cv(static_cast<Eigen::Index>(x))));
    }
    Json trace = e->construction_trace;
    c.metrics = {{"dim", d}, {"orthonormality_error", ortho}, {"kernel_residual", kernel}, {"trace", trace},
                 {"truncated", e->truncated}};
    if (fallback_e) {
      prep_applicable = false;
      rep.notes.push_back("no point of level 1: E falls back to the span of a cycle point");
    }
    if (!e->support.empty()) {
      try {
        kphi = k_phi(*orbits, e->support);
        c.metrics["k_phi"] = *kphi;
      } catch (const Error&) {
      }
    }
    if (orbits->has_cycle() && kphi) {
      for (Index x : e->support)
        if (orbits->level[x] < 1 || orbits->level[x] > *kphi) {
          c.status = Status::fail;
          c.message = "support leaves Gen(1, k_phi)";
          c.witness = {{"point", spec.id(x)}};
          return;
        }
    }
    const bool ok = d > 0 && ortho <= tol.orthonormality && kernel <= 1e-12;
    c.status = ok ? Status::pass : Status::fail;
    if (!ok) c.message = d == 0 ? "empty subspace" : "orthonormality or kernel property violated";
  });

  run("li_condition", {"wandering_subspace"}, [&](CheckResult& c) {
    const LiResult a = check_li(*t, *tp, *e, depth.verification, tol.rank);
    const LiResult b = check_li(*tp, *t, *e, depth.verification, tol.rank);
    c.metrics = {{"rank_T", a.rank},       {"rank_dual", b.rank},       {"window", n},
                 {"residual_T", a.residual}, {"residual_dual", b.residual}, {"depth", depth.verification}};
    if (a.status == Status::pass && b.status == Status::pass) {
      li_ok = true;
      c.status = Status::pass;
    } else if (a.status == Status::fail || b.status == Status::fail) {
      c.status = Status::fail;
      c.message = "joint span does not fill the window";
    } else {
      c.status = Status::inconclusive;
      c.message = "rank still growing at depth";
    }
  });

  run("prep_condition", {"wandering_subspace"}, [&](CheckResult& c) {
    const PrepResult p = check_prep(*t, *tp, *e, depth.prep, tol.prep);
    c.metrics = {{"max_violation", p.max_violation}, {"depth", depth.prep}, {"exact", p.exact}};
    if (p.max_violation > 0.0)
      c.witness = {{"power", p.power}, {"from", p.from}, {"to", p.to}, {"family", p.family}};
    if (!prep_applicable) {
      c.status = Status::not_applicable;
      c.message = "E is not given by the level-one construction";
      return;
    }
    prep_ok = p.holds;
    c.status = p.holds ? (p.exact ? Status::pass : Status::inconclusive) : Status::fail;
  });

  run("cauchy_dual_oracle", {"left_invertibility"}, [&](CheckResult& c) {
    const Matrix dense_t = t->dense();
    const Matrix oracle = dense_cauchy_dual(dense_t, t->col_exact());
    const Matrix sparse_d = tp->dense();
    const Matrix dd = cauchy_dual(*tp, spec).dense();
    const Matrix printed = cauchy_dual(*t, spec, DualDenominator::printed).dense();
    const Matrix left = sparse_d.adjoint() * dense_t;
    double diff = 0.0, twice = 0.0, inverse = 0.0, printed_diff = 0.0;
    std::optional<Index> worst;
    for (Index j = 0; j < n; ++j) {
      if (!t->col_exact()[j]) continue;
      const auto jj = static_cast<Eigen::Index>(j);
      const double dj = (sparse_d.col(jj) - oracle.col(jj)).cwiseAbs().maxCoeff();
      if (dj > diff) {
        diff = dj;
        worst = j;
      }
      twice = std::max(twice, (dd.col(jj) - dense_t.col(jj)).cwiseAbs().maxCoeff());
      printed_diff = std::max(printed_diff, (printed.col(jj) - oracle.col(jj)).cwiseAbs().maxCoeff());
      for (Index i = 0; i < n; ++i) {
        if (!t->col_exact()[i]) continue;
        const Complex want = i == j ? Complex(1.0) : Complex(0.0);
        inverse = std::max(inverse, std::abs(left(static_cast<Eigen::Index>(i), jj) - want));
      }
    }
    c.metrics = {{"max_abs_diff", diff},
                 {"dual_of_dual_diff", twice},
                 {"left_inverse_error", inverse},
                 {"printed_denominator_diff", printed_diff}};
    if (worst) c.witness["column"] = spec.id(*worst);
    c.status = diff <= tol.cauchy_dual && twice <= tol.cauchy_dual && inverse <= tol.cauchy_dual ? Status::pass : Status::fail;
  });

  const Orders coef_orders{depth.coefficients, depth.coefficients};
  std::optional<LaurentModel> model;
  auto ensure_model = [&] {
    if (!model) model.emplace(*t, *tp, *e, coef_orders);
  };
  const std::vector<Index> sample = detail::basis_sample(n, 512);
  if (sample.size() < n) rep.notes.push_back("per-vector checks use " + std::to_string(sample.size()) + " evenly spaced basis vectors");

  run("model_coefficients", {"wandering_subspace"}, [&](CheckResult& c) {
    ensure_model();
    double err = 0.0;
    Index exact = 0, total = 0;
    Json table = Json::array();
    for (Index x : sample) {
      const Vector ex = TrackedVector::basis(n, x).value;
      const LaurentCoefficients f = model->coefficients(ex);
      for (Index k = 1; k <= coef_orders.neg; ++k) {
        ++total;
        if (!f.exact_at(-static_cast<std::int64_t>(k))) continue;
        ++exact;
        const Vector want = e->basis.adjoint() * detail::plain_power(t->matrix(), ex, k);
        err = std::max(err, (f.at(-static_cast<std::int64_t>(k)) - want).cwiseAbs().maxCoeff());
      }
      for (Index k = 0; k <= coef_orders.pos; ++k) {
        ++total;
        if (!f.exact_at(static_cast<std::int64_t>(k))) continue;
        ++exact;
        const Vector want = e->basis.adjoint() * detail::plain_power(tp->adjoint_matrix(), ex, k);
        err = std::max(err, (f.at(static_cast<std::int64_t>(k)) - want).cwiseAbs().maxCoeff());
      }
      if (cfg.outputs.count("coefficients")) {
        for (std::int64_t k = f.lowest(); k <= f.highest(); ++k) {
          const Vector& v = f.at(k);
          for (Eigen::Index g = 0; g < v.size(); ++g)
            if (v(g) != Complex(0))
              table.push_back({{"point", spec.id(x)}, {"index", k}, {"component", g}, {"value", complex_json(v(g))},
                               {"exact", f.exact_at(k)}});
        }
      }
    }
    if (cfg.outputs.count("coefficients")) rep.coefficients = table;
    double constants = 0.0;
    if (prep_applicable) {
      for (Index b = 0; b < e->dim(); ++b) {
        const LaurentCoefficients f = model->coefficients(e->vector(b));
        for (std::int64_t k = f.lowest(); k <= f.highest(); ++k) {
          Vector want = Vector::Zero(static_cast<Eigen::Index>(e->dim()));
          if (k == 0) want(static_cast<Eigen::Index>(b)) = 1.0;
          constants = std::max(constants, (f.at(k) - want).cwiseAbs().maxCoeff());
        }
      }
      c.metrics["constants_error"] = constants;
    }
    c.metrics["power_error"] = err;
    c.metrics["exact_coefficients"] = exact;
    c.metrics["coefficients"] = total;
    c.metrics["orders"] = {coef_orders.neg, coef_orders.pos};
    const bool ok = err <= tol.coefficients * std::max(1.0, 1.0) && (!prep_applicable || constants <= tol.constants);
    c.status = ok ? Status::pass : Status::fail;
    if (!ok) c.message = constants > tol.constants ? "U e is not constant" : "coefficients disagree with operator powers";
  });

  run("intertwining", {"wandering_subspace"}, [&](CheckResult& c) {
    ensure_model();
    double mz = 0.0, l = 0.0;
    Index compared = 0;
    std::optional<Index> worst;
    double worst_v = 0.0;
    for (Index x : sample) {
      const TrackedVector ex = TrackedVector::basis(n, x);
      const LaurentCoefficients ux = model->coefficients(ex);
      const LaurentCoefficients utx = model->coefficients(t->apply(ex));
      const LaurentCoefficients shifted = mz_apply(ux);
      for (std::int64_t k = utx.lowest(); k <= utx.highest(); ++k) {
        if (!shifted.has(k) || !utx.exact_at(k) || !shifted.exact_at(k)) continue;
        ++compared;
        const double d = (utx.at(k) - shifted.at(k)).cwiseAbs().maxCoeff();
        mz = std::max(mz, d);
        if (d > worst_v) {
          worst_v = d;
          worst = x;
        }
      }
      const LaurentCoefficients ubx = model->coefficients(tp->apply_adjoint(ex));
      const LaurentCoefficients lx = l_apply(ux, model->coefficients(model->kernel_part(ex)));
      for (std::int64_t k = ubx.lowest(); k <= ubx.highest(); ++k) {
        if (!lx.has(k) || !ubx.exact_at(k) || !lx.exact_at(k)) continue;
        ++compared;
        const double d = (ubx.at(k) - lx.at(k)).cwiseAbs().maxCoeff();
        l = std::max(l, d);
        if (d > worst_v) {
          worst_v = d;
          worst = x;
        }
      }
    }
    c.metrics = {{"mz_error", mz}, {"l_error", l}, {"compared", compared}};
    if (worst) c.witness["point"] = spec.id(*worst);
    if (compared == 0) {
      c.status = Status::inconclusive;
      c.message = "no window-exact coefficients to compare";
      return;
    }
    c.status = std::max(mz, l) <= tol.intertwining ? Status::pass : Status::fail;
  });

  run("pairing_isometry", {"li_condition", "prep_condition"}, [&](CheckResult& c) {
    if (!prep_applicable || !li_ok || !prep_ok) {
      c.status = Status::not_applicable;
      c.message = "pairing needs (prep) and both (LI) conditions";
      return;
    }
    const Orders po{depth.pairing, depth.pairing};
    const LaurentModel u(*t, *tp, *e, po);
    const LaurentModel ud(*tp, *t, *e, po);
    std::mt19937_64 rng(seed);
    double worst = 0.0, iso = 0.0;
    bool exact = true;
    Index worst_pair = 0;
    for (Index p = 0; p < cfg.random_pairs; ++p) {
      const Vector x = detail::random_unit(rng, n);
      const Vector y = detail::random_unit(rng, n);
      const LaurentCoefficients fx = u.coefficients(x);
      const PairingResult r = unitary_pairing(fx, ud.coefficients(y));
      const PairingResult s = unitary_pairing(fx, ud.coefficients(x));
      exact = exact && r.exact && s.exact;
      const double d = std::abs(r.value - y.dot(x));
      if (d > worst) {
        worst = d;
        worst_pair = p;
      }
      iso = std::max(iso, std::abs(s.value - 1.0));
    }
    c.metrics = {{"max_error", worst}, {"isometry_error", iso}, {"pairs", cfg.random_pairs}, {"orders", depth.pairing},
                 {"exact", exact}};
    if (worst > 0.0) c.witness = {{"pair", worst_pair}, {"seed", seed}};
    if (std::max(worst, iso) > tol.pairing) {
      c.status = Status::fail;
    } else {
      c.status = exact ? Status::pass : Status::inconclusive;
    }
  });

  run("radii", {"wandering_subspace"}, [&](CheckResult& c) {
    radii = estimate_radii(*t, *tp, *e, depth.radii);
    const Orbit& orb = orbits->orbit_containing(e->support.front());
    if (orb.has_cycle()) {
      double product = 1.0;
      for (Index x : orb.cycle) product *= std::abs(spec.weight(x));
      c.metrics["cycle_length"] = orb.cycle.size();
      c.metrics["cycle_product"] = product;
      c.metrics["cycle_root"] = std::pow(product, 1.0 / static_cast<double>(orb.cycle.size()));
    }
    try {
      attach_composition(*radii, composition_radii(spec, *orbits, *tp, *e, depth.radii));
    } catch (const Error& err) {
      radii->notes.push_back(std::string("composition radii unavailable: ") + err.what());
    }
    for (const auto& note : radii->notes) rep.notes.push_back(note);
    c.metrics = {{"r_minus", radii->r_minus},
                 {"r_plus", radii->r_plus},
                 {"annulus_nonempty", radii->annulus_nonempty},
                 {"stabilized", radii->stabilized},
                 {"depth", depth.radii}};
    if (radii->composition) {
      c.metrics["composition_r_minus"] = radii->composition->r_minus;
      c.metrics["composition_r_plus"] = radii->composition->r_plus;
    }
    if (!radii->annulus_nonempty) rep.notes.push_back("annulus is empty: model data is formal, point evaluation refused");
    rep.system["annulus_nonempty"] = radii->annulus_nonempty;
    if (cfg.outputs.count("radii") || opt.mode == Mode::radii) {
      Json rows = Json::array();
      for (Index k = 1; k <= radii->neg_norms.size(); ++k)
        rows.push_back({{"n", k},
                        {"neg_norm", radii->neg_norms[k - 1]},
                        {"pos_norm", radii->pos_norms[k - 1]},
                        {"neg_root", radii->neg_root(k)},
                        {"pos_root", radii->pos_root(k)},
                        {"exact", radii->neg_exact[k - 1] && radii->pos_exact[k - 1]}});
      rep.radii = {{"r_minus", radii->r_minus},  {"r_plus", radii->r_plus}, {"annulus_nonempty", radii->annulus_nonempty},
                   {"stabilized", radii->stabilized}, {"table", rows}};
      if (radii->composition) {
        rep.radii["composition"] = {{"r_minus", radii->composition->r_minus},
                                    {"r_plus", radii->composition->r_plus},
                                    {"minus_sequence", radii->composition->minus_sequence},
                                    {"plus_sequence", radii->composition->plus_sequence},
                                    {"truncated", radii->composition->truncated}};
      }
    }
    const bool finite = !std::isnan(radii->r_minus) && !std::isnan(radii->r_plus);
    c.status = finite ? Status::pass : Status::inconclusive;
    if (!finite) c.message = "no window-exact norms";
  });

  run("shimorin_coincidence", {"left_invertibility"}, [&](CheckResult& c) {
    const ShimorinResult s = shimorin_coincidence(*t, *tp, spec, depth.verification, tol.shimorin);
    c.metrics = {{"analytic", s.analytic}, {"rank", s.analytic_rank}, {"window", s.window}, {"max_negative", s.max_negative}};
    if (s.status == Status::inconclusive) {
      c.status = Status::inconclusive;
      c.message = "analyticity undecided at depth";
    } else if (!s.analytic) {
      c.status = Status::not_applicable;
      c.message = "operator is not analytic";
    } else {
      c.status = s.status;
    }
  });

  std::optional<KernelDomain> domain;
  auto samples = [&](Index count, double phase) {
    std::vector<Complex> pts;
    if (!cfg.sample_points.empty()) {
      for (Index k = 0; k < count; ++k) pts.push_back(cfg.sample_points[k % cfg.sample_points.size()]);
      return pts;
    }
    const double lo = domain->disc ? 0.0 : domain->r_minus + domain->margin;
    const double hi = std::isfinite(domain->r_plus) ? domain->r_plus - domain->margin : lo + 1.0;
    return detail::spread_points(lo, hi, count, phase);
  };

  run("kernel_blocks", {"wandering_subspace", "radii"}, [&](CheckResult& c) {
    blocks = kernel_blocks(*t, *tp, *e, depth.kernel);
    blocks->cycle = orbits->has_cycle();
    if (kphi) blocks->band_k = *kphi;
    if (radii && radii->annulus_nonempty) {
      const double width = radii->r_plus - radii->r_minus;
      if (width > 2.0 * tol.margin || (radii->r_minus == 0.0)) {
        domain = KernelDomain::from(*radii, tol.margin);
        blocks->domain = domain;
      } else {
        rep.notes.push_back("annulus narrower than twice the evaluation margin");
      }
    }
    const Index m = blocks->max_order;
    const auto d = static_cast<Eigen::Index>(blocks->dim);
    double sym = 0.0, d00 = (blocks->D[0][0] - Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), gram = 0.0;
    auto rel = [](const Matrix& a, const Matrix& b) {
      return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff());
    };
    for (Index i = 0; i <= m; ++i)
      for (Index j = 0; j <= m; ++j) {
        if (i >= 1 && j >= 1) sym = std::max(sym, rel(blocks->A[i][j].adjoint(), blocks->A[j][i]));
        sym = std::max(sym, rel(blocks->D[i][j].adjoint(), blocks->D[j][i]));
        if (j >= 1) sym = std::max(sym, rel(blocks->C[i][j].adjoint(), blocks->B[j][i]));
      }
    std::vector<std::vector<Vector>> fwd(blocks->dim);
    for (Index g = 0; g < blocks->dim; ++g) {
      Vector v = e->basis.col(static_cast<Eigen::Index>(g));
      for (Index k = 0; k <= m; ++k) {
        fwd[g].push_back(v);
        v = tp->matrix() * v;
      }
    }
    for (Index i = 0; i <= m; ++i)
      for (Index j = 0; j <= m; ++j)
        for (Index a = 0; a < blocks->dim; ++a)
          for (Index b = 0; b < blocks->dim; ++b)
            gram = std::max(gram, std::abs(blocks->D[i][j](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) -
                                           fwd[a][i].dot(fwd[b][j])));
    c.metrics = {{"max_order", m},
                 {"dim", blocks->dim},
                 {"symmetry_error", sym},
                 {"d00_error", d00},
                 {"d_gram_error", gram},
                 {"inexact_blocks", blocks->inexact.size()},
                 {"evaluable", blocks->domain.has_value()}};
    if (cfg.outputs.count("blocks")) {
      Json rows = Json::array();
      const std::vector<std::pair<char, const std::vector<std::vector<Matrix>>*>> fams{
          {'A', &blocks->A}, {'B', &blocks->B}, {'C', &blocks->C}, {'D', &blocks->D}};
      for (const auto& [f, fam] : fams)
        for (Index i = 0; i <= m; ++i)
          for (Index j = 0; j <= m; ++j) {
            if ((f == 'A' && (i == 0 || j == 0)) || (f == 'B' && i == 0) || (f == 'C' && j == 0)) continue;
            const Matrix& blk = (*fam)[i][j];
            for (Eigen::Index a = 0; a < blk.rows(); ++a)
              for (Eigen::Index b = 0; b < blk.cols(); ++b)
                if (blk(a, b) != Complex(0))
                  rows.push_back({{"family", std::string(1, f)}, {"i", i}, {"j", j}, {"a", a}, {"b", b},
                                  {"value", complex_json(blk(a, b))}});
          }
      rep.blocks = rows;
    }
    if (!blocks->exact()) c.witness["first_inexact"] = blocks->inexact.front();
    const bool ok = sym <= tol.symmetry && d00 <= tol.symmetry && gram <= tol.symmetry;
    c.status = ok ? (blocks->exact() ? Status::pass : Status::inconclusive) : Status::fail;
  });

  run("kernel_two_path", {"kernel_blocks"}, [&](CheckResult& c) {
    if (!domain) {
      c.status = Status::not_applicable;
      c.message = "formal mode";
      return;
    }
    const std::vector<Complex> pts = samples(5, 0.3);
    double worst_ratio = 0.0, worst_diff = 0.0;
    Index evaluated = 0, singular = 0;
    Json wit;
    for (Complex z : pts)
      for (Complex l : pts) {
        const KernelValue kv = kernel_eval(*blocks, z, l);
        Matrix res;
        try {
          res = kernel_resolvent(*t, *tp, *e, z, l);
        } catch (const Error& err) {
          if (err.kind() != ErrorKind::singular_resolvent) throw;
          ++singular;
          continue;
        }
        ++evaluated;
        const double diff = (kv.value - res).norm();
        const double allowed = kv.tail_bound + 1e-12 * (1.0 + kv.value.norm());
        worst_diff = std::max(worst_diff, diff);
        if (diff / allowed > worst_ratio) {
          worst_ratio = diff / allowed;
          wit = {{"z", complex_json(z)}, {"lambda", complex_json(l)}, {"diff", diff}, {"bound", allowed}};
        }
      }
    c.metrics = {{"evaluated", evaluated}, {"singular", singular}, {"max_diff", worst_diff}, {"max_ratio", worst_ratio}};
    c.witness = wit.is_null() ? Json::object() : wit;
    if (evaluated == 0) {
      c.status = Status::inconclusive;
      return;
    }
    c.status = worst_ratio <= 1.0 ? Status::pass : Status::fail;
  });

  run("band_structure", {"kernel_blocks"}, [&](CheckResult& c) {
    if (blocks->cycle) {
      c.status = Status::not_applicable;
      c.message = "system has a cycle";
      return;
    }
    if (!kphi) {
      c.status = Status::inconclusive;
      c.message = "k_phi undefined for this subspace";
      return;
    }
    const auto v = band_check(*blocks, *kphi, tol.band);
    c.metrics = {{"k", *kphi}, {"violations", v.size()}, {"max_order", blocks->max_order}};
    if (*kphi >= 1) c.metrics["control_violations"] = band_check(*blocks, *kphi - 1, tol.band).size();
    if (!v.empty())
      c.witness = {{"family", std::string(1, v.front().family)}, {"i", v.front().i}, {"j", v.front().j}, {"norm", v.front().norm}};
    c.status = v.empty() ? Status::pass : Status::fail;
  });

  run("reproducing_property", {"kernel_blocks"}, [&](CheckResult& c) {
    if (!domain) {
      c.status = Status::not_applicable;
      c.message = "formal mode";
      return;
    }
    if (!prep_applicable) {
      c.status = Status::not_applicable;
      c.message = "pairing needs (prep)";
      return;
    }
    const Orders po{depth.pairing, depth.pairing};
    const LaurentModel u(*t, *tp, *e, po);
    const LaurentModel ud(*tp, *t, *e, po);
    KernelBlocks kb = *blocks;
    kb.max_order = depth.pairing;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<Vector> xs{e->basis.col(0)};
    for (int k = 0; k < 3; ++k) xs.push_back(detail::random_unit(rng, n));
    double worst = 0.0, ratio = 0.0, via_pairing = 0.0;
    bool exact = true, pairing_exact_all = true;
    Json wit = Json::object();
    for (Complex l : samples(10, 0.1)) {
      for (Index k = 0; k < xs.size(); ++k) {
        const ReproducingResult r = reproducing_check(u, ud, kb, l, xs[k]);
        exact = exact && r.exact;
        pairing_exact_all = pairing_exact_all && r.pairing_exact;
        via_pairing = std::max(via_pairing, r.pairing_residual);
        worst = std::max(worst, r.max_residual);
        if (r.max_residual / r.bound > ratio) {
          ratio = r.max_residual / r.bound;
          wit = {{"lambda", complex_json(l)}, {"vector", k}, {"residual", r.max_residual}, {"bound", r.bound}};
        }
      }
    }
    c.metrics = {{"max_residual", worst}, {"max_ratio", ratio}, {"exact", exact}, {"orders", depth.pairing},
                 {"pairing_residual", via_pairing}, {"pairing_exact", pairing_exact_all}};
    c.witness = wit;
    c.status = ratio <= 1.0 ? (exact ? Status::pass : Status::inconclusive) : Status::fail;
  });

  run("gram_positivity", {"kernel_blocks"}, [&](CheckResult& c) {
    if (!domain) {
      c.status = Status::not_applicable;
      c.message = "formal mode";
      return;
    }
    const double mn = gram_psd_check(*blocks, samples(6, 0.7));
    c.metrics = {{"min_eigenvalue", mn}, {"points", 6}};
    c.status = mn >= -tol.psd ? Status::pass : Status::fail;
  });

  run("eigenrelation", {"kernel_blocks"}, [&](CheckResult& c) {
    if (!domain) {
      c.status = Status::not_applicable;
      c.message = "formal mode";
      return;
    }
    double worst = 0.0, ratio = 0.0;
    bool empty = true;
    for (Complex l : samples(3, 1.1)) {
      const EigenResult r = eigenrelation_check(*t, *tp, *e, l, depth.kernel);
      worst = std::max(worst, r.max_residual);
      ratio = std::max(ratio, r.max_residual / r.bound);
      empty = empty && r.point_spectrum_empty;
    }
    c.metrics = {{"max_residual", worst}, {"max_ratio", ratio}, {"point_spectrum_empty", empty}, {"order", depth.kernel}};
    c.status = ratio <= 1.0 && empty ? Status::pass : Status::fail;
  });

  return rep;
}

}  // namespace limodel
