// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "limodel/limodel.hpp"
#include "oracles.hpp"

using namespace limodel;

namespace {

struct Built {
  SystemSpec spec;
  TruncatedOperator t, tp;
  WanderingSubspace e;

  explicit Built(SystemSpec s) : spec(std::move(s)) {
    t = build_composition(spec);
    tp = cauchy_dual(t, spec);
    e = wandering_subspace(spec, analyze_orbits(spec));
  }
};

SystemSpec example_three(std::int64_t window) {
  return systems::ray_cycle(3, {1.0, 1.0, 1.0, 1.0}, [](std::int64_t) { return Complex(2.0); }, window);
}

SystemSpec bilateral_half(std::int64_t window) {
  return systems::bilateral(window, systems::BilateralRule::half_below_zero);
}

std::vector<SystemSpec> model_systems() {
  return {bilateral_half(64), example_three(64), systems::rooted_ray(48),
          systems::branching_tree(2, {1.0, Complex(0.6, 0.8), 1.5}, 16), systems::ray_line(16, 0.5, 1.0, {2.0})};
}

std::vector<Complex> ring(double lo, double hi, int count, double phase) {
  std::vector<Complex> out;
  for (int k = 0; k < count; ++k)
    out.push_back(std::polar(lo + (hi - lo) * k / (count - 1), phase + 6.283185307179586 * k / count));
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

using Outcome = std::pair<bool, std::string>;

Outcome cauchy_dual_oracle() {
  std::mt19937_64 rng(2024);
  std::vector<SystemSpec> specs{systems::cycle({2.0, 3.0})};
  for (Index n : {2u, 3u, 5u}) {
    std::vector<Complex> w;
    for (Index i = 0; i < n; ++i) w.push_back(oracle::random_weight(rng));
    specs.push_back(systems::cycle(w));
  }
  specs.push_back(bilateral_half(64));
  specs.push_back(example_three(64));
  double worst = 0.0;
  for (const auto& s : specs) {
    const oracle::Graph g = oracle::graph(s);
    const auto cols = oracle::complete_columns(g);
    const Matrix want = oracle::cauchy_dual(oracle::composition(g), cols);
    const Matrix got = cauchy_dual(build_composition(s), s).dense();
    for (auto j : cols) worst = std::max(worst, oracle::max_abs(got.col(j) - want.col(j)));
  }
  // S'* e_n = (1/lambda_n) e_{n-1}, exact with dyadic weights
  const SystemSpec b = systems::bilateral(20, [](std::int64_t n) { return Complex(std::ldexp(1.0, static_cast<int>(n % 5))); });
  const TruncatedOperator d = cauchy_dual(build_composition(b), b);
  bool exact = true;
  for (std::int64_t n = -19; n <= 19; ++n) {
    const Vector out = d.apply_adjoint(TrackedVector::basis(b.size(), b.at(std::to_string(n)))).value;
    Vector want = Vector::Zero(static_cast<Eigen::Index>(b.size()));
    want(static_cast<Eigen::Index>(b.at(std::to_string(n - 1)))) = 1.0 / b.weight(b.at(std::to_string(n)));
    exact = exact && out == want;
  }
  return {worst <= 1e-10 && exact, "max error " + fmt(worst) + (exact ? ", closed form exact" : ", closed form differs")};
}

Outcome intertwining() {
  double worst = 0.0;
  Index compared = 0;
  for (const SystemSpec& sys : model_systems()) {
    Built s(sys);
    const LaurentModel m(s.t, s.tp, s.e, {24, 24});
    for (Index x = 0; x < s.spec.size(); ++x) {
      const TrackedVector ex = TrackedVector::basis(s.spec.size(), x);
      const LaurentCoefficients ux = m.coefficients(ex);
      const LaurentCoefficients pairs[2][2] = {{m.coefficients(s.t.apply(ex)), mz_apply(ux)},
                                               {m.coefficients(s.tp.apply_adjoint(ex)),
                                                l_apply(ux, m.coefficients(m.kernel_part(ex)))}};
      for (const auto& p : pairs)
        for (std::int64_t n = p[0].lowest(); n <= p[0].highest(); ++n)
          if (p[1].has(n) && p[0].exact_at(n) && p[1].exact_at(n)) {
            ++compared;
            worst = std::max(worst, oracle::max_abs(p[0].at(n) - p[1].at(n)));
          }
    }
  }
  return {worst <= 1e-10 && compared > 0, fmt(compared) + " coefficients, max error " + fmt(worst)};
}

Outcome prep_and_constants() {
  double prep = 0.0, constants = 0.0;
  bool holds = true;
  for (const SystemSpec& sys : model_systems()) {
    Built s(sys);
    const PrepResult p = check_prep(s.t, s.tp, s.e, 20);
    holds = holds && p.holds;
    prep = std::max(prep, p.max_violation);
    const LaurentModel m(s.t, s.tp, s.e, {20, 20});
    for (Index b = 0; b < s.e.dim(); ++b) {
      const LaurentCoefficients f = m.coefficients(s.e.vector(b));
      for (std::int64_t n = f.lowest(); n <= f.highest(); ++n) {
        Vector want = Vector::Zero(static_cast<Eigen::Index>(s.e.dim()));
        if (n == 0) want(static_cast<Eigen::Index>(b)) = 1.0;
        constants = std::max(constants, oracle::max_abs(f.at(n) - want));
      }
    }
  }
  return {holds && prep <= 1e-10 && constants <= 1e-12,
          "orthogonality " + fmt(prep) + ", off-constant " + fmt(constants)};
}

Outcome pairing_isometry() {
  std::mt19937_64 rng(37);
  double worst = 0.0;
  bool exact = true;
  for (const SystemSpec& sys : model_systems()) {
    Built s(sys);
    const Index n = s.spec.size();
    if (check_li(s.t, s.tp, s.e, n).status != Status::pass || check_li(s.tp, s.t, s.e, n).status != Status::pass)
      return {false, std::string("LI fails on ") + sys.meta().family};
    const Orders o{std::max<Index>(400, 4 * n), std::max<Index>(400, 4 * n)};
    const LaurentModel u(s.t, s.tp, s.e, o);
    const LaurentModel ud(s.tp, s.t, s.e, o);
    for (int k = 0; k < 100; ++k) {
      Vector x = oracle::random_vector(rng, static_cast<Eigen::Index>(n));
      Vector y = oracle::random_vector(rng, static_cast<Eigen::Index>(n));
      x /= x.norm();
      y /= y.norm();
      const PairingResult r = unitary_pairing(u.coefficients(x), ud.coefficients(y));
      exact = exact && r.exact;
      worst = std::max(worst, std::abs(r.value - y.dot(x)));
    }
  }
  return {exact && worst <= 1e-9, "max error " + fmt(worst)};
}

Outcome radii() {
  Built b(bilateral_half(128));
  const RadiiEstimate rb = estimate_radii(b.t, b.tp, b.e, 40);
  Built r(systems::rooted_ray(128));
  const RadiiEstimate rr = estimate_radii(r.t, r.tp, r.e, 40);
  const std::string text = "{\"schema\":\"limodel/1\",\"system\":{\"builtin\":\"cycle\",\"weights\":[2,3]}}";
  const Report rep = run_verify(parse_config(text));
  bool note = false;
  for (const auto& n : rep.notes) note = note || n.rfind("r_minus: general 2.449490 vs composition formula 6.000000", 0) == 0;
  const bool ok = rb.r_minus >= 0.5 && rb.r_minus <= 0.5 + 1e-6 && rb.r_plus >= 1.0 - 1e-6 && rb.r_plus <= 1.0 &&
                  rr.r_minus == 0.0 && std::abs(rr.r_plus - 1.0) <= 1e-6 && note;
  return {ok, "bilateral (" + fmt(rb.r_minus) + ", " + fmt(rb.r_plus) + "), rooted ray (" + fmt(rr.r_minus) + ", " +
                  fmt(rr.r_plus) + ")" + (note ? ", cycle note present" : ", cycle note missing")};
}

KernelBlocks blocks_for(const Built& s, const RadiiEstimate& r, Index order) {
  const OrbitStructure o = analyze_orbits(s.spec);
  KernelBlocks kb = kernel_blocks(s.t, s.tp, s.e, order);
  kb.cycle = o.has_cycle();
  if (!kb.cycle) kb.band_k = k_phi(o, s.e.support);
  if (r.annulus_nonempty) kb.domain = KernelDomain::from(r);
  return kb;
}

Outcome two_path() {
  Built b(bilateral_half(64));
  const KernelBlocks kb = blocks_for(b, estimate_radii(b.t, b.tp, b.e, 40), 20);
  double slack = -1.0;
  for (Complex z : ring(0.55, 0.95, 5, 0.3))
    for (Complex l : ring(0.55, 0.95, 5, 0.9)) {
      const KernelValue v = kernel_eval(kb, z, l);
      slack = std::max(slack, (v.value - kernel_resolvent(b.t, b.tp, b.e, z, l)).norm() - v.tail_bound);
    }
  Built r(systems::rooted_ray(128));
  const KernelBlocks kr = blocks_for(r, estimate_radii(r.t, r.tp, r.e, 40), 60);
  double szego = 0.0;
  for (Complex z : ring(0.0, 0.6, 6, 0.2))
    for (Complex l : ring(0.1, 0.65, 6, 1.3))
      szego = std::max(szego, std::abs(kernel_eval(kr, z, l).value(0, 0) - oracle::szego(z, l)));
  return {slack < 0.0 && szego <= 1e-9, "worst excess over tail " + fmt(slack) + ", Szego error " + fmt(szego)};
}

Outcome band() {
  bool ok = true;
  std::string detail;
  for (const SystemSpec& sys : {systems::branching_tree(2, {1.0, Complex(0.6, 0.8), 1.5}, 40),
                                systems::ray_line(48, 1.0, 1.0, {2.0}), systems::ray_line(48, 0.5, 1.0, {2.0, 3.0})}) {
    Built s(sys);
    const KernelBlocks kb = blocks_for(s, estimate_radii(s.t, s.tp, s.e, 40), 20);
    const std::int64_t k = *kb.band_k;
    const auto at_k = band_check(kb, k, 1e-12);
    const auto below = band_check(kb, k - 1, 1e-12);
    ok = ok && at_k.empty() && !below.empty();
    detail += std::string(detail.empty() ? "" : ", ") + sys.meta().family + " k=" + std::to_string(k) + " violations " +
              std::to_string(at_k.size()) + "/" + std::to_string(below.size());
  }
  return {ok, detail};
}

Outcome reproducing_and_gram() {
  std::mt19937_64 rng(41);
  bool ok = true;
  double gram = std::numeric_limits<double>::infinity();
  for (const SystemSpec& sys : model_systems()) {
    Built s(sys);
    const RadiiEstimate r = estimate_radii(s.t, s.tp, s.e, 40);
    KernelBlocks kb = blocks_for(s, r, 20);
    if (!kb.domain) return {false, std::string("no domain on ") + sys.meta().family};
    const double lo = kb.domain->disc ? 0.0 : r.r_minus + 0.06;
    gram = std::min(gram, gram_psd_check(kb, ring(lo, r.r_plus - 0.06, 6, 0.7)));
    const Index n = s.spec.size();
    const Orders o{4 * n, 4 * n};
    const LaurentModel u(s.t, s.tp, s.e, o);
    const LaurentModel ud(s.tp, s.t, s.e, o);
    kb.max_order = 4 * n;
    for (Complex l : ring(lo, r.r_plus - 0.06, 10, 0.4)) {
      const ReproducingResult rr = reproducing_check(u, ud, kb, l, oracle::random_vector(rng, static_cast<Eigen::Index>(n)));
      ok = ok && rr.within_bound && rr.exact;
    }
  }
  return {ok && gram >= -1e-9, std::string(ok ? "residuals within bounds" : "residual above bound") + ", min eigenvalue " + fmt(gram)};
}

Outcome shimorin() {
  bool ok = true;
  double worst = 0.0;
  for (const SystemSpec& sys : {systems::rooted_ray(32), systems::branching_tree(1, {1.0, 2.0}, 10),
                                systems::branching_tree(2, {1.0, Complex(0.6, 0.8), 1.5}, 12)}) {
    Built s(sys);
    const ShimorinResult r = shimorin_coincidence(s.t, s.tp, s.spec, s.spec.size());
    ok = ok && r.analytic && r.status == Status::pass;
    worst = std::max(worst, r.max_negative);
  }
  return {ok && worst <= 1e-12, "max negative coefficient " + fmt(worst)};
}

std::string run_to_string(const std::string& args, int& rc) {
  const auto out = std::filesystem::temp_directory_path() / "limodel_acceptance.out";
  const int raw = std::system((std::string(LIMODEL_CLI) + " " + args + " > " + out.string() + " 2>/dev/null").c_str());
  rc = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(out, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  std::filesystem::remove(out);
  return s.str();
}

Outcome determinism() {
  Index files = 0;
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(LIMODEL_CONFIG_DIR))
    if (entry.path().extension() == ".json") paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    int rc1 = 0, rc2 = 0;
    const std::string a = run_to_string("verify " + p.string(), rc1);
    const std::string b = run_to_string("verify " + p.string(), rc2);
    if (a.empty() || a != b || rc1 != rc2) return {false, p.filename().string() + " differs between runs"};
    ++files;
  }
  return {files > 0, fmt(files) + " configs byte-identical"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"cauchy_dual_oracle", cauchy_dual_oracle}, {"intertwining", intertwining},
      {"prep_and_constants", prep_and_constants}, {"pairing_isometry", pairing_isometry},
      {"radii", radii},                           {"kernel_two_path", two_path},
      {"band_structure", band},                   {"reproducing_and_positivity", reproducing_and_gram},
      {"shimorin_coincidence", shimorin},         {"determinism", determinism}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.first) ++failures;
    std::cout << (o.first ? "PASS" : "FAIL") << ' ' << (i + 1) << ' ' << criteria[i].first << ": " << o.second << '\n';
  }
  return failures == 0 ? 0 : 1;
}
