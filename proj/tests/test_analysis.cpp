#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "ifskit/analysis.hpp"

using namespace ifskit;

namespace {

ContractionPair affine_pair(double lambda, double slope1, double anchor1) {
  return ContractionPair{
      [lambda](double t) { return lambda * t; },
      [slope1, anchor1](double t) { return anchor1 + slope1 * t; },
      [lambda](double) { return lambda; },
      [slope1](double) { return slope1; }};
}

std::vector<Word> all_words(int max_len) {
  std::vector<Word> out{Word()};
  for (std::size_t k = 0; k < out.size(); ++k)
    if (static_cast<int>(out[k].size()) < max_len) {
      out.push_back(out[k].append(0));
      out.push_back(out[k].append(1));
    }
  return out;
}

}  // namespace

TEST_CASE("fixed points of cylinder maps") {
  auto pair = affine_pair(0.4, 0.4, 0.6);
  auto p0 = fixed_point(pair, Word("0"), 1e-13);
  CHECK(p0.point == doctest::Approx(0.0).epsilon(1e-11));
  CHECK(p0.derivative_product == doctest::Approx(0.4).epsilon(1e-12));

  auto p01 = fixed_point(pair, Word("01"), 1e-13);
  CHECK(p01.derivative_product == doctest::Approx(0.16).epsilon(1e-12));

  auto thirds = affine_pair(1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0);
  auto p10 = fixed_point(thirds, Word("10"), 1e-13);
  CHECK(p10.point == doctest::Approx(0.75).epsilon(1e-11));
  CHECK(p10.derivative_product == doctest::Approx(1.0 / 9.0).epsilon(1e-11));
}

TEST_CASE("fixed point rejects non-contractions") {
  ContractionPair expanding{
      [](double t) { return std::min(1.5, 2.0 * t + 0.1); },
      [](double t) { return t; },
      [](double) { return 2.0; },
      [](double) { return 1.0; }};
  CHECK_THROWS_AS(fixed_point(expanding, Word("0"), 1e-10), domain_error);
}

TEST_CASE("livsic: self-similar passes with zero deviation") {
  auto rep = livsic_check(affine_pair(0.4, 0.4, 0.6), 6, 1e-6);
  CHECK(rep.pass);
  CHECK(rep.lambda_hat == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(rep.worst_dev <= 1e-10);
}

TEST_CASE("livsic: constructed pseudo-affine branches pass") {
  auto p = as_proportions(gen_case_a(0.3, 2.0), 'a');
  auto br = build_branches(p, 12, 1e-9);
  auto rep = livsic_check(br, 6, 1e-6);
  CHECK(rep.pass);
  CHECK(rep.lambda_hat == doctest::Approx(0.3).epsilon(1e-10));

  auto pb = as_proportions(gen_case_b(0.3, 2.0, 0.2), 'b');
  auto brb = build_branches(pb, 12, 1e-9);
  auto repb = livsic_check(brb, 6, 1e-6);
  CHECK(repb.pass);
}

TEST_CASE("livsic: perturbed branch fails at the length-one word") {
  // f1 carries slope lambda + 0.01 at its fixed point 1
  auto rep = livsic_check(affine_pair(0.3, 0.31, 0.69), 6, 1e-6);
  CHECK(!rep.pass);
  CHECK(rep.worst_word.str() == "1");
  CHECK(rep.worst_dev == doctest::Approx(0.01).epsilon(1e-9));
  auto j = rep.to_json();
  CHECK(j["pass"] == false);
  CHECK(j["worst_word"] == "1");
}

TEST_CASE("chain rule consistency for concatenated words") {
  auto p = as_proportions(gen_case_b(0.3, 2.0, 0.2), 'b');
  auto br = build_branches(p, 12, 1e-9);
  auto pair = adapt(br, 1e-11);
  for (const Word& u : all_words(3)) {
    for (const Word& v : all_words(3)) {
      if (u.empty() || v.empty()) continue;
      Word uv = u.concat(v);
      auto fp = fixed_point(pair, uv, 1e-12);
      // manual partial products along the same orbit
      double x = fp.point;
      double prod_v = 1.0;
      for (std::size_t i = v.size(); i-- > 0;) {
        prod_v *= pair.slope(v.letter(i), x);
        x = pair.apply(v.letter(i), x);
      }
      double prod_u = 1.0;
      for (std::size_t i = u.size(); i-- > 0;) {
        prod_u *= pair.slope(u.letter(i), x);
        x = pair.apply(u.letter(i), x);
      }
      CHECK(fp.derivative_product ==
            doctest::Approx(prod_u * prod_v).epsilon(1e-10));
    }
  }
}

TEST_CASE("livsic passing tracks decaying proportion deviations") {
  // for built pairs the periodic-data check and the pseudo-affinity decay
  // are two views of the same structure: both hold for every family, and
  // both fail together for the perturbed external pair
  std::vector<ProportionPair> pairs{
      ProportionPair::constant(0.3),
      as_proportions(gen_case_a(0.3, 2.0), 'a'),
      as_proportions(gen_case_b(0.3, 2.0, 0.2), 'b')};
  for (const auto& p : pairs) {
    auto br = build_branches(p, 10, 1e-9);
    auto lrep = livsic_check(br, 5, 1e-6);
    CHECK(lrep.pass);
    auto prep = pseudo_affinity_report(br, br.table(), 9);
    // deviations past the first few levels sit below the level-3 value
    double head = std::max({prep.per_level[0], prep.per_level[1],
                            prep.per_level[2], 1e-12});
    for (std::size_t n = 6; n <= 9; ++n) CHECK(prep.per_level[n] <= head);
    CHECK(prep.per_level[9] <= 1e-2);
    CHECK(prep.endpoint_dev == 0.0);
  }
}

TEST_CASE("pseudo-affinity report: constant input has zero deviation") {
  auto br = build_branches(ProportionPair::constant(0.3), 8, 1e-10);
  auto rep = pseudo_affinity_report(br, br.table(), 6);
  CHECK(rep.max_dev <= 1e-12);
  CHECK(rep.endpoint_dev == 0.0);
}

TEST_CASE("pseudo-affinity report: case (a) deviations equal the eps values") {
  auto seq = gen_case_a(0.3, 2.0);
  auto br = build_branches(as_proportions(seq, 'a'), 10, 1e-9);
  auto rep = pseudo_affinity_report(br, br.table(), 9);
  for (std::size_t n = 1; n <= 9; ++n)
    CHECK(rep.per_level[n] == doctest::Approx(seq.value(n)).epsilon(1e-10));
}

TEST_CASE("pseudo-affinity report: case (b) support pattern") {
  auto seq = gen_case_b(0.3, 2.0, 0.2);
  auto br = build_branches(as_proportions(seq, 'b'), 11, 1e-9);
  auto rep = pseudo_affinity_report(br, br.table(), 10);
  for (std::size_t k = 0; k <= 5; ++k)
    CHECK(rep.per_level[2 * k] == doctest::Approx(seq.value(k)).epsilon(1e-10));
  for (std::size_t k = 0; k <= 4; ++k)
    CHECK(rep.per_level[2 * k + 1] <= 1e-12);
}

TEST_CASE("chi trace: identical pairs give the constant trace 1") {
  auto p = as_proportions(gen_case_a(0.3, 2.0), 'a');
  auto tr = chi_trace(p, p, Coding::parse("(01)^inf"), 30);
  for (const auto& [n, chi] : tr.values) CHECK(chi == 1.0);
}

TEST_CASE("chi trace: case (a) against self-similar is coding independent") {
  auto seq = gen_case_a(0.3, 2.0);
  auto pa = as_proportions(seq, 'a');
  auto zero = ProportionPair::constant(0.3);
  auto t1 = chi_trace(pa, zero, Coding::parse("(01)^inf"), 40);
  auto t2 = chi_trace(pa, zero, Coding::parse("1101(100)^inf"), 40);
  for (int n = 1; n <= 40; ++n) {
    double expect = 1.0;
    for (int i = 0; i < n; ++i)
      expect *= 1.0 + seq.value(static_cast<std::size_t>(i)) / 0.3;
    CHECK(t1.values[n - 1].second == doctest::Approx(expect).epsilon(1e-11));
    CHECK(t2.values[n - 1].second ==
          doctest::Approx(t1.values[n - 1].second).epsilon(1e-13));
  }
}

TEST_CASE("chi trace: case (b) oscillates between the chain product and 1") {
  auto seq = gen_case_b(0.3, 2.0, 0.2);
  auto pb = as_proportions(seq, 'b');
  auto zero = ProportionPair::constant(0.3);
  auto tr = chi_trace(pb, zero, Coding::parse("(01)^inf"), 41);
  for (int n = 1; n <= 41; ++n) {
    double got = tr.values[n - 1].second;
    if (n % 2 == 1) {
      CHECK(got == doctest::Approx(1.0).epsilon(1e-13));
    } else {
      int k = n / 2;
      double expect = 1.0;
      for (int j = 0; j < k; ++j)
        expect *= 1.0 + seq.value(static_cast<std::size_t>(j)) / 0.3;
      CHECK(got == doctest::Approx(expect).epsilon(1e-12));
      CHECK(got >= 1.0 + 0.2 / 0.3 - 1e-12);
    }
  }
}

TEST_CASE("chi multiplicativity factor by factor") {
  auto pb = as_proportions(gen_case_b(0.3, 2.0, 0.2), 'b');
  auto zero = ProportionPair::constant(0.3);
  Coding a = Coding::parse("01(011)^inf");
  auto full = chi_trace(pb, zero, a, 20);
  auto shifted = chi_trace(pb, zero, a.shifted(1), 19);
  for (int n = 2; n <= 20; ++n) {
    Word w(std::string(1, '0' + static_cast<char>(a.letter(0))));
    // first factor of the length-n prefix
    std::string prefix;
    for (int k = 0; k < n; ++k) prefix += static_cast<char>('0' + a.letter(k));
    Word full_word(prefix);
    double num = pb.factor_suffix(full_word.letter(0), full_word, 1);
    double den = zero.factor_suffix(full_word.letter(0), full_word, 1);
    double expect = (num / den) * shifted.values[n - 2].second;
    CHECK(full.values[n - 1].second == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("conjugacy verdict: converging, oscillating, inconclusive") {
  auto pa = as_proportions(gen_case_a(0.3, 2.0), 'a');
  auto pb = as_proportions(gen_case_b(0.3, 2.0, 0.2), 'b');
  auto zero = ProportionPair::constant(0.3);

  std::vector<ChiTrace> conv{
      chi_trace(pa, zero, Coding::parse("(01)^inf"), 40),
      chi_trace(pa, zero, Coding::parse("(0)^inf"), 40),
      chi_trace(pa, zero, Coding::parse("111(10)^inf"), 40)};
  auto v1 = conjugacy_verdict(conv, 1e-6);
  CHECK(v1.verdict == ChiVerdict::converges);
  CHECK(v1.spread <= 1e-6);

  std::vector<ChiTrace> osc{chi_trace(pb, zero, Coding::parse("(01)^inf"), 40)};
  auto v2 = conjugacy_verdict(osc, 1e-6);
  CHECK(v2.verdict == ChiVerdict::oscillates);
  CHECK(v2.max_gap >= 0.2 / 0.3 - 1e-9);

  std::vector<ChiTrace> same{chi_trace(pa, pa, Coding::parse("(10)^inf"), 24)};
  auto v3 = conjugacy_verdict(same, 1e-6);
  CHECK(v3.verdict == ChiVerdict::converges);
  CHECK(v3.spread == 0.0);

  // slow monotone growth is wide but not alternating: inconclusive
  ChiTrace slow{Coding::parse("(0)^inf"), {}};
  for (int n = 1; n <= 40; ++n)
    slow.values.emplace_back(n, std::log(1.0 + n));
  auto v4 = conjugacy_verdict({slow}, 1e-3);
  CHECK(v4.verdict == ChiVerdict::inconclusive);
}

TEST_CASE("linearize: affine map gives the identity") {
  std::vector<double> grid;
  for (int k = 0; k <= 512; ++k) grid.push_back(k / 512.0);
  auto lin = linearize_branch([](double t) { return 0.3 * t; }, 0.3, grid,
                              1e-12);
  for (std::size_t k = 0; k < lin.grid.size(); ++k)
    CHECK(lin.h[k] == doctest::Approx(lin.grid[k]).epsilon(1e-12));
}

TEST_CASE("linearize: quadratic perturbation") {
  auto g = [](double t) { return 0.3 * t + 0.05 * t * t; };
  std::vector<double> grid{0.0, 1e-4, 1e-3};
  for (int k = 1; k <= 256; ++k) grid.push_back(k / 256.0);
  auto lin = linearize_branch(g, 0.3, grid, 1e-12);
  CHECK(lin.h[0] == 0.0);
  for (std::size_t k = 0; k + 1 < lin.h.size(); ++k)
    CHECK(lin.h[k] < lin.h[k + 1]);

  // functional equation E_lambda o h = h o g at grid points, via interp
  auto interp_h = [&](double x) {
    auto it = std::upper_bound(lin.grid.begin(), lin.grid.end(), x);
    std::size_t j = static_cast<std::size_t>(it - lin.grid.begin());
    if (j == 0) return lin.h.front();
    if (j >= lin.grid.size()) return lin.h.back();
    double t = (x - lin.grid[j - 1]) / (lin.grid[j] - lin.grid[j - 1]);
    return lin.h[j - 1] + t * (lin.h[j] - lin.h[j - 1]);
  };
  // oracle: the same limit carried twice as deep
  auto lin2 = linearize_branch(g, 0.3, lin.grid, 1e-14, 800);
  for (std::size_t k = 0; k < lin.grid.size(); ++k)
    CHECK(lin.h[k] == doctest::Approx(lin2.h[k]).epsilon(1e-10));
  for (std::size_t k = 0; k < lin.grid.size(); k += 16) {
    double lhs = 0.3 * lin.h[k];
    double rhs = interp_h(g(lin.grid[k]));
    CHECK(lhs == doctest::Approx(rhs).epsilon(2e-5));
  }

  // Koenigs normalization h'(0) = 1 by one-sided differences
  CHECK(lin.h[1] / lin.grid[1] == doctest::Approx(1.0).epsilon(1e-4));

  // renormalized second branch comes back when requested
  auto g1 = [](double t) { return 0.7 + 0.3 * t; };
  auto lin3 = linearize_branch(g, 0.3, lin.grid, 1e-12, 400, g1);
  CHECK(lin3.conjugated_g1.size() == lin3.grid.size());
  CHECK(lin3.conjugated_g1.front() == doctest::Approx(interp_h(0.7)).epsilon(1e-9));
}

TEST_CASE("linearize: domain and convergence errors") {
  std::vector<double> grid{0.0, 0.5, 1.0};
  CHECK_THROWS_AS(
      linearize_branch([](double t) { return 0.1 + 0.3 * t; }, 0.3, grid, 1e-10),
      domain_error);
  // wrong multiplier never settles
  CHECK_THROWS_AS(
      linearize_branch([](double t) { return 0.3 * t; }, 0.4, grid, 1e-12, 50),
      capacity_error);
}
