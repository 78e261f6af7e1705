#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "ifskit/words.hpp"

using namespace ifskit;

namespace {

// Independent oracle: in the middle-thirds realization the point of a coding
// is sum 2 a_k 3^-k and the gap of a word w occupies the removed middle
// interval [gap_left(w), gap_left(w) + 3^-(|w|+1)].
double ternary_point(const Coding& a, int digits = 60) {
  double x = 0.0;
  for (int k = digits; k >= 1; --k)
    x = (x + 2.0 * a.letter(static_cast<std::size_t>(k - 1))) / 3.0;
  return x;
}

double ternary_gap_left(const Word& w) {
  double x = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k)
    x += 2.0 * w.letter(k) * std::pow(3.0, -static_cast<double>(k + 1));
  return x + std::pow(3.0, -static_cast<double>(w.size() + 1));
}

std::vector<Word> all_words(int max_len) {
  std::vector<Word> out{Word()};
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (static_cast<int>(out[k].size()) < max_len) {
      out.push_back(out[k].append(0));
      out.push_back(out[k].append(1));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("coding letters and parsing") {
  Coding c = Coding::parse("01(10)^inf");
  CHECK(c.letter(0) == 0);
  CHECK(c.letter(1) == 1);
  CHECK(c.letter(2) == 1);
  CHECK(c.letter(3) == 0);
  CHECK(c.letter(4) == 1);
  CHECK(c.str() == "01(10)^inf");
  CHECK(Coding::parse("(01)^inf").letter(0) == 0);
  CHECK_THROWS_AS(Coding::parse("01"), domain_error);
  CHECK(Word::parse("e").empty());
  CHECK(Word::parse("0101").str() == "0101");
  CHECK_THROWS_AS(Word("012"), domain_error);
}

TEST_CASE("compare codings: lexicographic") {
  CHECK(compare(zeros_coding(), ones_coding()) == Ordering::less);
  CHECK(compare(ones_coding(), zeros_coding()) == Ordering::greater);
  // 10^inf written two ways is the same sequence
  Coding a = Coding(Word("1"), Word("0"));
  Coding b = Coding(Word("10"), Word("00"));
  CHECK(compare(a, b) == Ordering::equal);
}

TEST_CASE("compare word vs coding") {
  // e sits immediately left of its right endpoint coding 10^inf
  CHECK(compare(Word(), Coding(Word("1"), Word("0"))) == Ordering::less);
  CHECK(compare(Word(), Coding(Word("0"), Word("1"))) == Ordering::greater);
  CHECK(compare(Coding(Word("0"), Word("1")), Word()) == Ordering::less);
}

TEST_CASE("compare words: 0 before e before 1") {
  CHECK(compare(Word("0"), Word("1")) == Ordering::less);
  CHECK(compare(Word("0"), Word()) == Ordering::less);
  CHECK(compare(Word(), Word("1")) == Ordering::less);
  CHECK(compare(Word("1"), Word("1")) == Ordering::equal);
}

TEST_CASE("order agrees with the middle-thirds realization, words <= 3") {
  auto words = all_words(3);
  for (const Word& u : words) {
    for (const Word& w : words) {
      double lu = ternary_gap_left(u), lw = ternary_gap_left(w);
      Ordering got = compare(u, w);
      if (u == w)
        CHECK(got == Ordering::equal);
      else
        CHECK(got == (lu < lw ? Ordering::less : Ordering::greater));
    }
  }
}

TEST_CASE("word vs coding order agrees with middle-thirds positions") {
  auto words = all_words(3);
  std::vector<Coding> codings{zeros_coding(),
                              ones_coding(),
                              Coding(Word("1"), Word("0")),
                              Coding(Word(), Word("01")),
                              Coding(Word(), Word("10")),
                              Coding(Word("01"), Word("1")),
                              Coding(Word("110"), Word("10"))};
  for (const Word& w : words) {
    double gl = ternary_gap_left(w);
    double gr = gl + std::pow(3.0, -static_cast<double>(w.size() + 1));
    for (const Coding& a : codings) {
      double x = ternary_point(a);
      if (x <= gl + 1e-15)
        CHECK(compare(a, w) == Ordering::less);
      else if (x >= gr - 1e-15)
        CHECK(compare(w, a) == Ordering::less);
    }
  }
}

TEST_CASE("order agrees with realized gap positions, all pairs to length 8") {
  auto words = all_words(8);
  std::vector<double> pos(words.size());
  for (std::size_t k = 0; k < words.size(); ++k)
    pos[k] = ternary_gap_left(words[k]);
  for (std::size_t i = 0; i < words.size(); ++i)
    for (std::size_t j = 0; j < words.size(); ++j) {
      if (i == j) continue;
      bool left = pos[i] < pos[j];
      CHECK((compare(words[i], words[j]) == Ordering::less) == left);
    }
}

TEST_CASE("enumerate_words") {
  auto w0 = enumerate_words(0);
  REQUIRE(w0.size() == 1);
  CHECK(w0[0].empty());

  auto w1 = enumerate_words(1);
  REQUIRE(w1.size() == 3);
  CHECK(w1[0].str() == "0");
  CHECK(w1[1].str() == "e");
  CHECK(w1[2].str() == "1");

  CHECK(enumerate_words(2).size() == 7);
  CHECK_THROWS_AS(enumerate_words(-1), domain_error);
  CHECK_THROWS_AS(enumerate_words(60), capacity_error);
}

TEST_CASE("enumerate order matches compare") {
  auto words = enumerate_words(6);
  for (std::size_t k = 0; k + 1 < words.size(); ++k)
    CHECK(compare(words[k], words[k + 1]) == Ordering::less);
}

TEST_CASE("boundary codings") {
  auto [ae, be] = boundary_codings(Word());
  CHECK(compare(ae, Coding(Word("0"), Word("1"))) == Ordering::equal);
  CHECK(compare(be, Coding(Word("1"), Word("0"))) == Ordering::equal);

  auto [a1, b1] = boundary_codings(Word("1"));
  CHECK(compare(a1, Coding(Word("10"), Word("1"))) == Ordering::equal);
  CHECK(compare(b1, Coding(Word("11"), Word("0"))) == Ordering::equal);

  auto [a00, b00] = boundary_codings(Word("00"));
  CHECK(compare(a00, Coding(Word("000"), Word("1"))) == Ordering::equal);
  CHECK(compare(b00, Coding(Word("001"), Word("0"))) == Ordering::equal);
}

TEST_CASE("boundary codings bracket their word") {
  for (const Word& w : all_words(8)) {
    auto [a, b] = boundary_codings(w);
    CHECK(compare(a, w) == Ordering::less);
    CHECK(compare(w, b) == Ordering::less);
  }
}

TEST_CASE("compare is antisymmetric and transitive on words <= 5") {
  auto words = all_words(5);
  for (const Word& u : words)
    for (const Word& w : words) {
      Ordering uw = compare(u, w), wu = compare(w, u);
      if (u == w) {
        CHECK(uw == Ordering::equal);
      } else {
        CHECK(uw != Ordering::equal);
        CHECK(((uw == Ordering::less) == (wu == Ordering::greater)));
      }
    }
  // transitivity via the enumerated order: compare must agree with the
  // position of each word in the sorted list, which forces transitivity
  auto sorted = enumerate_words(5);
  for (std::size_t i = 0; i < sorted.size(); ++i)
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      Ordering o = compare(sorted[i], sorted[j]);
      if (i < j) CHECK(o == Ordering::less);
      if (i == j) CHECK(o == Ordering::equal);
      if (i > j) CHECK(o == Ordering::greater);
    }
}

TEST_CASE("shifted codings") {
  Coding c = Coding::parse("01(10)^inf");
  CHECK(compare(c.shifted(2), Coding::parse("(10)^inf")) == Ordering::equal);
  CHECK(compare(c.shifted(3), Coding::parse("(01)^inf")) == Ordering::equal);
  CHECK(compare(c.shifted(4), Coding::parse("(10)^inf")) == Ordering::equal);
}
