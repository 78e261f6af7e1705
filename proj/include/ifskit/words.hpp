#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ifskit/errors.hpp"

namespace ifskit {

enum class Ordering { less, equal, greater };

// Finite binary word. The empty word is written "e" in all text formats.
class Word {
public:
  Word() = default;

  explicit Word(std::string_view bits) : bits_(bits) {
    for (char c : bits_)
      if (c != '0' && c != '1')
        throw domain_error("Word: letters must be 0 or 1, got '" +
                           std::string(1, c) + "'");
  }

  static Word parse(std::string_view text) {
    if (text == "e" || text.empty()) return Word();
    return Word(text);
  }

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }

  // 0-based letter access; returns 0 or 1.
  int letter(std::size_t i) const { return bits_[i] - '0'; }

  Word concat(const Word& rhs) const { return Word(bits_ + rhs.bits_); }
  Word append(int letter) const {
    return Word(bits_ + static_cast<char>('0' + letter));
  }
  Word prepend(int letter) const {
    return Word(static_cast<char>('0' + letter) + bits_);
  }
  Word prefix(std::size_t n) const { return Word(bits_.substr(0, n)); }
  // Letters i..end, 0-based; suffix_from(size()) is the empty word.
  Word suffix_from(std::size_t i) const { return Word(bits_.substr(i)); }
  Word reversed() const { return Word(std::string(bits_.rbegin(), bits_.rend())); }

  const std::string& bits() const { return bits_; }
  std::string str() const { return bits_.empty() ? "e" : bits_; }

  bool operator==(const Word& rhs) const { return bits_ == rhs.bits_; }
  bool operator!=(const Word& rhs) const { return bits_ != rhs.bits_; }

private:
  std::string bits_;
};

// Infinite binary sequence of the eventually periodic form prefix (block)^inf.
// Every coding manipulated here (w0^inf, w^inf, (01)^inf, ...) is exact in
// this representation.
class Coding {
public:
  Coding(Word prefix, Word block)
      : prefix_(std::move(prefix)), block_(std::move(block)) {
    if (block_.empty())
      throw domain_error("Coding: repeating block must be nonempty");
  }

  // Grammar: prefix(block)^inf, e.g. "01(10)^inf" or "(01)^inf".
  static Coding parse(std::string_view text) {
    auto open = text.find('(');
    auto close = text.find(')');
    if (open == std::string_view::npos || close == std::string_view::npos ||
        close < open || text.substr(close + 1) != "^inf")
      throw domain_error("Coding: expected prefix(block)^inf, got '" +
                         std::string(text) + "'");
    Word prefix = Word::parse(text.substr(0, open) == "" ? "e"
                                                         : text.substr(0, open));
    Word block(text.substr(open + 1, close - open - 1));
    return Coding(std::move(prefix), std::move(block));
  }

  // 0-based letter access.
  int letter(std::size_t k) const {
    if (k < prefix_.size()) return prefix_.letter(k);
    return block_.letter((k - prefix_.size()) % block_.size());
  }

  // Drop the first n letters.
  Coding shifted(std::size_t n = 1) const {
    if (n <= prefix_.size()) return Coding(prefix_.suffix_from(n), block_);
    std::size_t r = (n - prefix_.size()) % block_.size();
    std::string rot = block_.bits().substr(r) + block_.bits().substr(0, r);
    return Coding(Word(), Word(rot));
  }

  Coding prepend(int letter) const {
    return Coding(prefix_.prepend(letter), block_);
  }
  Coding prepend_word(const Word& w) const {
    return Coding(w.concat(prefix_), block_);
  }

  const Word& prefix() const { return prefix_; }
  const Word& block() const { return block_; }

  std::string str() const {
    return (prefix_.empty() ? std::string() : prefix_.bits()) + "(" +
           block_.bits() + ")^inf";
  }

  // Two eventually periodic sequences that agree this far agree everywhere.
  static std::size_t agreement_bound(const Coding& a, const Coding& b) {
    std::size_t p = std::max(a.prefix().size(), b.prefix().size());
    std::size_t l = std::lcm(a.block().size(), b.block().size());
    return p + l;
  }

private:
  Word prefix_, block_;
};

inline Coding zeros_coding(const Word& prefix = Word()) {
  return Coding(prefix, Word("0"));
}
inline Coding ones_coding(const Word& prefix = Word()) {
  return Coding(prefix, Word("1"));
}
inline Coding periodic_coding(const Word& block) { return Coding(Word(), block); }

// Codings of the two endpoints of gap I_w: (w01^inf, w10^inf).
inline std::pair<Coding, Coding> boundary_codings(const Word& w) {
  return {Coding(w.append(0), Word("1")), Coding(w.append(1), Word("0"))};
}

// Lexicographic order on codings; exact for the eventually periodic form.
inline Ordering compare(const Coding& a, const Coding& b) {
  std::size_t bound = Coding::agreement_bound(a, b);
  for (std::size_t k = 0; k < bound; ++k) {
    int la = a.letter(k), lb = b.letter(k);
    if (la != lb) return la < lb ? Ordering::less : Ordering::greater;
  }
  return Ordering::equal;
}

namespace detail {

// Letter k of w10^inf (which = 1) or of w01^inf (which = 0), without
// materializing the coding.
inline int boundary_letter(const Word& w, int pivot, std::size_t k) {
  if (k < w.size()) return w.letter(k);
  if (k == w.size()) return pivot;
  return 1 - pivot;
}

// Compares w10^inf (pivot 1) or w01^inf (pivot 0) against the coding a.
inline Ordering compare_boundary(const Word& w, int pivot, const Coding& a) {
  std::size_t bound =
      std::max(w.size() + 1, a.prefix().size()) + a.block().size() + 1;
  for (std::size_t k = 0; k < bound; ++k) {
    int lw = boundary_letter(w, pivot, k);
    int la = a.letter(k);
    if (lw != la) return lw < la ? Ordering::less : Ordering::greater;
  }
  return Ordering::equal;
}

}  // namespace detail

// Order between the gap I_w and the point x_a: the gap is identified with
// the open interval of codings (w01^inf, w10^inf), which has no coding
// strictly inside, so the comparison is never "equal".
inline Ordering compare(const Word& w, const Coding& a) {
  if (detail::compare_boundary(w, 1, a) != Ordering::greater)
    return Ordering::less;
  return Ordering::greater;
}

inline Ordering compare(const Coding& a, const Word& w) {
  Ordering o = compare(w, a);
  return o == Ordering::less ? Ordering::greater : Ordering::less;
}

// Total order on gaps: u comes before w exactly when gap I_u lies to the
// left of gap I_w, i.e. when u10^inf precedes w01^inf.
inline Ordering compare(const Word& u, const Word& w) {
  if (u == w) return Ordering::equal;
  std::size_t bound = std::max(u.size(), w.size()) + 2;
  for (std::size_t k = 0; k < bound; ++k) {
    int lu = detail::boundary_letter(u, 1, k);  // u10^inf
    int lw = detail::boundary_letter(w, 0, k);  // w01^inf
    if (lu != lw) return lu < lw ? Ordering::less : Ordering::greater;
  }
  return Ordering::less;  // u10^inf == w01^inf cannot happen for u != w
}

inline bool precedes(const Word& u, const Word& w) {
  return compare(u, w) == Ordering::less;
}
inline bool precedes(const Word& w, const Coding& a) {
  return compare(w, a) == Ordering::less;
}
inline bool precedes(const Coding& a, const Word& w) {
  return compare(a, w) == Ordering::less;
}
inline bool precedes(const Coding& a, const Coding& b) {
  return compare(a, b) == Ordering::less;
}

namespace detail {

inline void inorder_words(const Word& w, int remaining, std::vector<Word>& out) {
  // In the gap order, everything under w0 lies left of I_w, which lies left
  // of everything under w1.
  if (remaining > 0) inorder_words(w.append(0), remaining - 1, out);
  out.push_back(w);
  if (remaining > 0) inorder_words(w.append(1), remaining - 1, out);
}

}  // namespace detail

// All 2^(max_len+1) - 1 words of length <= max_len, sorted by the gap order.
inline std::vector<Word> enumerate_words(int max_len) {
  if (max_len < 0) throw domain_error("enumerate_words: max_len must be >= 0");
  if (max_len > 24)
    throw capacity_error("enumerate_words: refusing to allocate 2^" +
                         std::to_string(max_len + 1) + " words (max_len 24)");
  std::vector<Word> out;
  out.reserve((std::size_t{2} << max_len) - 1);
  detail::inorder_words(Word(), max_len, out);
  return out;
}

}  // namespace ifskit
