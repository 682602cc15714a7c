#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "corrbandit/error.hpp"

namespace corrbandit {

/// Unordered pair of arms stored with first < second. Arms are 0-based.
struct Pair {
  std::size_t first = 0;
  std::size_t second = 0;

  friend bool operator==(const Pair&, const Pair&) = default;
};

constexpr std::size_t pair_count(std::size_t num_arms) { return num_arms * (num_arms - 1) / 2; }

/// Builds a Pair from two distinct arm indices in either order.
inline Pair make_pair(std::size_t a, std::size_t b) {
  if (a == b) throw Error(ErrorCode::InvalidPair, "pair needs two distinct arms");
  return a < b ? Pair{a, b} : Pair{b, a};
}

/// Lexicographic numbering of the K(K-1)/2 unordered pairs:
/// (0,1), (0,2), ..., (0,K-1), (1,2), ...
class PairIndex {
 public:
  explicit PairIndex(std::size_t num_arms) : num_arms_(num_arms) {
    pairs_.reserve(pair_count(num_arms));
    for (std::size_t i = 0; i < num_arms; ++i)
      for (std::size_t j = i + 1; j < num_arms; ++j) pairs_.push_back({i, j});
  }

  std::size_t num_arms() const { return num_arms_; }
  std::size_t size() const { return pairs_.size(); }
  const std::vector<Pair>& pairs() const { return pairs_; }
  const Pair& operator[](std::size_t idx) const { return pairs_[idx]; }

  std::size_t index_of(Pair p) const {
    check(p);
    const std::size_t i = p.first;
    return i * num_arms_ - i * (i + 1) / 2 + (p.second - i - 1);
  }

  void check(Pair p) const {
    if (p.first >= p.second || p.second >= num_arms_)
      throw Error(ErrorCode::InvalidPair, "(" + std::to_string(p.first) + "," +
                                              std::to_string(p.second) + ") with K=" +
                                              std::to_string(num_arms_));
  }

 private:
  std::size_t num_arms_;
  std::vector<Pair> pairs_;
};

/// 1-based "(i,j)" label used in reports.
inline std::string pair_label(Pair p) {
  return "(" + std::to_string(p.first + 1) + "," + std::to_string(p.second + 1) + ")";
}

}  // namespace corrbandit
