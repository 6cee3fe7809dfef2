#pragma once

#include "attnorm/autodiff.hpp"

#include "support.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

namespace testing {

using attnorm::ad::Matrix;
using attnorm::ad::Tape;
using attnorm::ad::Var;
namespace ad = attnorm::ad;

inline Matrix random_matrix(Random& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

// Entries bounded away from zero, so relu has no kink within eps.
inline Matrix away_from_zero(Random& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m = random_matrix(rng, r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (std::abs(m.data()[i]) < 1e-3) m.data()[i] = m.data()[i] < 0 ? -0.5 : 0.5;
  }
  return m;
}

// Columns whose two largest entries differ clearly, so max_rows has no tie within eps.
inline Matrix distinct_maxima(Random& rng, Eigen::Index r, Eigen::Index c) {
  for (;;) {
    Matrix m = random_matrix(rng, r, c);
    bool ok = true;
    for (Eigen::Index j = 0; j < c && ok; ++j) {
      Eigen::VectorXd col = m.col(j);
      std::sort(col.data(), col.data() + col.size());
      if (r > 1 && col[r - 1] - col[r - 2] < 1e-3) ok = false;
    }
    if (ok) return m;
  }
}

// Reduces any tensor to a scalar through a fixed random weighting.
inline Var weighted_sum(Tape& t, const Var& x, std::uint64_t seed) {
  Random rng(seed * 7919 + 1);
  return ad::sum(ad::mul(x, t.constant(random_matrix(rng, x.rows(), x.cols()))));
}

struct PrimitiveCase {
  std::string name;
  std::function<std::vector<Matrix>(Random&)> leaves;
  ad::GraphBuilder build;
};

// Near the round-off/truncation optimum for central differences; at 1e-6 round-off
// dominates on gradient entries close to zero.
constexpr double kPrimitiveEps = 1e-5;

// One small graph per primitive, reduced to a scalar, with inputs kept off kinks.
inline std::vector<PrimitiveCase> primitive_cases() {
  return {
      {"matmul", [](Random& r) { return std::vector<Matrix>{random_matrix(r, 4, 3), random_matrix(r, 3, 5)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::matmul(l[0], l[1]), 1); }},
      {"add", [](Random& r) { return std::vector<Matrix>{random_matrix(r, 4, 3), random_matrix(r, 4, 3)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::add(l[0], l[1]), 2); }},
      {"add broadcast", [](Random& r) { return std::vector<Matrix>{random_matrix(r, 5, 3), random_matrix(r, 1, 3)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::add(l[0], l[1]), 3); }},
      {"mul", [](Random& r) { return std::vector<Matrix>{random_matrix(r, 3, 3), random_matrix(r, 3, 3)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::mul(l[0], l[1]), 4); }},
      {"scalar_div",
       [](Random& r) { return std::vector<Matrix>{random_matrix(r, 4, 6), random_matrix(r, 1, 1, 0.5, 2.0)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::scalar_div(l[0], l[1]), 5); }},
      {"scalar_mul", [](Random& r) { return std::vector<Matrix>{random_matrix(r, 2, 5)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::scalar_mul(l[0], 0.125), 6); }},
      {"relu", [](Random& r) { return std::vector<Matrix>{away_from_zero(r, 5, 4)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::relu(l[0]), 7); }},
      {"exp", [](Random& r) { return std::vector<Matrix>{random_matrix(r, 3, 4, -2.0, 2.0)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::exp(l[0]), 8); }},
      {"softmax_rows", [](Random& r) { return std::vector<Matrix>{random_matrix(r, 4, 6, -3.0, 3.0)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::softmax_rows(l[0]), 9); }},
      {"max_rows", [](Random& r) { return std::vector<Matrix>{distinct_maxima(r, 6, 4)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::max_rows(l[0]), 10); }},
      {"concat_cols",
       [](Random& r) { return std::vector<Matrix>{random_matrix(r, 3, 2), random_matrix(r, 3, 1), random_matrix(r, 3, 4)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::concat_cols(l), 11); }},
      {"transpose", [](Random& r) { return std::vector<Matrix>{random_matrix(r, 3, 5)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::transpose(l[0]), 12); }},
      {"l2_normalize_row", [](Random& r) { return std::vector<Matrix>{random_matrix(r, 1, 3, 0.2, 1.0)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::l2_normalize_row(l[0]), 13); }},
      {"cross3", [](Random& r) { return std::vector<Matrix>{random_matrix(r, 1, 3), random_matrix(r, 1, 3)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::cross3(l[0], l[1]), 14); }},
      {"norm2", [](Random& r) { return std::vector<Matrix>{random_matrix(r, 2, 3, 0.1, 1.0)}; },
       [](Tape& t, std::span<const Var> l) { return weighted_sum(t, ad::norm2(l[0]), 15); }},
      {"sum", [](Random& r) { return std::vector<Matrix>{random_matrix(r, 4, 2)}; },
       [](Tape&, std::span<const Var> l) { return ad::sum(l[0]); }},
  };
}

}  // namespace testing
