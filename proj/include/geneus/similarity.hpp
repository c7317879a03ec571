#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

// Token normalization and pairwise similarity kernels. The pairwise driver
// has a serial reference implementation and an OpenMP one; they must produce
// identical matrices (tests compare them, tools/similarity_bench times them).

namespace geneus::similarity {

/// Lowercases, maps every non-alphanumeric character to a space, collapses
/// runs of whitespace, trims.
std::string normalize_text(const std::string& text);

/// normalize_text, split on spaces.
std::vector<std::string> normalize_tokens(const std::string& text);

/// Crude suffix stripper ("stories" -> "story", "records" -> "record",
/// "created" -> "creat"). Deterministic, applied identically on both sides
/// of a comparison, which is all duplicate detection needs.
std::string stem(std::string token);

/// Sorted unique stemmed tokens of `text`.
std::vector<std::string> token_set(const std::string& text);

/// Jaccard similarity of two sorted unique vectors. Two empty sets are
/// identical (1.0); one empty set is disjoint from anything non-empty (0.0).
double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

using PairSimilarityFn = std::function<double(std::size_t, std::size_t)>;

/// Dense symmetric matrix with a unit diagonal.
struct PairwiseMatrix {
  std::size_t n{0};
  std::vector<double> values;  // row-major n*n

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }

  /// Mean of the strict upper triangle; 1.0 when n < 2.
  double mean_off_diagonal() const;
};

PairwiseMatrix pairwise_matrix_serial(std::size_t n, const PairSimilarityFn& sim);
PairwiseMatrix pairwise_matrix_parallel(std::size_t n, const PairSimilarityFn& sim);

/// Dispatches to the parallel kernel (which degrades to serial without
/// OpenMP).
PairwiseMatrix pairwise_matrix(std::size_t n, const PairSimilarityFn& sim);

}  // namespace geneus::similarity
