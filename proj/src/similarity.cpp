#include "geneus/similarity.hpp"

#include <algorithm>

namespace geneus::similarity {

std::string normalize_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                 (c >= '0' && c <= '9');
    if (alnum) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(c >= 'A' && c <= 'Z' ? char(c - 'A' + 'a') : char(c));
    } else {
      pending_space = true;
    }
  }
  return out;
}

std::vector<std::string> normalize_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string norm = normalize_text(text);
  std::size_t pos = 0;
  while (pos < norm.size()) {
    std::size_t space = norm.find(' ', pos);
    if (space == std::string::npos) space = norm.size();
    if (space > pos) out.push_back(norm.substr(pos, space - pos));
    pos = space + 1;
  }
  return out;
}

std::string stem(std::string token) {
  auto ends_with = [&token](const char* suffix) {
    std::size_t len = std::char_traits<char>::length(suffix);
    return token.size() >= len &&
           token.compare(token.size() - len, len, suffix) == 0;
  };
  if (token.size() > 4 && ends_with("ies")) {
    token.replace(token.size() - 3, 3, "y");
  } else if (token.size() > 3 && !ends_with("ss") && !ends_with("us") &&
             ends_with("s")) {
    token.pop_back();
  }
  if (token.size() > 5 && ends_with("ing")) {
    token.erase(token.size() - 3);
  } else if (token.size() > 4 && ends_with("ed")) {
    token.erase(token.size() - 2);
  }
  return token;
}

std::vector<std::string> token_set(const std::string& text) {
  std::vector<std::string> tokens = normalize_tokens(text);
  for (auto& t : tokens) t = stem(std::move(t));
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::size_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    int cmp = a[i].compare(b[j]);
    if (cmp == 0) {
      ++inter;
      ++i;
      ++j;
    } else if (cmp < 0) {
      ++i;
    } else {
      ++j;
    }
  }
  std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double PairwiseMatrix::mean_off_diagonal() const {
  if (n < 2) return 1.0;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sum += at(i, j);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

PairwiseMatrix pairwise_matrix_serial(std::size_t n, const PairSimilarityFn& sim) {
  PairwiseMatrix m;
  m.n = n;
  m.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = sim(i, j);
      m.at(i, j) = v;
      m.at(j, i) = v;
    }
  }
  return m;
}

PairwiseMatrix pairwise_matrix_parallel(std::size_t n, const PairSimilarityFn& sim) {
  PairwiseMatrix m;
  m.n = n;
  m.values.assign(n * n, 0.0);
  // Row lengths shrink as i grows, so dynamic scheduling keeps threads busy.
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    auto ui = static_cast<std::size_t>(i);
    m.at(ui, ui) = 1.0;
    for (std::size_t j = ui + 1; j < n; ++j) {
      double v = sim(ui, j);
      m.at(ui, j) = v;
      m.at(j, ui) = v;
    }
  }
  return m;
}

PairwiseMatrix pairwise_matrix(std::size_t n, const PairSimilarityFn& sim) {
  return pairwise_matrix_parallel(n, sim);
}

}  // namespace geneus::similarity
