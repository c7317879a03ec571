#include "geneus/consistency.hpp"

#include <algorithm>
#include <cstdio>
#include <tuple>

namespace geneus::consistency {

namespace {

/// Unique normalized texts of a requirement set (set semantics for Jaccard).
std::vector<std::string> normalized_texts(const schema::RequirementSet& set) {
  std::vector<std::string> out;
  out.reserve(set.requirements.size());
  for (const auto& r : set.requirements) {
    out.push_back(similarity::normalize_text(r.text));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double exact_jaccard(const std::vector<std::string>& a,
                     const std::vector<std::string>& b) {
  return similarity::jaccard(a, b);
}

struct Candidate {
  double sim;
  std::size_t i;
  std::size_t j;
};

/// Greedy one-to-one matching between two text lists: exact matches first,
/// then remaining pairs in descending stemmed-token similarity, cut off at
/// `threshold`. Returns, for each entry of `a`, the index of its partner in
/// `b`, or -1. Ties break on the text pair, so swapping the sides matches
/// the same texts.
std::vector<int> greedy_match(const std::vector<std::string>& a,
                              const std::vector<std::string>& b,
                              double threshold) {
  std::vector<int> partner(a.size(), -1);
  std::vector<bool> b_matched(b.size(), false);

  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (b_matched[j] || a[i] != b[j]) continue;
      partner[i] = static_cast<int>(j);
      b_matched[j] = true;
      break;
    }
  }

  std::vector<std::vector<std::string>> a_tokens(a.size()), b_tokens(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (partner[i] < 0) a_tokens[i] = similarity::token_set(a[i]);
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (!b_matched[j]) b_tokens[j] = similarity::token_set(b[j]);
  }

  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (partner[i] >= 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (b_matched[j]) continue;
      double sim = similarity::jaccard(a_tokens[i], b_tokens[j]);
      if (sim >= threshold) candidates.push_back({sim, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [&](const Candidate& x, const Candidate& y) {
              if (x.sim != y.sim) return x.sim > y.sim;
              auto xk = std::minmax(a[x.i], b[x.j]);
              auto yk = std::minmax(a[y.i], b[y.j]);
              if (xk != yk) return xk < yk;
              return std::tie(x.i, x.j) < std::tie(y.i, y.j);
            });
  for (const auto& c : candidates) {
    if (partner[c.i] >= 0 || b_matched[c.j]) continue;
    partner[c.i] = static_cast<int>(c.j);
    b_matched[c.j] = true;
  }
  return partner;
}

double relaxed_similarity(const std::vector<std::string>& a,
                          const std::vector<std::string>& b,
                          double threshold) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  auto partner = greedy_match(a, b, threshold);
  auto m = static_cast<std::size_t>(
      std::count_if(partner.begin(), partner.end(), [](int p) { return p >= 0; }));
  return static_cast<double>(m) /
         static_cast<double>(a.size() + b.size() - m);
}

Json matrix_to_json(const similarity::PairwiseMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.n; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.n; ++j) row.push_back(m.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json requirement_to_json(const schema::Requirement& r) {
  Json j;
  j["id"] = r.id;
  j["text"] = r.text;
  j["kind"] = schema::requirement_kind_name(r.kind);
  return j;
}

}  // namespace

RepeatedRuns run_repeated(const ingest::SourceDocument& doc,
                          model::Provider& provider, int n,
                          const RepeatOptions& options) {
  if (n < 2) throw std::invalid_argument("run_repeated needs n >= 2");

  RepeatedRuns out;
  for (int i = 0; i < n; ++i) {
    try {
      schema::GenerationResult result =
          storygen::run_pipeline(doc, provider, options.pipeline);
      if (options.store) {
        out.run_ids.push_back(options.store->save(result).run_id);
      }
      out.results.push_back(std::move(result));
    } catch (const storygen::PipelineError& e) {
      out.failures.push_back({i, storygen::stage_name(e.stage), e.what(),
                              model::is_provider_error(e.cause)});
    } catch (const model::ProviderError& e) {
      out.failures.push_back({i, "provider", e.what(), true});
    } catch (const std::exception& e) {
      out.failures.push_back({i, "unknown", e.what(), false});
    }
  }
  if (out.results.empty()) {
    std::string detail = "all " + std::to_string(n) + " runs failed";
    if (!out.failures.empty()) {
      detail += "; first: " + out.failures.front().message;
    }
    throw AllRunsFailed(detail, std::move(out.failures));
  }
  return out;
}

StabilityScore requirement_stability(
    const std::vector<schema::RequirementSet>& sets, double relaxed_threshold) {
  if (sets.size() < 2) {
    throw std::invalid_argument("requirement_stability needs at least 2 sets");
  }

  std::vector<std::vector<std::string>> texts;
  texts.reserve(sets.size());
  for (const auto& s : sets) texts.push_back(normalized_texts(s));

  StabilityScore score;
  score.n_runs = static_cast<int>(sets.size());
  score.relaxed_threshold = relaxed_threshold;
  score.per_pair = similarity::pairwise_matrix_serial(
      texts.size(),
      [&](std::size_t i, std::size_t j) { return exact_jaccard(texts[i], texts[j]); });
  score.mean_pairwise_similarity = score.per_pair.mean_off_diagonal();
  score.relaxed_per_pair = similarity::pairwise_matrix_serial(
      texts.size(), [&](std::size_t i, std::size_t j) {
        return relaxed_similarity(texts[i], texts[j], relaxed_threshold);
      });
  score.relaxed_mean_pairwise_similarity =
      score.relaxed_per_pair.mean_off_diagonal();
  return score;
}

ComparisonReport compare_rat_vs_io(const ingest::SourceDocument& doc,
                                   model::Provider& provider,
                                   const storygen::PipelineOptions& options,
                                   double match_threshold) {
  ingest::ExtractedText text;
  try {
    text = ingest::extract_text(doc);
  } catch (const std::exception& e) {
    throw ArmError("rat", e.what(), std::current_exception());
  }

  ComparisonReport report;
  report.match_threshold = match_threshold;
  try {
    report.rat_requirements =
        storygen::extract_requirements(text, provider, options).set;
  } catch (const std::exception& e) {
    throw ArmError("rat", e.what(), std::current_exception());
  }
  try {
    report.io_requirements =
        storygen::extract_requirements_io(text, provider, options).set;
  } catch (const std::exception& e) {
    ArmError err("io", e.what(), std::current_exception());
    err.rat_requirements = report.rat_requirements;
    throw err;
  }

  const auto& rat = report.rat_requirements.requirements;
  const auto& io = report.io_requirements.requirements;
  std::vector<std::string> rat_texts, io_texts;
  rat_texts.reserve(rat.size());
  io_texts.reserve(io.size());
  for (const auto& r : rat) rat_texts.push_back(similarity::normalize_text(r.text));
  for (const auto& r : io) io_texts.push_back(similarity::normalize_text(r.text));

  std::vector<int> partner = greedy_match(rat_texts, io_texts, match_threshold);
  std::vector<bool> io_matched(io.size(), false);
  for (std::size_t i = 0; i < rat.size(); ++i) {
    if (partner[i] >= 0) {
      auto j = static_cast<std::size_t>(partner[i]);
      io_matched[j] = true;
      report.matched.emplace_back(rat[i].id, io[j].id);
    } else {
      report.rat_only.push_back(rat[i]);
    }
  }
  for (std::size_t j = 0; j < io.size(); ++j) {
    if (!io_matched[j]) report.io_only.push_back(io[j]);
  }
  return report;
}

Json stability_to_json(const StabilityScore& score) {
  Json j;
  j["n_runs"] = score.n_runs;
  j["mean_pairwise_similarity"] = score.mean_pairwise_similarity;
  j["relaxed_mean_pairwise_similarity"] = score.relaxed_mean_pairwise_similarity;
  j["relaxed_threshold"] = score.relaxed_threshold;
  j["per_pair"] = matrix_to_json(score.per_pair);
  j["relaxed_per_pair"] = matrix_to_json(score.relaxed_per_pair);
  return j;
}

std::string matrix_to_csv(const similarity::PairwiseMatrix& matrix) {
  std::string out;
  out += "run";
  for (std::size_t j = 0; j < matrix.n; ++j) {
    out += ",run_" + std::to_string(j + 1);
  }
  out += "\n";
  char buf[32];
  for (std::size_t i = 0; i < matrix.n; ++i) {
    out += "run_" + std::to_string(i + 1);
    for (std::size_t j = 0; j < matrix.n; ++j) {
      std::snprintf(buf, sizeof(buf), "%.6f", matrix.at(i, j));
      out += ",";
      out += buf;
    }
    out += "\n";
  }
  return out;
}

Json comparison_to_json(const ComparisonReport& report) {
  Json j;
  j["match_threshold"] = report.match_threshold;
  j["rat_requirements"] = Json::array();
  for (const auto& r : report.rat_requirements.requirements) {
    j["rat_requirements"].push_back(requirement_to_json(r));
  }
  j["io_requirements"] = Json::array();
  for (const auto& r : report.io_requirements.requirements) {
    j["io_requirements"].push_back(requirement_to_json(r));
  }
  j["matched"] = Json::array();
  for (const auto& [rat_id, io_id] : report.matched) {
    j["matched"].push_back({{"rat", rat_id}, {"io", io_id}});
  }
  j["rat_only"] = Json::array();
  for (const auto& r : report.rat_only) {
    j["rat_only"].push_back(requirement_to_json(r));
  }
  j["io_only"] = Json::array();
  for (const auto& r : report.io_only) {
    j["io_only"].push_back(requirement_to_json(r));
  }
  return j;
}

}  // namespace geneus::consistency
