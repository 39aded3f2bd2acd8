#include "partisan/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace partisan {

ClassDistribution distribution_from_labels(const ClassSet& classes,
                                           const std::vector<std::vector<std::string>>& labels,
                                           Cell cell) {
  if (labels.empty()) throw EmptyCell("no instances in the cell");
  ClassDistribution d;
  d.feature = classes.feature;
  d.classes = classes.classes;
  d.cell = std::move(cell);
  d.n_instances = static_cast<std::int64_t>(labels.size());
  d.counts.assign(classes.size(), 0);
  for (const auto& instance_labels : labels) {
    std::vector<bool> hit(classes.size(), false);
    for (const auto& label : instance_labels) hit[classes.index_of(label)] = true;
    for (std::size_t i = 0; i < hit.size(); ++i) d.counts[i] += hit[i] ? 1 : 0;
  }

  std::int64_t total = 0;
  for (auto c : d.counts) total += c;
  if (total == 0) throw DegenerateDistribution("no instance carries any " +
                                               std::string(to_string(classes.feature)) + " label");

  const double n = static_cast<double>(d.n_instances);
  d.raw.reserve(d.counts.size());
  d.normalized.reserve(d.counts.size());
  for (auto c : d.counts) {
    d.raw.push_back(static_cast<double>(c) / n);
    // (c/N) / (total/N) == c / total; dividing the integers rounds once.
    d.normalized.push_back(static_cast<double>(c) / static_cast<double>(total));
  }
  return d;
}

ClassDistribution class_distribution(const Corpus& corpus, const AnnotationStore& store,
                                     FeatureKind feature, const Cell& cell,
                                     const ClassRegistry& registry,
                                     const std::optional<std::string>& annotator) {
  CorpusFilter filter{cell.ideology, {}, cell.source};
  if (!cell.topic.empty()) filter.topic = cell.topic;
  const Corpus slice = filter_corpus(corpus, filter);
  if (slice.empty()) {
    throw EmptyCell("no instances for " + std::string(to_string(feature)) + " cell (" +
                    (cell.dataset.empty() ? "" : cell.dataset + ", ") + cell.topic + ", " +
                    std::string(to_string(cell.ideology)) + ", " +
                    std::string(to_string(cell.source)) + ")");
  }

  std::vector<std::vector<std::string>> labels;
  std::vector<std::string> missing;
  labels.reserve(slice.size());
  for (const auto& t : slice.instances) {
    const AnnotationRecord* r = store.lookup(t.id, feature, annotator);
    if (!r) {
      missing.push_back(t.id);
      continue;
    }
    labels.push_back(registry.canonical_labels(feature, r->labels));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw MissingAnnotations(missing, "missing " + std::string(to_string(feature)) +
                                          " annotations for: " + list);
  }
  return distribution_from_labels(registry.get(feature), labels, cell);
}

namespace {

void check_probability_vector(std::span<const double> v, const char* name) {
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw ValidationError(std::string(name) + " has a negative or non-finite entry");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ValidationError(std::string(name) + " is not normalized (sum " + std::to_string(sum) + ")");
  }
}

}  // namespace

double kl_divergence(std::span<const double> p, std::span<const double> q, const KlOptions& opts) {
  if (p.size() != q.size()) throw ValidationError("KL divergence over different class counts");
  if (p.empty()) throw ValidationError("KL divergence over zero classes");
  if (!(opts.epsilon >= 0.0) || !std::isfinite(opts.epsilon)) {
    throw ValidationError("epsilon must be a non-negative finite number");
  }
  check_probability_vector(p, "p");
  check_probability_vector(q, "q");

  const double eps = opts.epsilon;
  const double denom = 1.0 + static_cast<double>(p.size()) * eps;
  double kld = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double ps = (p[i] + eps) / denom;
    if (ps == 0.0) continue;
    const double qs = (q[i] + eps) / denom;
    if (qs == 0.0) return std::numeric_limits<double>::infinity();
    kld += ps * std::log(ps / qs);
  }
  // Rounding can leave a tiny negative sum for near-identical inputs.
  if (kld < 0.0) kld = 0.0;
  if (opts.base == LogBase::two) kld /= std::numbers::ln2;
  return kld;
}

DivergenceResult kl_divergence(const ClassDistribution& p, const ClassDistribution& q,
                               const KlOptions& opts) {
  if (p.feature != q.feature) throw ValidationError("KL divergence across different features");
  if (p.classes != q.classes) throw ValidationError("KL divergence across different class orderings");
  DivergenceResult r;
  r.feature = p.feature;
  r.topic = p.cell.topic;
  r.ideology = p.cell.ideology;
  r.kld = kl_divergence(p.normalized, q.normalized, opts);
  return r;
}

namespace {

int tolerant_sign(double x, double tol) {
  if (std::abs(x) <= tol) return 0;
  return x > 0.0 ? 1 : -1;
}

}  // namespace

TendencyResult tendency_accuracy(std::span<const double> p_lib, std::span<const double> p_con,
                                 std::span<const double> q_lib, std::span<const double> q_con,
                                 double tie_tolerance) {
  const std::size_t m = p_lib.size();
  if (p_con.size() != m || q_lib.size() != m || q_con.size() != m) {
    throw ValidationError("tendency accuracy needs four vectors of equal length");
  }
  if (m == 0) throw ValidationError("tendency accuracy over zero classes");
  if (!(tie_tolerance >= 0.0)) throw ValidationError("tie_tolerance must be non-negative");

  TendencyResult r;
  r.per_class.reserve(m);
  int hits = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const int real = tolerant_sign(p_lib[i] - p_con[i], tie_tolerance);
    const int model = tolerant_sign(q_lib[i] - q_con[i], tie_tolerance);
    const int acc = real == model ? 1 : 0;
    r.per_class.push_back(acc);
    hits += acc;
  }
  r.overall = static_cast<double>(hits) / static_cast<double>(m);
  return r;
}

TendencyResult tendency_accuracy(const ClassDistribution& real_lib,
                                 const ClassDistribution& real_con,
                                 const ClassDistribution& gen_lib, const ClassDistribution& gen_con,
                                 double tie_tolerance) {
  for (const auto* d : {&real_con, &gen_lib, &gen_con}) {
    if (d->feature != real_lib.feature || d->classes != real_lib.classes) {
      throw ValidationError("tendency accuracy across different class sets");
    }
  }
  TendencyResult r =
      tendency_accuracy(real_lib.raw, real_con.raw, gen_lib.raw, gen_con.raw, tie_tolerance);
  r.feature = real_lib.feature;
  r.topic = real_lib.cell.topic;
  r.classes = real_lib.classes;
  return r;
}

}  // namespace partisan
