#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partisan/annotate.hpp"
#include "partisan/corpus.hpp"
#include "partisan/errors.hpp"

namespace partisan {

// Identifies one distribution: which data, which slice.
struct Cell {
  std::string dataset;
  std::string topic;  // empty: all topics
  Ideology ideology = Ideology::liberal;
  Source source = Source::real;
  std::string method;  // generator name for generated data, empty for real

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct ClassDistribution {
  FeatureKind feature = FeatureKind::stance;
  std::vector<std::string> classes;
  std::vector<std::int64_t> counts;  // instances carrying each class
  std::vector<double> raw;           // counts / N; may sum past 1 for multi-label features
  std::vector<double> normalized;    // raw / sum(raw)
  std::int64_t n_instances = 0;
  Cell cell;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class EmptyCell : public MetricError {
 public:
  using MetricError::MetricError;
};

// No instance in the cell carries any label, so there is nothing to normalize.
class DegenerateDistribution : public MetricError {
 public:
  using MetricError::MetricError;
};

class MissingAnnotations : public ValidationError {
 public:
  MissingAnnotations(std::vector<std::string> ids, const std::string& what)
      : ValidationError(what), ids_(std::move(ids)) {}
  const std::vector<std::string>& instance_ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

// Counting kernel: one label list per instance, already validated against `classes`.
ClassDistribution distribution_from_labels(const ClassSet& classes,
                                           const std::vector<std::vector<std::string>>& labels,
                                           Cell cell = {});

// Distribution of `feature` over the instances of `corpus` that fall in `cell`
// (ideology, source, and topic when non-empty). Every such instance needs an
// annotation; labels are mapped through `registry` (which folds moral
// foundation poles under collapse).
ClassDistribution class_distribution(const Corpus& corpus, const AnnotationStore& store,
                                     FeatureKind feature, const Cell& cell,
                                     const ClassRegistry& registry,
                                     const std::optional<std::string>& annotator = {});

enum class LogBase { natural, two };

struct KlOptions {
  double epsilon = 1e-6;
  LogBase base = LogBase::natural;
};

// D(p || q) after additive smoothing x'_i = (x_i + eps) / (1 + M eps) on both
// sides. With eps = 0 a zero in q under mass in p gives +inf.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     const KlOptions& opts = {});

struct DivergenceResult {
  FeatureKind feature = FeatureKind::stance;
  std::string topic;
  Ideology ideology = Ideology::liberal;
  double kld = 0.0;
};

// Uses the normalized vectors. Throws ValidationError on feature or class mismatch.
DivergenceResult kl_divergence(const ClassDistribution& p, const ClassDistribution& q,
                               const KlOptions& opts = {});

struct TendencyResult {
  FeatureKind feature = FeatureKind::stance;
  std::string topic;
  std::vector<std::string> classes;
  std::vector<int> per_class;  // 1 when the model's lib-vs-con ordering matches the real one
  double overall = 0.0;
};

// sign(x) is 0 when |x| <= tie_tolerance. Class i scores 1 iff
// sign(q_lib - q_con) == sign(p_lib - p_con); overall is the mean over classes.
// p is real-world, q is model-generated; both raw (unnormalized).
TendencyResult tendency_accuracy(std::span<const double> p_lib, std::span<const double> p_con,
                                 std::span<const double> q_lib, std::span<const double> q_con,
                                 double tie_tolerance = 0.0);

// Convenience over distributions; uses the raw vectors.
TendencyResult tendency_accuracy(const ClassDistribution& real_lib,
                                 const ClassDistribution& real_con,
                                 const ClassDistribution& gen_lib, const ClassDistribution& gen_con,
                                 double tie_tolerance = 0.0);

}  // namespace partisan
