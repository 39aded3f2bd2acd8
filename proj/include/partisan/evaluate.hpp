#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "partisan/annotate.hpp"
#include "partisan/corpus.hpp"
#include "partisan/metrics.hpp"

namespace partisan {

enum class KldDirection { gen_vs_real, real_vs_gen };

KldDirection parse_kld_direction(std::string_view s);
std::string_view to_string(KldDirection d) noexcept;
LogBase parse_log_base(std::string_view s);
std::string_view to_string(LogBase b) noexcept;

struct MetricOptions {
  double epsilon = 1e-6;
  double tie_tolerance = 0.0;
  KldDirection direction = KldDirection::gen_vs_real;
  LogBase log_base = LogBase::natural;
};

// One real-world corpus and its generated counterparts, one per method.
struct StudyDataset {
  std::string name;
  std::vector<std::string> topics;
  Corpus real;
  std::map<std::string, Corpus> generated;  // method -> corpus
};

struct Study {
  std::vector<StudyDataset> datasets;
  std::vector<std::string> methods;
  std::vector<FeatureKind> features{FeatureKind::stance, FeatureKind::emotion,
                                    FeatureKind::moral_foundation};
  std::map<FeatureKind, std::string> annotators;  // optional pin per feature
};

struct EvaluationRow {
  std::string dataset;
  std::string method;
  FeatureKind feature = FeatureKind::stance;
  std::string topic;
  std::optional<Ideology> ideology;  // kld rows only
  std::string metric;                // "kld" or "tendency"
  double value = 0.0;
  std::vector<std::pair<std::string, int>> per_class;  // tendency rows only
  double epsilon = 0.0;
  std::int64_t n_real = 0;
  std::int64_t n_gen = 0;
};

nlohmann::ordered_json row_to_json(const EvaluationRow& r);
EvaluationRow row_from_json(const nlohmann::json& j);

struct StudyResults {
  std::vector<EvaluationRow> rows;
  std::vector<ClassDistribution> distributions;
};

// Every class distribution of the study: per dataset, topic, feature, and
// ideology, the real-world one followed by one per method.
std::vector<ClassDistribution> study_distributions(const Study& study,
                                                   const AnnotationStore& store,
                                                   const ClassRegistry& registry);

// Rows are ordered by dataset, topic, feature, method; within a method the
// liberal KLD, the conservative KLD, then the tendency accuracy.
StudyResults evaluate_study(const Study& study, const AnnotationStore& store,
                            const ClassRegistry& registry, const MetricOptions& opts);

void write_results(const std::vector<EvaluationRow>& rows, std::ostream& out);
std::vector<EvaluationRow> read_results(std::istream& in, const std::string& path = {});

}  // namespace partisan
