#include "partisan/evaluate.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <istream>

#include "partisan/text.hpp"

namespace partisan {

KldDirection parse_kld_direction(std::string_view s) {
  if (s == "gen-vs-real") return KldDirection::gen_vs_real;
  if (s == "real-vs-gen") return KldDirection::real_vs_gen;
  throw ValidationError("unknown KLD direction '" + std::string(s) +
                        "' (expected gen-vs-real or real-vs-gen)");
}

std::string_view to_string(KldDirection d) noexcept {
  return d == KldDirection::gen_vs_real ? "gen-vs-real" : "real-vs-gen";
}

LogBase parse_log_base(std::string_view s) {
  if (s == "e" || s == "nats") return LogBase::natural;
  if (s == "2" || s == "bits") return LogBase::two;
  throw ValidationError("unknown log base '" + std::string(s) + "' (expected e or 2)");
}

std::string_view to_string(LogBase b) noexcept { return b == LogBase::natural ? "e" : "2"; }

nlohmann::ordered_json row_to_json(const EvaluationRow& r) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["method"] = r.method;
  j["feature"] = to_string(r.feature);
  j["topic"] = r.topic;
  if (r.ideology) j["ideology"] = to_string(*r.ideology);
  j["metric"] = r.metric;
  if (std::isfinite(r.value)) {
    j["value"] = r.value;
  } else {
    j["value"] = nullptr;
  }
  if (!r.per_class.empty()) {
    nlohmann::ordered_json pc = nlohmann::ordered_json::object();
    for (const auto& [cls, acc] : r.per_class) pc[cls] = acc;
    j["per_class"] = std::move(pc);
  }
  j["epsilon"] = r.epsilon;
  j["n_real"] = r.n_real;
  j["n_gen"] = r.n_gen;
  return j;
}

EvaluationRow row_from_json(const nlohmann::json& j) {
  try {
    EvaluationRow r;
    r.dataset = j.value("dataset", "");
    r.method = j.value("method", "");
    r.feature = parse_feature(j.at("feature").get<std::string>());
    r.topic = j.at("topic").get<std::string>();
    if (auto it = j.find("ideology"); it != j.end() && !it->is_null()) {
      r.ideology = parse_ideology(it->get<std::string>());
    }
    r.metric = j.at("metric").get<std::string>();
    if (r.metric != "kld" && r.metric != "tendency") {
      throw ValidationError("unknown metric '" + r.metric + "'");
    }
    const auto& v = j.at("value");
    r.value = v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
    if (auto it = j.find("per_class"); it != j.end()) {
      // nlohmann::json keys are sorted; order is restored by the caller if needed.
      for (auto pc = it->begin(); pc != it->end(); ++pc) r.per_class.emplace_back(pc.key(), pc->get<int>());
    }
    r.epsilon = j.value("epsilon", 0.0);
    r.n_real = j.value("n_real", std::int64_t{0});
    r.n_gen = j.value("n_gen", std::int64_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad results row: ") + e.what());
  }
}

namespace {

std::optional<std::string> pinned(const Study& study, FeatureKind f) {
  auto it = study.annotators.find(f);
  if (it == study.annotators.end()) return std::nullopt;
  return it->second;
}

const Corpus& generated_for(const StudyDataset& ds, const std::string& method) {
  auto it = ds.generated.find(method);
  if (it == ds.generated.end()) {
    throw ValidationError("dataset '" + ds.name + "' has no generated corpus for method '" + method + "'");
  }
  return it->second;
}

struct TopicFeatureDistributions {
  ClassDistribution real[2];
  std::vector<std::array<ClassDistribution, 2>> gen;  // per method, [lib, con]
};

TopicFeatureDistributions collect(const Study& study, const StudyDataset& ds,
                                  const std::string& topic, FeatureKind f,
                                  const AnnotationStore& store, const ClassRegistry& registry) {
  TopicFeatureDistributions out;
  const auto annotator = pinned(study, f);
  for (int side = 0; side < 2; ++side) {
    Cell cell{ds.name, topic, kIdeologies[side], Source::real, ""};
    out.real[side] = class_distribution(ds.real, store, f, cell, registry, annotator);
  }
  for (const auto& method : study.methods) {
    std::array<ClassDistribution, 2> pair;
    const Corpus& gen = generated_for(ds, method);
    for (int side = 0; side < 2; ++side) {
      Cell cell{ds.name, topic, kIdeologies[side], Source::generated, method};
      pair[side] = class_distribution(gen, store, f, cell, registry, annotator);
    }
    out.gen.push_back(std::move(pair));
  }
  return out;
}

}  // namespace

std::vector<ClassDistribution> study_distributions(const Study& study,
                                                   const AnnotationStore& store,
                                                   const ClassRegistry& registry) {
  std::vector<ClassDistribution> out;
  for (const auto& ds : study.datasets) {
    for (const auto& topic : ds.topics) {
      for (FeatureKind f : study.features) {
        auto d = collect(study, ds, topic, f, store, registry);
        for (int side = 0; side < 2; ++side) {
          out.push_back(d.real[side]);
          for (auto& pair : d.gen) out.push_back(pair[side]);
        }
      }
    }
  }
  return out;
}

StudyResults evaluate_study(const Study& study, const AnnotationStore& store,
                            const ClassRegistry& registry, const MetricOptions& opts) {
  if (study.methods.empty()) throw ValidationError("study has no methods");
  if (study.datasets.empty()) throw ValidationError("study has no datasets");
  StudyResults results;
  const KlOptions kl{opts.epsilon, opts.log_base};

  for (const auto& ds : study.datasets) {
    if (ds.topics.empty()) throw ValidationError("dataset '" + ds.name + "' has no topics");
    for (const auto& topic : ds.topics) {
      for (FeatureKind f : study.features) {
        auto d = collect(study, ds, topic, f, store, registry);
        for (int side = 0; side < 2; ++side) {
          results.distributions.push_back(d.real[side]);
          for (auto& pair : d.gen) results.distributions.push_back(pair[side]);
        }

        for (std::size_t m = 0; m < study.methods.size(); ++m) {
          const auto& gen = d.gen[m];
          for (int side = 0; side < 2; ++side) {
            const ClassDistribution& real_d = d.real[side];
            const ClassDistribution& gen_d = gen[side];
            EvaluationRow row;
            row.dataset = ds.name;
            row.method = study.methods[m];
            row.feature = f;
            row.topic = topic;
            row.ideology = kIdeologies[side];
            row.metric = "kld";
            row.value = opts.direction == KldDirection::gen_vs_real
                            ? kl_divergence(gen_d, real_d, kl).kld
                            : kl_divergence(real_d, gen_d, kl).kld;
            row.epsilon = opts.epsilon;
            row.n_real = real_d.n_instances;
            row.n_gen = gen_d.n_instances;
            results.rows.push_back(std::move(row));
          }

          const TendencyResult t =
              tendency_accuracy(d.real[0], d.real[1], gen[0], gen[1], opts.tie_tolerance);
          EvaluationRow row;
          row.dataset = ds.name;
          row.method = study.methods[m];
          row.feature = f;
          row.topic = topic;
          row.metric = "tendency";
          row.value = t.overall;
          for (std::size_t i = 0; i < t.classes.size(); ++i) {
            row.per_class.emplace_back(t.classes[i], t.per_class[i]);
          }
          row.epsilon = opts.epsilon;
          row.n_real = d.real[0].n_instances + d.real[1].n_instances;
          row.n_gen = gen[0].n_instances + gen[1].n_instances;
          results.rows.push_back(std::move(row));
        }
      }
    }
  }
  return results;
}

void write_results(const std::vector<EvaluationRow>& rows, std::ostream& out) {
  for (const auto& r : rows) out << row_to_json(r).dump() << '\n';
}

std::vector<EvaluationRow> read_results(std::istream& in, const std::string& path) {
  std::vector<EvaluationRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      rows.push_back(row_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path, line_no, std::string("malformed JSON: ") + e.what());
    } catch (const ValidationError& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
  return rows;
}

}  // namespace partisan
