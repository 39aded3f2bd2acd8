#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "partisan/corpus.hpp"
#include "partisan/evaluate.hpp"
#include "partisan/metrics.hpp"

namespace partisan {

struct KldCell {
  std::string dataset;
  std::string topic;
  std::string method;
  Ideology ideology = Ideology::liberal;
  std::optional<double> value;  // nullopt: explicitly missing
};

struct TendencyCell {
  std::string dataset;
  std::string topic;
  std::string method;
  std::optional<double> value;
};

struct RenderedTable {
  std::string markdown;
  std::string csv;
  nlohmann::ordered_json json;
};

struct TableOptions {
  std::string title;
  // Column order; defaults to first-appearance order in the cells.
  std::vector<std::string> methods;
  int decimals = 2;
};

// Rows are topics grouped by dataset (first-appearance order); columns are
// method x {Lib, Con}. Per (topic, ideology) every cell holding the minimum is
// best: bold in markdown, best=true in CSV/JSON. Missing cells render as "—".
// Throws ValidationError on duplicate cells or empty input.
RenderedTable render_kld_table(const std::vector<KldCell>& cells, const TableOptions& opts = {});

// One column per method, maximum is best.
RenderedTable render_tendency_table(const std::vector<TendencyCell>& cells,
                                    const TableOptions& opts = {});

// Table cells for one feature out of evaluation rows.
std::vector<KldCell> kld_cells(const std::vector<EvaluationRow>& rows, FeatureKind feature);
std::vector<TendencyCell> tendency_cells(const std::vector<EvaluationRow>& rows, FeatureKind feature);

// Long format: dataset,topic,feature,ideology,source,method,class,raw_p,normalized_p.
// Returns the number of data rows (header excluded).
std::size_t write_distributions_csv(const std::vector<ClassDistribution>& distributions,
                                    std::ostream& out);
std::size_t export_distributions(const std::vector<ClassDistribution>& distributions,
                                 const std::string& path);

struct ReportBundle {
  std::string markdown;                // all tables, one after another
  std::vector<std::pair<std::string, RenderedTable>> tables;  // (name, table)
  nlohmann::ordered_json json;         // {"generated_at","config_hash","tables"}
};

// KLD and tendency tables for every feature present in `rows`.
ReportBundle build_report(const std::vector<EvaluationRow>& rows,
                          const std::vector<std::string>& methods,
                          const std::string& generated_at, const std::string& config_hash);

}  // namespace partisan
