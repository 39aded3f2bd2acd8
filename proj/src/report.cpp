#include "partisan/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <array>
#include <map>
#include <set>
#include <tuple>

#include "partisan/errors.hpp"
#include "partisan/format.hpp"

namespace partisan {

namespace {

constexpr const char* kMissing = "—";

struct RowKey {
  std::string dataset;
  std::string topic;
  auto operator<=>(const RowKey&) const = default;
};

// Datasets in first-appearance order, each with its topics in first-appearance order.
template <typename CellT>
std::vector<std::pair<std::string, std::vector<std::string>>> row_layout(const std::vector<CellT>& cells) {
  std::vector<std::pair<std::string, std::vector<std::string>>> layout;
  for (const auto& c : cells) {
    auto ds = std::find_if(layout.begin(), layout.end(), [&](const auto& p) { return p.first == c.dataset; });
    if (ds == layout.end()) {
      layout.push_back({c.dataset, {}});
      ds = std::prev(layout.end());
    }
    if (std::find(ds->second.begin(), ds->second.end(), c.topic) == ds->second.end()) {
      ds->second.push_back(c.topic);
    }
  }
  return layout;
}

template <typename CellT>
std::vector<std::string> method_order(const std::vector<CellT>& cells, const TableOptions& opts) {
  std::vector<std::string> methods = opts.methods;
  for (const auto& c : cells) {
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
  }
  return methods;
}

struct Slot {
  std::optional<double> value;
  bool present = false;
  bool best = false;
};

// Marks the extreme finite values among the slots; ties all win.
void mark_best(std::vector<Slot*>& slots, bool minimize) {
  std::optional<double> best;
  for (auto* s : slots) {
    if (!s->value || std::isnan(*s->value)) continue;
    const double v = *s->value;
    if (!best || (minimize ? v < *best : v > *best)) best = v;
  }
  if (!best) return;
  for (auto* s : slots) {
    if (s->value && *s->value == *best) s->best = true;
  }
}

std::string display(const Slot& s, int decimals) {
  if (!s.value) return kMissing;
  return format_fixed(*s.value, decimals);
}

std::string md_cell(const Slot& s, int decimals) {
  std::string text = display(s, decimals);
  return s.best ? "**" + text + "**" : text;
}

nlohmann::ordered_json json_value(const Slot& s) {
  if (!s.value || !std::isfinite(*s.value)) return nullptr;
  return *s.value;
}

std::string md_header(const std::vector<std::string>& cols, std::size_t text_cols) {
  std::string out = "|";
  for (const auto& c : cols) out += " " + c + " |";
  out += "\n|";
  for (std::size_t i = 0; i < cols.size(); ++i) out += i < text_cols ? " --- |" : " ---: |";
  out += "\n";
  return out;
}

}  // namespace

RenderedTable render_kld_table(const std::vector<KldCell>& cells, const TableOptions& opts) {
  if (cells.empty()) throw ValidationError("no KLD results to render");
  const auto layout = row_layout(cells);
  const auto methods = method_order(cells, opts);

  // (dataset, topic) -> method -> [lib, con]
  std::map<RowKey, std::map<std::string, std::array<Slot, 2>>> grid;
  for (const auto& c : cells) {
    Slot& s = grid[{c.dataset, c.topic}][c.method][c.ideology == Ideology::liberal ? 0 : 1];
    if (s.present) {
      throw ValidationError("duplicate KLD cell (" + c.dataset + ", " + c.topic + ", " + c.method +
                            ", " + std::string(to_string(c.ideology)) + ")");
    }
    s.present = true;
    s.value = c.value;
  }
  for (auto& [key, by_method] : grid) {
    for (int side = 0; side < 2; ++side) {
      std::vector<Slot*> slots;
      for (const auto& m : methods) slots.push_back(&by_method[m][side]);
      mark_best(slots, /*minimize=*/true);
    }
  }

  RenderedTable t;
  std::vector<std::string> cols{"Dataset", "Topic"};
  for (const auto& m : methods) {
    cols.push_back(m + " Lib");
    cols.push_back(m + " Con");
  }
  if (!opts.title.empty()) t.markdown += "### " + opts.title + "\n\n";
  t.markdown += md_header(cols, 2);
  t.csv = csv_row({"dataset", "topic", "method", "ideology", "value", "best"});
  t.json["kind"] = "kld";
  t.json["title"] = opts.title;
  t.json["methods"] = methods;
  t.json["cells"] = nlohmann::ordered_json::array();

  for (const auto& [dataset, topics] : layout) {
    bool first = true;
    for (const auto& topic : topics) {
      auto& by_method = grid[{dataset, topic}];
      std::string line = "| " + (first ? dataset : std::string()) + " | " + topic + " |";
      first = false;
      for (const auto& m : methods) {
        for (int side = 0; side < 2; ++side) {
          const Slot& s = by_method[m][side];
          const char* ideology = side == 0 ? "liberal" : "conservative";
          line += " " + md_cell(s, opts.decimals) + " |";
          t.csv += csv_row({dataset, topic, m, ideology, s.value ? display(s, opts.decimals) : "",
                            s.best ? "true" : "false"});
          t.json["cells"].push_back({{"dataset", dataset},
                                     {"topic", topic},
                                     {"method", m},
                                     {"ideology", ideology},
                                     {"value", json_value(s)},
                                     {"display", display(s, opts.decimals)},
                                     {"best", s.best}});
        }
      }
      t.markdown += line + "\n";
    }
  }
  return t;
}

RenderedTable render_tendency_table(const std::vector<TendencyCell>& cells,
                                    const TableOptions& opts) {
  if (cells.empty()) throw ValidationError("no tendency results to render");
  const auto layout = row_layout(cells);
  const auto methods = method_order(cells, opts);

  std::map<RowKey, std::map<std::string, Slot>> grid;
  for (const auto& c : cells) {
    Slot& s = grid[{c.dataset, c.topic}][c.method];
    if (s.present) {
      throw ValidationError("duplicate tendency cell (" + c.dataset + ", " + c.topic + ", " + c.method + ")");
    }
    s.present = true;
    s.value = c.value;
  }
  for (auto& [key, by_method] : grid) {
    std::vector<Slot*> slots;
    for (const auto& m : methods) slots.push_back(&by_method[m]);
    mark_best(slots, /*minimize=*/false);
  }

  RenderedTable t;
  std::vector<std::string> cols{"Dataset", "Topic"};
  for (const auto& m : methods) cols.push_back(m);
  if (!opts.title.empty()) t.markdown += "### " + opts.title + "\n\n";
  t.markdown += md_header(cols, 2);
  t.csv = csv_row({"dataset", "topic", "method", "value", "best"});
  t.json["kind"] = "tendency";
  t.json["title"] = opts.title;
  t.json["methods"] = methods;
  t.json["cells"] = nlohmann::ordered_json::array();

  for (const auto& [dataset, topics] : layout) {
    bool first = true;
    for (const auto& topic : topics) {
      auto& by_method = grid[{dataset, topic}];
      std::string line = "| " + (first ? dataset : std::string()) + " | " + topic + " |";
      first = false;
      for (const auto& m : methods) {
        const Slot& s = by_method[m];
        line += " " + md_cell(s, opts.decimals) + " |";
        t.csv += csv_row({dataset, topic, m, s.value ? display(s, opts.decimals) : "",
                          s.best ? "true" : "false"});
        t.json["cells"].push_back({{"dataset", dataset},
                                   {"topic", topic},
                                   {"method", m},
                                   {"value", json_value(s)},
                                   {"display", display(s, opts.decimals)},
                                   {"best", s.best}});
      }
      t.markdown += line + "\n";
    }
  }
  return t;
}

std::vector<KldCell> kld_cells(const std::vector<EvaluationRow>& rows, FeatureKind feature) {
  std::vector<KldCell> out;
  for (const auto& r : rows) {
    if (r.feature != feature || r.metric != "kld" || !r.ideology) continue;
    out.push_back({r.dataset, r.topic, r.method, *r.ideology, r.value});
  }
  return out;
}

std::vector<TendencyCell> tendency_cells(const std::vector<EvaluationRow>& rows, FeatureKind feature) {
  std::vector<TendencyCell> out;
  for (const auto& r : rows) {
    if (r.feature != feature || r.metric != "tendency") continue;
    out.push_back({r.dataset, r.topic, r.method, r.value});
  }
  return out;
}

std::size_t write_distributions_csv(const std::vector<ClassDistribution>& distributions,
                                    std::ostream& out) {
  out << csv_row({"dataset", "topic", "feature", "ideology", "source", "method", "class", "raw_p",
                  "normalized_p"});
  std::size_t n = 0;
  for (const auto& d : distributions) {
    for (std::size_t i = 0; i < d.classes.size(); ++i) {
      out << csv_row({d.cell.dataset, d.cell.topic, std::string(to_string(d.feature)),
                      std::string(to_string(d.cell.ideology)), std::string(to_string(d.cell.source)),
                      d.cell.method, d.classes[i], format_shortest(d.raw[i]),
                      format_shortest(d.normalized[i])});
      ++n;
    }
  }
  return n;
}

std::size_t export_distributions(const std::vector<ClassDistribution>& distributions,
                                 const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  const std::size_t n = write_distributions_csv(distributions, out);
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
  return n;
}

namespace {

std::string feature_title(FeatureKind f) {
  switch (f) {
    case FeatureKind::stance:
      return "stance";
    case FeatureKind::emotion:
      return "emotion";
    case FeatureKind::moral_foundation:
      return "moral foundation";
  }
  return "";
}

}  // namespace

ReportBundle build_report(const std::vector<EvaluationRow>& rows,
                          const std::vector<std::string>& methods,
                          const std::string& generated_at, const std::string& config_hash) {
  if (rows.empty()) throw ValidationError("no results to report");
  ReportBundle bundle;
  bundle.json["generated_at"] = generated_at;
  bundle.json["config_hash"] = config_hash;
  bundle.json["tables"] = nlohmann::ordered_json::array();

  for (FeatureKind f : kFeatures) {
    const auto kld = kld_cells(rows, f);
    const auto tendency = tendency_cells(rows, f);
    const std::string name(to_string(f));
    if (!kld.empty()) {
      TableOptions opts{"KL divergence, " + feature_title(f) + " (lower is better)", methods, 2};
      auto table = render_kld_table(kld, opts);
      table.json["feature"] = name;
      bundle.json["tables"].push_back(table.json);
      bundle.markdown += table.markdown + "\n";
      bundle.tables.emplace_back("kld_" + name, std::move(table));
    }
    if (!tendency.empty()) {
      TableOptions opts{"Class tendency accuracy, " + feature_title(f) + " (higher is better)", methods, 2};
      auto table = render_tendency_table(tendency, opts);
      table.json["feature"] = name;
      bundle.json["tables"].push_back(table.json);
      bundle.markdown += table.markdown + "\n";
      bundle.tables.emplace_back("tendency_" + name, std::move(table));
    }
  }
  return bundle;
}

}  // namespace partisan
