#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "partisan/annotate.hpp"
#include "partisan/cli.hpp"
#include "partisan/corpus.hpp"
#include "partisan/errors.hpp"
#include "partisan/instruction_builder.hpp"
#include "partisan/issue_tagger.hpp"
#include "partisan/metrics.hpp"
#include "partisan/presets.hpp"
#include "partisan/text.hpp"
#include "partisan/version.hpp"

namespace py = pybind11;
using namespace partisan;

namespace {

Corpus corpus_from_texts(const std::vector<std::string>& texts, const std::string& prefix) {
  Corpus c;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    TextInstance t;
    t.id = prefix + std::to_string(i);
    t.text = texts[i];
    c.instances.push_back(std::move(t));
  }
  return c;
}

py::dict distribution_dict(const ClassDistribution& d) {
  py::dict out;
  out["feature"] = std::string(to_string(d.feature));
  out["classes"] = d.classes;
  out["counts"] = d.counts;
  out["raw"] = d.raw;
  out["normalized"] = d.normalized;
  out["n_instances"] = d.n_instances;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Partisan alignment metrics and pipeline helpers";
  m.attr("__version__") = std::string(kVersion);
  m.attr("STANCE_INSTRUCTION") = std::string(kStanceInstruction);

  static py::exception<Error> base(m, "PartisanError", PyExc_RuntimeError);
  static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::set_error(validation, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  m.def("class_names", [](const std::string& feature, bool mf_collapse) {
        return ClassRegistry(mf_collapse).get(parse_feature(feature)).classes;
      },
      py::arg("feature"), py::arg("mf_collapse") = false);

  m.def("tokenize", [](const std::string& text) { return tokenize(text); }, py::arg("text"));

  m.def("class_distribution",
        [](const std::string& feature, const std::vector<std::vector<std::string>>& labels, bool mf_collapse) {
          const ClassRegistry reg(mf_collapse);
          const FeatureKind f = parse_feature(feature);
          std::vector<std::vector<std::string>> canonical;
          canonical.reserve(labels.size());
          for (const auto& l : labels) canonical.push_back(reg.canonical_labels(f, l));
          return distribution_dict(distribution_from_labels(reg.get(f), canonical));
        },
        py::arg("feature"), py::arg("labels"), py::arg("mf_collapse") = false,
        "Raw and normalized class distribution from one label list per instance.");

  m.def("kl_divergence",
        [](const std::vector<double>& p, const std::vector<double>& q, double epsilon, bool bits) {
          return kl_divergence(p, q, {epsilon, bits ? LogBase::two : LogBase::natural});
        },
        py::arg("p"), py::arg("q"), py::arg("epsilon") = 1e-6, py::arg("bits") = false,
        "D(p || q) over normalized distributions with additive smoothing.");

  m.def("tendency_accuracy",
        [](const std::vector<double>& p_lib, const std::vector<double>& p_con, const std::vector<double>& q_lib,
           const std::vector<double>& q_con, double tie_tolerance) {
          const auto r = tendency_accuracy(p_lib, p_con, q_lib, q_con, tie_tolerance);
          py::dict out;
          out["per_class"] = r.per_class;
          out["overall"] = r.overall;
          return out;
        },
        py::arg("p_lib"), py::arg("p_con"), py::arg("q_lib"), py::arg("q_con"), py::arg("tie_tolerance") = 0.0,
        "Real-world vectors p, model vectors q, all raw.");

  m.def("extract_distinctive_terms",
        [](const std::vector<std::string>& foreground, const std::vector<std::string>& background, int max_ngram,
           std::size_t top_k, double prior_strength) {
          DistinctiveTermOptions opts{max_ngram, top_k, prior_strength};
          std::vector<py::tuple> out;
          for (const auto& t : extract_distinctive_terms(corpus_from_texts(foreground, "f"),
                                                         corpus_from_texts(background, "b"), opts)) {
            out.push_back(py::make_tuple(t.term, t.zeta, t.count_fg, t.count_bg));
          }
          return out;
        },
        py::arg("foreground"), py::arg("background"), py::arg("max_ngram") = 1, py::arg("top_k") = 50,
        py::arg("prior_strength") = 1.0, "(term, zeta, count_fg, count_bg) by descending zeta.");

  m.def("render_stance_prompt",
        [](const std::string& statement, const std::string& target) {
          return render_stance_prompt({statement, target});
        },
        py::arg("statement"), py::arg("target"));

  m.def("parse_stance_response", [](const std::string& raw) { return parse_stance_response(raw); },
        py::arg("raw"));

  m.def("issue_presets", [](const std::string& group) {
        std::vector<py::dict> out;
        for (const auto& p : issue_presets(group)) {
          py::dict d;
          d["issue"] = p.issue;
          d["generation_framing"] = p.generation_framing;
          d["stance_target"] = p.stance_target;
          out.push_back(d);
        }
        return out;
      },
      py::arg("group"));

  m.def("build_probe_prompts",
        [](const std::string& group, int per_issue, int repeats, std::uint64_t seed) {
          std::vector<py::dict> out;
          for (const auto& p : build_probe_prompts(issue_presets(group), {}, {per_issue, repeats}, seed)) {
            py::dict d;
            d["instruction"] = p.example.instruction;
            d["ideology"] = std::string(to_string(p.example.ideology));
            d["issue"] = p.issue;
            d["repeat"] = p.repeat;
            out.push_back(d);
          }
          return out;
        },
        py::arg("group"), py::arg("per_issue") = 100, py::arg("repeats") = 10, py::arg("seed"));

  m.def("load_corpus_lines", [](const std::string& path) {
        std::vector<std::string> out;
        for (const auto& t : load_corpus(path).instances) out.push_back(instance_to_json(t).dump());
        return out;
      },
      py::arg("path"));

  m.def("run_cli",
        [](std::vector<std::string> args) {
          args.insert(args.begin(), "partisan");
          std::ostringstream out, err;
          int code;
          {
            py::gil_scoped_release release;
            code = cli::run(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs one CLI command in-process; returns (exit_code, stdout, stderr).");
}
