#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "biv/scanner.hpp"
#include <nlohmann/json.hpp>

namespace biv {

// Deterministic report body: no timestamps, no absolute paths. Identical
// package bytes + config give byte-identical serializations.
nlohmann::ordered_json report_json(const SkillScan& scan);

// Aggregate document for a corpus run (reports sorted by skill directory).
nlohmann::ordered_json corpus_report_json(const std::vector<SkillScan>& scans);

// Host/time/invocation facts live outside the deterministic body.
nlohmann::ordered_json sidecar_envelope(const std::filesystem::path& root,
                                        const std::vector<std::string>& argv_tail);

// Human-readable one-skill summary (scan --format summary).
std::string render_summary(const SkillScan& scan);

// Pretty-printed decision path (explain command).
std::string explain_text(const SkillScan& scan);

struct BenchmarkMetrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double recall = 0.0, precision = 0.0, f1 = 0.0, fpr = 0.0;
  bool recall_degenerate = false;     // tp + fn = 0
  bool precision_degenerate = false;  // tp + fp = 0
  bool f1_degenerate = false;         // precision + recall = 0
  bool fpr_degenerate = false;        // fp + tn = 0
};

BenchmarkMetrics compute_metrics(std::size_t tp, std::size_t fp, std::size_t fn,
                                 std::size_t tn);

struct LabelEntry {
  std::string skill_id;
  bool malicious = false;
  std::string source;  // optional third column
};

// One record per line: "skill_id<TAB>label[<TAB>source]"; label is
// malicious|benign (Mal|Safe accepted). Throws std::runtime_error on a
// malformed line.
std::vector<LabelEntry> parse_labels_file(const std::filesystem::path& file);

struct UnlabeledSkillsError : std::runtime_error {
  explicit UnlabeledSkillsError(const std::vector<std::string>& ids);
  std::vector<std::string> skill_ids;
};

// Metrics over final verdicts; per-source breakdown filled when labels carry
// source tags. Throws UnlabeledSkillsError when a scanned skill has no label.
BenchmarkMetrics bench_metrics(const std::vector<SkillScan>& scans,
                               const std::vector<LabelEntry>& labels,
                               std::map<std::string, BenchmarkMetrics>* by_source = nullptr);

nlohmann::ordered_json metrics_json(const BenchmarkMetrics& metrics);

}  // namespace biv
