#include "biv/report.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "biv/analyzers.hpp"
#include "biv/patterns.hpp"
#include "biv/version.hpp"

namespace biv {
namespace {

nlohmann::ordered_json caps_json(const std::set<CapabilityId>& caps) {
  auto arr = nlohmann::ordered_json::array();
  for (CapabilityId cap : caps) arr.push_back(std::string(format_capability(cap)));
  return arr;
}

nlohmann::ordered_json sites_json(const std::vector<Site>& sites) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : sites) {
    nlohmann::ordered_json site;
    site["file"] = s.file;
    site["line"] = s.line;
    arr.push_back(std::move(site));
  }
  return arr;
}

std::string_view source_class_name(SourceClass cls) {
  switch (cls) {
    case SourceClass::Environment: return "environment";
    case SourceClass::FileRead: return "file-read";
    case SourceClass::NetworkResponse: return "network-response";
    case SourceClass::UserInput: return "user-input";
    case SourceClass::CredentialStore: return "credential-store";
  }
  return "unknown";
}

nlohmann::ordered_json chain_json(const FlowChain& chain) {
  nlohmann::ordered_json c;
  c["source"] = std::string(format_capability(chain.source));
  auto transforms = nlohmann::ordered_json::array();
  for (CapabilityId t : chain.transforms) transforms.push_back(std::string(format_capability(t)));
  c["transforms"] = std::move(transforms);
  c["sink"] = std::string(format_capability(chain.sink));
  c["scope"] = std::string(format_scope(chain.scope));
  c["source_class"] = std::string(source_class_name(chain.source_class));
  c["sites"] = sites_json(chain.sites);
  return c;
}

nlohmann::ordered_json versions_json() {
  nlohmann::ordered_json v;
  v["tool"] = std::string(kToolVersion);
  v["schema"] = std::string(kReportSchemaVersion);
  v["taxonomy"] = std::string(kTaxonomyVersion);
  v["taxonomy_hash"] = taxonomy_version_hash();
  v["patterns"] = std::string(kPatternsVersion);
  v["rules"] = std::string(kRulesVersion);
  v["motifs"] = std::string(kMotifsVersion);
  return v;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

nlohmann::ordered_json report_json(const SkillScan& scan) {
  nlohmann::ordered_json doc;
  doc["schema"] = std::string(kReportSchemaVersion);
  doc["skill"] = scan.pkg.id;
  doc["content_hash"] = scan.content_hash;
  doc["provider"] = scan.provider_mode;
  doc["versions"] = versions_json();

  doc["declared"] = caps_json(scan.tuple.declared);
  auto provenance = nlohmann::ordered_json::array();
  for (const auto& entry : scan.declared.provenance) {
    nlohmann::ordered_json p;
    p["capability"] = std::string(format_capability(entry.capability));
    p["source"] = entry.source == DeclarationSource::ManifestField ? "manifest-field"
                                                                   : "semantic-claim";
    p["field_path"] = entry.field_path;
    p["confidence"] = entry.confidence == DeclarationConfidence::Deterministic
                          ? "deterministic"
                          : "filtered-claim";
    provenance.push_back(std::move(p));
  }
  doc["declared_provenance"] = std::move(provenance);

  doc["actual"] = caps_json(scan.tuple.actual);
  auto detections = nlohmann::ordered_json::array();
  for (const auto& det : scan.actual.detections) {
    nlohmann::ordered_json d;
    d["capability"] = std::string(format_capability(det.capability));
    d["file"] = det.file;
    d["line"] = det.line;
    d["evidence"] = det.evidence;
    d["analyzer"] = std::string(format_analyzer(det.analyzer));
    d["occurrences"] = det.occurrence_count;
    d["sites"] = sites_json(det.sites);
    detections.push_back(std::move(d));
  }
  doc["detections"] = std::move(detections);

  auto flows = nlohmann::ordered_json::array();
  for (const auto& chain : scan.tuple.flows) flows.push_back(chain_json(chain));
  doc["flows"] = std::move(flows);

  nlohmann::ordered_json compound;
  compound["exfiltration_chain"] = scan.tuple.compound.exfil;
  compound["rce_chain"] = scan.tuple.compound.rce;
  compound["code_obfuscation"] = scan.tuple.compound.obfuscation;
  compound["data_lineage_violation"] = scan.tuple.compound.lineage;
  compound["bits"] = scan.tuple.compound.bits();
  doc["compound"] = std::move(compound);

  auto deviations = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < scan.deviations.size(); ++i) {
    const Deviation& dev = scan.deviations[i];
    nlohmann::ordered_json d;
    d["capability"] = std::string(format_capability(dev.capability));
    d["direction"] = std::string(format_deviation_kind(dev.kind));
    d["risk_tier"] = std::string(format_tier(dev.tier));
    d["evidence_tier"] = std::string(format_evidence_tier(dev.evidence));
    if (i < scan.intents.size()) {
      d["intent"] = std::string(intent_id(scan.intents[i].leaf));
      d["intent_name"] = std::string(intent_name(scan.intents[i].leaf));
      d["rule"] = scan.intents[i].rule;
    }
    d["rationale"] = dev.rationale;
    d["sites"] = sites_json(dev.sites);
    deviations.push_back(std::move(d));
  }
  doc["deviations"] = std::move(deviations);

  doc["motifs"] = scan.motifs;
  doc["triage"] = std::string(format_triage(scan.triage));

  nlohmann::ordered_json verdict;
  verdict["label"] = std::string(format_judge_label(scan.verdict.label));
  verdict["veto_fired"] = scan.verdict.veto_fired;
  verdict["judge_label"] = std::string(format_judge_label(scan.verdict.judge_label));
  verdict["judge_confidence"] = scan.verdict.judge_confidence;
  verdict["judge"] = scan.verdict.judge_name;
  verdict["judge_degraded"] = scan.verdict.judge_degraded;
  verdict["path"] = std::string(format_decision_path(scan.verdict.path));
  verdict["decision_path"] = scan.verdict.decision_path;
  doc["verdict"] = std::move(verdict);

  doc["warnings"] = scan.warnings;
  return doc;
}

nlohmann::ordered_json corpus_report_json(const std::vector<SkillScan>& scans) {
  nlohmann::ordered_json doc;
  doc["schema"] = std::string(kReportSchemaVersion);
  doc["versions"] = versions_json();
  doc["skills"] = scans.size();
  auto reports = nlohmann::ordered_json::array();
  for (const auto& scan : scans) reports.push_back(report_json(scan));
  doc["reports"] = std::move(reports);
  return doc;
}

nlohmann::ordered_json sidecar_envelope(const std::filesystem::path& root,
                                        const std::vector<std::string>& argv_tail) {
  nlohmann::ordered_json env;
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  env["generated_at"] = buf;
  env["scan_root"] = std::filesystem::absolute(root).string();
  env["argv"] = argv_tail;
  return env;
}

std::string render_summary(const SkillScan& scan) {
  std::ostringstream os;
  os << scan.pkg.id << ": " << format_judge_label(scan.verdict.label) << " ("
     << format_decision_path(scan.verdict.path) << "), triage "
     << format_triage(scan.triage) << "\n";
  os << "  declared " << scan.tuple.declared.size() << ", actual "
     << scan.tuple.actual.size() << ", deviations " << scan.deviations.size()
     << ", flows " << scan.tuple.flows.size() << ", compound bits "
     << scan.tuple.compound.bits() << "\n";
  for (std::size_t i = 0; i < scan.deviations.size(); ++i) {
    const Deviation& dev = scan.deviations[i];
    os << "  " << format_deviation_kind(dev.kind) << " "
       << format_capability(dev.capability) << " [" << format_tier(dev.tier) << "/"
       << format_evidence_tier(dev.evidence) << "]";
    if (i < scan.intents.size())
      os << " -> " << intent_id(scan.intents[i].leaf) << " "
         << intent_name(scan.intents[i].leaf);
    os << "\n";
  }
  for (const auto& motif : scan.motifs) os << "  motif: " << motif << "\n";
  return os.str();
}

std::string explain_text(const SkillScan& scan) {
  std::ostringstream os;
  os << "skill: " << scan.pkg.id << "\n";
  os << "verdict: " << format_judge_label(scan.verdict.label) << " via "
     << format_decision_path(scan.verdict.path) << "\n";
  os << "veto: " << (scan.verdict.veto_fired ? "fired" : "not fired") << "; judge("
     << scan.verdict.judge_name << ") = " << format_judge_label(scan.verdict.judge_label)
     << "\n";
  os << "decision path:\n";
  for (const auto& step : scan.verdict.decision_path) os << "  - " << step << "\n";
  if (!scan.tuple.flows.empty()) {
    os << "flows:\n";
    for (const auto& chain : scan.tuple.flows) os << "  - " << describe_chain(chain) << "\n";
  }
  if (!scan.warnings.empty()) {
    os << "warnings:\n";
    for (const auto& w : scan.warnings) os << "  - " << w << "\n";
  }
  return os.str();
}

BenchmarkMetrics compute_metrics(std::size_t tp, std::size_t fp, std::size_t fn,
                                 std::size_t tn) {
  BenchmarkMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  m.recall_degenerate = tp + fn == 0;
  m.precision_degenerate = tp + fp == 0;
  m.fpr_degenerate = fp + tn == 0;
  m.recall = ratio(tp, tp + fn);
  m.precision = ratio(tp, tp + fp);
  m.fpr = ratio(fp, fp + tn);
  m.f1_degenerate = m.precision + m.recall == 0.0;
  m.f1 = m.f1_degenerate ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

std::vector<LabelEntry> parse_labels_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open labels file: " + file.string());
  std::vector<LabelEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab1 = line.find('\t');
    if (tab1 == std::string::npos)
      throw std::runtime_error("labels file " + file.string() + ":" +
                               std::to_string(lineno) + ": expected skill_id<TAB>label");
    LabelEntry entry;
    entry.skill_id = line.substr(0, tab1);
    std::string label = line.substr(tab1 + 1);
    const auto tab2 = label.find('\t');
    if (tab2 != std::string::npos) {
      entry.source = label.substr(tab2 + 1);
      label = label.substr(0, tab2);
    }
    if (label == "malicious" || label == "Mal" || label == "mal")
      entry.malicious = true;
    else if (label == "benign" || label == "Safe" || label == "safe")
      entry.malicious = false;
    else
      throw std::runtime_error("labels file " + file.string() + ":" +
                               std::to_string(lineno) + ": unknown label \"" + label + "\"");
    entries.push_back(std::move(entry));
  }
  return entries;
}

UnlabeledSkillsError::UnlabeledSkillsError(const std::vector<std::string>& ids)
    : std::runtime_error([&] {
        std::string msg = "unlabeled skills in corpus:";
        for (const auto& id : ids) msg += " " + id;
        return msg;
      }()),
      skill_ids(ids) {}

BenchmarkMetrics bench_metrics(const std::vector<SkillScan>& scans,
                               const std::vector<LabelEntry>& labels,
                               std::map<std::string, BenchmarkMetrics>* by_source) {
  std::map<std::string, const LabelEntry*> index;
  for (const auto& entry : labels) index[entry.skill_id] = &entry;

  std::vector<std::string> unlabeled;
  for (const auto& scan : scans)
    if (index.find(scan.pkg.id) == index.end()) unlabeled.push_back(scan.pkg.id);
  if (!unlabeled.empty()) throw UnlabeledSkillsError(unlabeled);

  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  };
  Counts total;
  std::map<std::string, Counts> per_source;
  for (const auto& scan : scans) {
    const LabelEntry& entry = *index[scan.pkg.id];
    const bool predicted = scan.verdict.label == JudgeLabel::Mal;
    Counts* buckets[2] = {&total, nullptr};
    if (!entry.source.empty()) buckets[1] = &per_source[entry.source];
    for (Counts* c : buckets) {
      if (c == nullptr) continue;
      if (entry.malicious && predicted) ++c->tp;
      else if (entry.malicious) ++c->fn;
      else if (predicted) ++c->fp;
      else ++c->tn;
    }
  }
  if (by_source != nullptr) {
    by_source->clear();
    for (const auto& [source, c] : per_source)
      (*by_source)[source] = compute_metrics(c.tp, c.fp, c.fn, c.tn);
  }
  return compute_metrics(total.tp, total.fp, total.fn, total.tn);
}

nlohmann::ordered_json metrics_json(const BenchmarkMetrics& m) {
  nlohmann::ordered_json doc;
  doc["tp"] = m.tp;
  doc["fp"] = m.fp;
  doc["fn"] = m.fn;
  doc["tn"] = m.tn;
  doc["recall"] = m.recall;
  doc["precision"] = m.precision;
  doc["f1"] = m.f1;
  doc["fpr"] = m.fpr;
  auto degenerate = nlohmann::ordered_json::array();
  if (m.recall_degenerate) degenerate.push_back("recall");
  if (m.precision_degenerate) degenerate.push_back("precision");
  if (m.f1_degenerate) degenerate.push_back("f1");
  if (m.fpr_degenerate) degenerate.push_back("fpr");
  doc["degenerate"] = std::move(degenerate);
  return doc;
}

}  // namespace biv
