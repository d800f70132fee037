#include "biv/deviation_engine.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>

namespace biv {
namespace {

// Looks up the (possibly lossy) source document a detection points into.
const SourceDocument* doc_for(const SkillPackage& pkg, const std::string& file) {
  for (const auto& d : pkg.metadata_docs)
    if (d.path == file) return &d;
  for (const auto& d : pkg.code_files)
    if (d.path == file) return &d;
  for (const auto& d : pkg.instruction_docs)
    if (d.path == file) return &d;
  for (const auto& d : pkg.other_files)
    if (d.path == file) return &d;
  return nullptr;
}

EvidenceTier under_tier(CapabilityId cap, const ActualResult& actual,
                        const SkillPackage& pkg) {
  bool has_claim = false;
  bool claim_lossy_only = true;
  for (const auto& det : actual.detections) {
    if (det.capability != cap) continue;
    if (det.analyzer != AnalyzerKind::InstructionClaim) return EvidenceTier::High;
    has_claim = true;
    const SourceDocument* doc = doc_for(pkg, det.file);
    if (doc == nullptr || !doc->lossy) claim_lossy_only = false;
  }
  if (has_claim && claim_lossy_only) return EvidenceTier::Low;
  return EvidenceTier::Medium;
}

EvidenceTier over_tier(CapabilityId cap, const DeclaredResult& declared) {
  for (const auto& entry : declared.provenance)
    if (entry.capability == cap && entry.source == DeclarationSource::ManifestField)
      return EvidenceTier::Medium;
  return EvidenceTier::Low;  // free-text claim only
}

std::string under_rationale(CapabilityId cap, const ActualResult& actual) {
  for (const auto& det : actual.detections) {
    if (det.capability != cap) continue;
    std::ostringstream os;
    os << "undeclared; detected by " << format_analyzer(det.analyzer) << " at "
       << det.file << ":" << det.line;
    if (det.occurrence_count > 1) os << " (+" << det.occurrence_count - 1 << " more)";
    return os.str();
  }
  return "undeclared; detected";
}

std::string over_rationale(CapabilityId cap, const DeclaredResult& declared) {
  for (const auto& entry : declared.provenance) {
    if (entry.capability != cap) continue;
    std::ostringstream os;
    os << "declared at " << entry.field_path << " but never detected in code or docs";
    return os.str();
  }
  return "declared but never detected";
}

std::vector<Site> under_sites(CapabilityId cap, const ActualResult& actual) {
  std::vector<Site> sites;
  for (const auto& det : actual.detections) {
    if (det.capability != cap) continue;
    for (const auto& s : det.sites)
      if (std::find(sites.begin(), sites.end(), s) == sites.end()) sites.push_back(s);
  }
  return sites;
}

}  // namespace

EvidenceTuple build_tuple(const DeclaredResult& declared, const ActualResult& actual) {
  EvidenceTuple tuple;
  tuple.declared = declared.set;
  tuple.actual = actual.set;
  tuple.flows = actual.chains;
  tuple.compound = actual.compound;
  // Lineage refinement: the flag stands only if some lineage-shaped chain
  // reads from a capability the author never declared.
  bool lineage = false;
  for (const auto& c : tuple.flows) {
    if (!chain_is_lineage(c)) continue;
    if (tuple.declared.count(c.source) == 0) {
      lineage = true;
      break;
    }
  }
  tuple.compound.lineage = lineage;
  return tuple;
}

std::set<CapabilityId> under_specified(const EvidenceTuple& tuple) {
  std::set<CapabilityId> out;
  std::set_difference(tuple.actual.begin(), tuple.actual.end(), tuple.declared.begin(),
                      tuple.declared.end(), std::inserter(out, out.end()));
  return out;
}

std::set<CapabilityId> over_specified(const EvidenceTuple& tuple) {
  std::set<CapabilityId> out;
  std::set_difference(tuple.declared.begin(), tuple.declared.end(), tuple.actual.begin(),
                      tuple.actual.end(), std::inserter(out, out.end()));
  return out;
}

std::string_view format_deviation_kind(DeviationKind kind) {
  switch (kind) {
    case DeviationKind::UnderSpecified: return "under-specified";
    case DeviationKind::OverSpecified: return "over-specified";
  }
  return "unknown";
}

std::string_view format_evidence_tier(EvidenceTier tier) {
  switch (tier) {
    case EvidenceTier::High: return "HIGH";
    case EvidenceTier::Medium: return "MEDIUM";
    case EvidenceTier::Low: return "LOW";
  }
  return "unknown";
}

std::vector<Deviation> compute_deviations(const EvidenceTuple& tuple,
                                          const DeclaredResult& declared,
                                          const ActualResult& actual,
                                          const SkillPackage& pkg) {
  std::vector<Deviation> out;
  for (CapabilityId cap : under_specified(tuple)) {
    Deviation dev;
    dev.capability = cap;
    dev.kind = DeviationKind::UnderSpecified;
    dev.tier = severity_of(cap);
    dev.evidence = under_tier(cap, actual, pkg);
    dev.rationale = under_rationale(cap, actual);
    dev.sites = under_sites(cap, actual);
    out.push_back(std::move(dev));
  }
  for (CapabilityId cap : over_specified(tuple)) {
    Deviation dev;
    dev.capability = cap;
    dev.kind = DeviationKind::OverSpecified;
    dev.tier = severity_of(cap);
    dev.evidence = over_tier(cap, declared);
    dev.rationale = over_rationale(cap, declared);
    out.push_back(std::move(dev));
  }
  return out;
}

}  // namespace biv
