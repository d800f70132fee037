#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "biv/semantic_provider.hpp"
#include "biv/skill_loader.hpp"
#include "biv/taxonomy.hpp"

namespace biv {

enum class AnalyzerKind { PythonAst, JstsRegex, ShellLiteral, InstructionClaim };

std::string_view format_analyzer(AnalyzerKind k);

struct Site {
  std::string file;
  std::size_t line = 1;

  friend bool operator==(const Site& a, const Site& b) {
    return a.file == b.file && a.line == b.line;
  }
  friend bool operator<(const Site& a, const Site& b) {
    return a.file != b.file ? a.file < b.file : a.line < b.line;
  }
};

struct Detection {
  CapabilityId capability;
  std::string file;
  std::size_t line = 1;      // first site
  std::string evidence;      // snippet contained in the line at file:line
  AnalyzerKind analyzer = AnalyzerKind::PythonAst;
  std::size_t occurrence_count = 1;
  std::vector<Site> sites;   // every site, aggregation keeps them all
};

enum class ChainScope { IntraProcedural, InterProcedural, IntraFileCoOccurrence };

std::string_view format_scope(ChainScope s);

// Analyzer-internal classification of what seeded a chain. UserInput maps to
// read-project in the public capability (the taxonomy stays fixed at 29) but
// still counts as a sensitive source for the exfiltration flag.
enum class SourceClass { Environment, FileRead, NetworkResponse, UserInput, CredentialStore };

struct FlowChain {
  CapabilityId source;
  std::vector<CapabilityId> transforms;
  CapabilityId sink;
  std::vector<Site> sites;  // one per hop: source, each transform, sink
  ChainScope scope = ChainScope::IntraProcedural;
  SourceClass source_class = SourceClass::FileRead;

  friend bool operator==(const FlowChain& a, const FlowChain& b) {
    return a.source == b.source && a.transforms == b.transforms && a.sink == b.sink &&
           a.sites == b.sites && a.scope == b.scope && a.source_class == b.source_class;
  }
};

struct CompoundFlags {
  bool exfil = false;
  bool rce = false;
  bool obfuscation = false;
  bool lineage = false;

  bool any() const { return exfil || rce || obfuscation || lineage; }
  unsigned bits() const {
    return (exfil ? 1u : 0u) | (rce ? 2u : 0u) | (obfuscation ? 4u : 0u) | (lineage ? 8u : 0u);
  }
  friend bool operator==(const CompoundFlags& a, const CompoundFlags& b) {
    return a.bits() == b.bits();
  }
};

struct AnalyzerOutput {
  std::vector<Detection> detections;  // one per matched site, pre-aggregation
  std::vector<FlowChain> chains;
  std::vector<std::string> warnings;
};

// Capability families used by chain and compound logic.
bool is_network_send(CapabilityId cap);
bool is_exec_sink(CapabilityId cap);
bool is_file_read(CapabilityId cap);
bool is_file_write(CapabilityId cap);
bool is_sensitive_source(CapabilityId cap);

// Per-chain compound shapes. A chain is lineage-shaped only when no other
// compound shape claims it.
bool chain_is_exfil(const FlowChain& chain);
bool chain_is_rce(const FlowChain& chain);
bool chain_is_obfuscation(const FlowChain& chain);
bool chain_is_lineage(const FlowChain& chain);

// Merges raw per-site detections by (capability, file, analyzer), retaining
// all sites and counting occurrences.
std::vector<Detection> aggregate_detections(std::vector<Detection> raw);

CompoundFlags detect_compound(const std::vector<FlowChain>& chains,
                              const std::vector<Detection>& detections);

struct ActualResult {
  std::set<CapabilityId> set;  // A(s)
  std::vector<Detection> detections;
  std::vector<FlowChain> chains;
  CompoundFlags compound;
  std::vector<std::string> warnings;
  bool provider_degraded = false;
};

// Deterministic analyzers over C plus filtered instruction claims over I.
// Flows and compound flags come from the deterministic analyzers only.
ActualResult actual_set(const SkillPackage& pkg, SemanticProvider& provider,
                        bool parallel_files = false);

}  // namespace biv
