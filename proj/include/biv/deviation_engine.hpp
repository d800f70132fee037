#pragma once

#include <set>
#include <string>
#include <vector>

#include "biv/actual_track.hpp"
#include "biv/declared_track.hpp"
#include "biv/skill_loader.hpp"
#include "biv/taxonomy.hpp"

namespace biv {

// The per-package evidence tuple: declared set, actual set, flows, compound
// flags. Everything downstream (deviations, intents, veto) reads from this.
struct EvidenceTuple {
  std::set<CapabilityId> declared;
  std::set<CapabilityId> actual;
  std::vector<FlowChain> flows;
  CompoundFlags compound;
};

// The lineage flag is refined here: a file -> file/network pipeline only
// counts once the file-read source is confirmed undeclared.
EvidenceTuple build_tuple(const DeclaredResult& declared, const ActualResult& actual);

std::set<CapabilityId> under_specified(const EvidenceTuple& tuple);  // U = A \ D
std::set<CapabilityId> over_specified(const EvidenceTuple& tuple);   // O = D \ A

enum class DeviationKind { UnderSpecified, OverSpecified };
enum class EvidenceTier { High, Medium, Low };

std::string_view format_deviation_kind(DeviationKind kind);
std::string_view format_evidence_tier(EvidenceTier tier);

struct Deviation {
  CapabilityId capability;
  DeviationKind kind;
  SeverityTier tier;       // risk tier of the capability itself
  EvidenceTier evidence;
  std::string rationale;
  std::vector<Site> sites;  // under-specified: where the capability was seen
};

// Deterministic order: under-specified first, then over-specified, each in
// taxonomy order.
std::vector<Deviation> compute_deviations(const EvidenceTuple& tuple,
                                          const DeclaredResult& declared,
                                          const ActualResult& actual,
                                          const SkillPackage& pkg);

}  // namespace biv
