#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "biv/actual_track.hpp"
#include "biv/deviation_engine.hpp"
#include "biv/taxonomy.hpp"

namespace biv {

// 36 leaves across 8 branches. B2 was reserved during taxonomy design and
// never assigned; it stays a hole in the ID sequence, not an enum value.
enum class IntentLeaf : std::uint8_t {
  A1, A2, A3, A4, A5,
  B1, B3, B4, B5,
  C1, C2, C3, C4, C5, C6,
  D1, D2, D3, D4,
  E1, E2, E3,
  F1, F2, F3, F4, F5,
  G1, G2, G3, G4, G5, G6, G7,
  H1, H2,
};

inline constexpr std::size_t kIntentLeafCount = 36;

std::string_view intent_id(IntentLeaf leaf);    // "A1"
std::string_view intent_name(IntentLeaf leaf);  // "Credential Theft"
char intent_branch(IntentLeaf leaf);            // 'A'..'H'
bool is_adversarial(IntentLeaf leaf);           // branches A-F
IntentLeaf parse_intent(std::string_view id);   // throws std::invalid_argument
std::vector<IntentLeaf> all_intents();

// The six structural signals a rule may consult, all populated per deviation.
enum class SourceModality { Code, Instruction, Metadata };

struct SignalVector {
  DeviationKind direction;
  bool has_flow_chain = false;   // the capability sits on some chain
  bool compound_bit = false;     // any skill-level compound flag
  SourceModality source_modality = SourceModality::Code;
  EvidenceTier evidence_confidence = EvidenceTier::Low;
  SeverityTier risk_tier = SeverityTier::Medium;
};

SignalVector build_signals(const Deviation& dev, const EvidenceTuple& tuple,
                           const ActualResult& actual);

// Skill-level inputs shared by every deviation's classification.
struct IntentContext {
  const EvidenceTuple* tuple = nullptr;
  std::set<CapabilityId> under;  // U(s)
  // Lowercased evidence text per capability, plus all instruction text, for
  // the keyword rules.
  std::map<CapabilityId, std::string> cap_evidence;
  std::string instruction_text;
};

IntentContext build_intent_context(const EvidenceTuple& tuple, const ActualResult& actual,
                                   const SkillPackage& pkg);

struct RuleInput {
  const Deviation* dev = nullptr;
  SignalVector signals;
  const IntentContext* ctx = nullptr;
};

inline constexpr int kRuleCount = 15;

// Single-rule predicate, exposed so the first-match contract is testable
// against a naive all-rules reference.
bool rule_matches(int rule, const RuleInput& input);
// Leaf a rule emits for this input (rule 14 picks G1/G7 by risk tier).
IntentLeaf rule_intent(int rule, const RuleInput& input);

struct IntentAssignment {
  IntentLeaf leaf = IntentLeaf::H2;
  int rule = 0;  // 1..15; 0 = no rule matched (Unresolved -> H2 fallback)
};

IntentAssignment classify_deviation(const Deviation& dev, const IntentContext& ctx);
std::vector<IntentAssignment> classify_all(const std::vector<Deviation>& devs,
                                           const IntentContext& ctx);

// Kill-chain motifs: every requirement must hold; a requirement holds when
// any of its leaves is present (or, if flagged, the exfil compound bit is).
struct MotifRequirement {
  std::vector<IntentLeaf> any_of;
  bool or_exfil_flag = false;
};

struct MotifDef {
  std::string name;
  std::vector<MotifRequirement> all_of;
};

const std::vector<MotifDef>& motif_table();
void extend_motifs(const MotifDef& def);  // fills a config extension slot
void reset_motifs();

std::vector<std::string> match_motifs(const std::vector<IntentAssignment>& intents,
                                      const EvidenceTuple& tuple);

enum class TriageTier { MandatoryReview, ContextualReview, DocumentationUpdate, Clean };

std::string_view format_triage(TriageTier tier);

TriageTier rollup_triage(const std::vector<Deviation>& devs,
                         const std::vector<IntentAssignment>& intents,
                         const std::vector<std::string>& motifs);

inline constexpr std::string_view kRulesVersion = "intent-rules/v1";
inline constexpr std::string_view kMotifsVersion = "motifs/v1";

std::string rules_manifest_json();
std::string motifs_manifest_json();

}  // namespace biv
