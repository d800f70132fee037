#include "biv/intent_engine.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "biv/patterns.hpp"
#include "biv/text.hpp"
#include <nlohmann/json.hpp>

namespace biv {
namespace {

struct LeafRow {
  IntentLeaf leaf;
  std::string_view id;
  std::string_view name;
};

constexpr std::array<LeafRow, kIntentLeafCount> kLeafTable{{
    {IntentLeaf::A1, "A1", "Credential Theft"},
    {IntentLeaf::A2, "A2", "Data Exfiltration"},
    {IntentLeaf::A3, "A3", "Surveillance"},
    {IntentLeaf::A4, "A4", "Corporate Espionage"},
    {IntentLeaf::A5, "A5", "Insider Reconnaissance"},
    {IntentLeaf::B1, "B1", "Ad Injection"},
    {IntentLeaf::B3, "B3", "Cryptomining"},
    {IntentLeaf::B4, "B4", "Crypto Theft"},
    {IntentLeaf::B5, "B5", "Resource Hijacking"},
    {IntentLeaf::C1, "C1", "Payload Delivery"},
    {IntentLeaf::C2, "C2", "Persistence"},
    {IntentLeaf::C3, "C3", "C2 Communication"},
    {IntentLeaf::C4, "C4", "Evasion"},
    {IntentLeaf::C5, "C5", "Reconnaissance"},
    {IntentLeaf::C6, "C6", "Staging"},
    {IntentLeaf::D1, "D1", "Phishing Content"},
    {IntentLeaf::D2, "D2", "Misinformation"},
    {IntentLeaf::D3, "D3", "Social Manipulation"},
    {IntentLeaf::D4, "D4", "Impersonation"},
    {IntentLeaf::E1, "E1", "Ransomware"},
    {IntentLeaf::E2, "E2", "Wiper"},
    {IntentLeaf::E3, "E3", "Sabotage"},
    {IntentLeaf::F1, "F1", "Instruction Hijacking"},
    {IntentLeaf::F2, "F2", "Memory Poisoning"},
    {IntentLeaf::F3, "F3", "Session Smuggling"},
    {IntentLeaf::F4, "F4", "Output Manipulation"},
    {IntentLeaf::F5, "F5", "Capability Escalation"},
    {IntentLeaf::G1, "G1", "Over-Engineering"},
    {IntentLeaf::G2, "G2", "Defensive Over-Engineering"},
    {IntentLeaf::G3, "G3", "Incomplete Implementation"},
    {IntentLeaf::G4, "G4", "Legitimate Helper"},
    {IntentLeaf::G5, "G5", "Template Residue"},
    {IntentLeaf::G6, "G6", "Telemetry"},
    {IntentLeaf::G7, "G7", "Documentation Error"},
    {IntentLeaf::H1, "H1", "Context-Dependent"},
    {IntentLeaf::H2, "H2", "Insufficient Evidence"},
}};

const LeafRow& row_of(IntentLeaf leaf) { return kLeafTable[static_cast<std::size_t>(leaf)]; }

bool chain_contains(const FlowChain& chain, CapabilityId cap) {
  if (chain.source == cap || chain.sink == cap) return true;
  return std::find(chain.transforms.begin(), chain.transforms.end(), cap) !=
         chain.transforms.end();
}

bool network_outbound_in(const std::set<CapabilityId>& caps) {
  return caps.count(CapabilityId::NetworkOutboundHttp) != 0 ||
         caps.count(CapabilityId::NetworkOutboundSocket) != 0 ||
         caps.count(CapabilityId::NetworkDownloadExecute) != 0;
}

bool eval_in(const std::set<CapabilityId>& caps) {
  return caps.count(CapabilityId::CodeEval) != 0 ||
         caps.count(CapabilityId::CodeEvalDynamic) != 0;
}

bool encoding_in(const std::set<CapabilityId>& caps) {
  for (CapabilityId cap : caps)
    if (category_of(cap) == CapabilityCategory::Encoding) return true;
  return false;
}

std::size_t agent_signal_count(const std::set<CapabilityId>& under) {
  std::size_t n = 0;
  for (CapabilityId cap : under)
    if (category_of(cap) == CapabilityCategory::InstructionLevel) ++n;
  return n;
}

std::string_view own_evidence(const RuleInput& in) {
  auto it = in.ctx->cap_evidence.find(in.dev->capability);
  return it == in.ctx->cap_evidence.end() ? std::string_view{} : std::string_view{it->second};
}

// Skill-wide keyword scan: every detection's evidence plus instruction text.
bool skill_text_has(const RuleInput& in, const std::vector<std::string>& lexicon) {
  for (const auto& [cap, text] : in.ctx->cap_evidence)
    if (contains_any_keyword(text, lexicon)) return true;
  return contains_any_keyword(in.ctx->instruction_text, lexicon);
}

bool under_spec(const RuleInput& in) {
  return in.dev->kind == DeviationKind::UnderSpecified;
}

bool rule1(const RuleInput& in) {  // Instruction hijacking (>=2 agent signals)
  return under_spec(in) &&
         category_of(in.dev->capability) == CapabilityCategory::InstructionLevel &&
         agent_signal_count(in.ctx->under) >= 2;
}

bool rule2(const RuleInput& in) {  // Dropper pattern (download+write+exec)
  if (!under_spec(in)) return false;
  if (in.dev->capability == CapabilityId::NetworkDownloadExecute) return true;
  for (const auto& c : in.ctx->tuple->flows)
    if (chain_is_rce(c) && chain_contains(c, in.dev->capability)) return true;
  return false;
}

bool rule3(const RuleInput& in) {  // Credential theft motif
  if (!under_spec(in) || in.dev->capability != CapabilityId::CredentialRead) return false;
  return in.ctx->under.count(CapabilityId::FileReadSensitive) != 0 ||
         contains_any_keyword(own_evidence(in), patterns().credential_keywords);
}

bool rule4(const RuleInput& in) {  // Evasion: encoding + code eval
  if (!under_spec(in)) return false;
  const CapabilityId cap = in.dev->capability;
  if (category_of(cap) == CapabilityCategory::Encoding) return eval_in(in.ctx->tuple->actual);
  if (cap == CapabilityId::CodeEval || cap == CapabilityId::CodeEvalDynamic)
    return encoding_in(in.ctx->tuple->actual);
  return false;
}

bool rule5(const RuleInput& in) {  // Ransomware keywords + crypto + write
  if (!under_spec(in)) return false;
  const CapabilityId cap = in.dev->capability;
  const bool cap_fits = cap == CapabilityId::EncodingCrypto || is_file_write(cap) ||
                        cap == CapabilityId::FileDelete || cap == CapabilityId::FileEnumerate;
  if (!cap_fits) return false;
  const auto& actual = in.ctx->tuple->actual;
  return actual.count(CapabilityId::EncodingCrypto) != 0 &&
         (actual.count(CapabilityId::FileWrite) != 0 ||
          actual.count(CapabilityId::FileWriteSensitive) != 0) &&
         skill_text_has(in, patterns().ransomware_keywords);
}

bool rule6(const RuleInput& in) {  // Bulk file deletion (high risk)
  if (!under_spec(in) || in.dev->capability != CapabilityId::FileDelete) return false;
  static const std::vector<std::string> kBulk = {"rm -rf", "rm -r", "rmtree", "glob", "*"};
  return contains_any_keyword(own_evidence(in), kBulk) ||
         in.ctx->tuple->actual.count(CapabilityId::FileEnumerate) != 0 ||
         in.dev->sites.size() >= 3;
}

bool rule7(const RuleInput& in) {  // Cryptominer motif or keywords
  if (!under_spec(in)) return false;
  const CapabilityId cap = in.dev->capability;
  if (!is_exec_sink(cap) && !is_network_send(cap)) return false;
  return skill_text_has(in, patterns().cryptominer_keywords);
}

bool rule8(const RuleInput& in) {  // Credential + network outbound
  return under_spec(in) &&
         category_of(in.dev->capability) == CapabilityCategory::Credential &&
         network_outbound_in(in.ctx->tuple->actual);
}

bool rule9(const RuleInput& in) {  // Sensitive env + network outbound
  return under_spec(in) && in.dev->capability == CapabilityId::EnvAccessSensitive &&
         network_outbound_in(in.ctx->tuple->actual);
}

bool rule10(const RuleInput& in) {  // Data exfiltration chain (high risk)
  if (!under_spec(in)) return false;
  for (const auto& c : in.ctx->tuple->flows) {
    if (!chain_is_exfil(c) || !chain_contains(c, in.dev->capability)) continue;
    if (severity_of(c.source) >= SeverityTier::High || severity_of(c.sink) >= SeverityTier::High)
      return true;
  }
  return false;
}

bool rule11(const RuleInput& in) {  // Bulk env access + network outbound
  return under_spec(in) && in.dev->capability == CapabilityId::EnvAccessBulk &&
         network_outbound_in(in.ctx->tuple->actual);
}

bool rule12(const RuleInput& in) {  // Persistence motif or startup write
  if (!under_spec(in)) return false;
  const CapabilityId cap = in.dev->capability;
  if (is_file_write(cap))
    return contains_any_keyword(own_evidence(in), patterns().startup_path_fragments);
  if (is_exec_sink(cap)) return contains_ci(own_evidence(in), "crontab");
  return false;
}

bool rule13(const RuleInput& in) {  // Reconnaissance motif or enum+bulk
  if (!under_spec(in)) return false;
  const CapabilityId cap = in.dev->capability;
  const auto& actual = in.ctx->tuple->actual;
  const bool enum_plus_bulk = actual.count(CapabilityId::FileEnumerate) != 0 &&
                              actual.count(CapabilityId::EnvAccessBulk) != 0;
  if (cap == CapabilityId::FileEnumerate || cap == CapabilityId::EnvAccessBulk)
    return enum_plus_bulk || skill_text_has(in, patterns().recon_keywords);
  if (is_exec_sink(cap))
    return contains_any_keyword(own_evidence(in), patterns().recon_keywords);
  return false;
}

bool rule14(const RuleInput& in) {  // Over-specification
  return in.dev->kind == DeviationKind::OverSpecified;
}

bool rule15(const RuleInput& in) {  // Telemetry keywords
  if (!under_spec(in)) return false;
  return contains_any_keyword(own_evidence(in), patterns().telemetry_keywords) ||
         contains_any_keyword(in.ctx->instruction_text, patterns().telemetry_keywords);
}

constexpr std::array<IntentLeaf, kRuleCount> kRuleIntent{
    IntentLeaf::F1, IntentLeaf::C1, IntentLeaf::A1, IntentLeaf::C4, IntentLeaf::E1,
    IntentLeaf::E2, IntentLeaf::B3, IntentLeaf::A1, IntentLeaf::A1, IntentLeaf::A2,
    IntentLeaf::A2, IntentLeaf::C2, IntentLeaf::C5, IntentLeaf::G7, IntentLeaf::G6,
};

constexpr std::array<std::string_view, kRuleCount> kRuleNames{
    "Instruction hijacking (>=2 agent signals)",
    "Dropper pattern (download+write+exec)",
    "Credential theft motif",
    "Evasion: encoding + code eval",
    "Ransomware keywords + crypto + write",
    "Bulk file deletion (high risk)",
    "Cryptominer motif or keywords",
    "Credential + network outbound",
    "Sensitive env + network outbound",
    "Data exfiltration chain (high risk)",
    "Bulk env access + network outbound",
    "Persistence motif or startup write",
    "Reconnaissance motif or enum+bulk",
    "Over-specification (low risk)",
    "Telemetry keywords",
};

std::vector<MotifDef> builtin_motifs() {
  using L = IntentLeaf;
  std::vector<MotifDef> defs;
  defs.push_back({"steal_exfil", {{{L::A1, L::A4}, false}, {{L::A2}, true}}});
  defs.push_back({"hijack_exfil", {{{L::F1}, false}, {{L::A2}, false}}});
  defs.push_back({"hijack_deliver", {{{L::F1}, false}, {{L::C1}, false}}});
  defs.push_back({"evade_deliver", {{{L::C4}, false}, {{L::C1}, false}}});
  defs.push_back({"deliver_persist", {{{L::C1}, false}, {{L::C2}, false}}});
  defs.push_back({"recon_steal", {{{L::C5}, false}, {{L::A1, L::A2}, false}}});
  defs.push_back({"mining_evasion", {{{L::B3}, false}, {{L::C4}, false}}});
  return defs;
}

constexpr std::size_t kMotifExtensionSlots = 3;

std::vector<MotifDef>& mutable_motifs() {
  static std::vector<MotifDef> defs = builtin_motifs();
  return defs;
}

}  // namespace

std::string_view intent_id(IntentLeaf leaf) { return row_of(leaf).id; }
std::string_view intent_name(IntentLeaf leaf) { return row_of(leaf).name; }
char intent_branch(IntentLeaf leaf) { return row_of(leaf).id[0]; }

bool is_adversarial(IntentLeaf leaf) {
  const char b = intent_branch(leaf);
  return b >= 'A' && b <= 'F';
}

IntentLeaf parse_intent(std::string_view id) {
  for (const auto& row : kLeafTable)
    if (row.id == id) return row.leaf;
  throw std::invalid_argument("unknown intent leaf: " + std::string(id));
}

std::vector<IntentLeaf> all_intents() {
  std::vector<IntentLeaf> out;
  out.reserve(kIntentLeafCount);
  for (const auto& row : kLeafTable) out.push_back(row.leaf);
  return out;
}

SignalVector build_signals(const Deviation& dev, const EvidenceTuple& tuple,
                           const ActualResult& actual) {
  SignalVector sv;
  sv.direction = dev.kind;
  sv.has_flow_chain = std::any_of(tuple.flows.begin(), tuple.flows.end(), [&](const auto& c) {
    return chain_contains(c, dev.capability);
  });
  sv.compound_bit = tuple.compound.any();
  if (dev.kind == DeviationKind::OverSpecified) {
    sv.source_modality = SourceModality::Metadata;
  } else {
    sv.source_modality = SourceModality::Instruction;
    for (const auto& det : actual.detections)
      if (det.capability == dev.capability && det.analyzer != AnalyzerKind::InstructionClaim) {
        sv.source_modality = SourceModality::Code;
        break;
      }
  }
  sv.evidence_confidence = dev.evidence;
  sv.risk_tier = dev.tier;
  return sv;
}

IntentContext build_intent_context(const EvidenceTuple& tuple, const ActualResult& actual,
                                   const SkillPackage& pkg) {
  IntentContext ctx;
  ctx.tuple = &tuple;
  ctx.under = under_specified(tuple);
  for (const auto& det : actual.detections) {
    std::string& text = ctx.cap_evidence[det.capability];
    if (!text.empty()) text += '\n';
    text += to_lower(det.evidence);
    text += '\n';
    text += to_lower(det.file);
  }
  for (const auto& doc : pkg.instruction_docs) {
    ctx.instruction_text += to_lower(doc.text);
    ctx.instruction_text += '\n';
  }
  return ctx;
}

bool rule_matches(int rule, const RuleInput& input) {
  switch (rule) {
    case 1: return rule1(input);
    case 2: return rule2(input);
    case 3: return rule3(input);
    case 4: return rule4(input);
    case 5: return rule5(input);
    case 6: return rule6(input);
    case 7: return rule7(input);
    case 8: return rule8(input);
    case 9: return rule9(input);
    case 10: return rule10(input);
    case 11: return rule11(input);
    case 12: return rule12(input);
    case 13: return rule13(input);
    case 14: return rule14(input);
    case 15: return rule15(input);
    default: throw std::invalid_argument("rule index out of range: " + std::to_string(rule));
  }
}

IntentLeaf rule_intent(int rule, const RuleInput& input) {
  if (rule < 1 || rule > kRuleCount)
    throw std::invalid_argument("rule index out of range: " + std::to_string(rule));
  if (rule == 14)
    return severity_of(input.dev->capability) < SeverityTier::Medium ? IntentLeaf::G1
                                                                     : IntentLeaf::G7;
  return kRuleIntent[static_cast<std::size_t>(rule - 1)];
}

IntentAssignment classify_deviation(const Deviation& dev, const IntentContext& ctx) {
  RuleInput input;
  input.dev = &dev;
  input.ctx = &ctx;
  input.signals.direction = dev.kind;
  input.signals.evidence_confidence = dev.evidence;
  input.signals.risk_tier = dev.tier;
  input.signals.compound_bit = ctx.tuple->compound.any();
  input.signals.has_flow_chain =
      std::any_of(ctx.tuple->flows.begin(), ctx.tuple->flows.end(),
                  [&](const auto& c) { return chain_contains(c, dev.capability); });
  // Modality follows the tier definition: HIGH is code-backed, MEDIUM/LOW are
  // instruction-backed, over-spec rests on declarations.
  input.signals.source_modality = dev.kind == DeviationKind::OverSpecified
                                      ? SourceModality::Metadata
                                  : dev.evidence == EvidenceTier::High ? SourceModality::Code
                                                                       : SourceModality::Instruction;
  for (int rule = 1; rule <= kRuleCount; ++rule)
    if (rule_matches(rule, input)) return {rule_intent(rule, input), rule};
  return {IntentLeaf::H2, 0};  // Unresolved; null provider maps it here
}

std::vector<IntentAssignment> classify_all(const std::vector<Deviation>& devs,
                                           const IntentContext& ctx) {
  std::vector<IntentAssignment> out;
  out.reserve(devs.size());
  for (const auto& dev : devs) out.push_back(classify_deviation(dev, ctx));
  return out;
}

const std::vector<MotifDef>& motif_table() { return mutable_motifs(); }

void extend_motifs(const MotifDef& def) {
  auto& defs = mutable_motifs();
  if (defs.size() >= builtin_motifs().size() + kMotifExtensionSlots)
    throw std::runtime_error("motif extension slots exhausted");
  defs.push_back(def);
}

void reset_motifs() { mutable_motifs() = builtin_motifs(); }

std::vector<std::string> match_motifs(const std::vector<IntentAssignment>& intents,
                                      const EvidenceTuple& tuple) {
  std::set<IntentLeaf> present;
  for (const auto& a : intents) present.insert(a.leaf);
  std::vector<std::string> fired;
  for (const auto& def : motif_table()) {
    bool all = true;
    for (const auto& req : def.all_of) {
      bool hit = req.or_exfil_flag && tuple.compound.exfil;
      for (IntentLeaf leaf : req.any_of)
        if (present.count(leaf) != 0) hit = true;
      if (!hit) {
        all = false;
        break;
      }
    }
    if (all) fired.push_back(def.name);
  }
  return fired;
}

std::string_view format_triage(TriageTier tier) {
  switch (tier) {
    case TriageTier::MandatoryReview: return "mandatory-review";
    case TriageTier::ContextualReview: return "contextual-review";
    case TriageTier::DocumentationUpdate: return "documentation-update";
    case TriageTier::Clean: return "clean";
  }
  return "unknown";
}

TriageTier rollup_triage(const std::vector<Deviation>& devs,
                         const std::vector<IntentAssignment>& intents,
                         const std::vector<std::string>& motifs) {
  if (!motifs.empty()) return TriageTier::MandatoryReview;
  for (const auto& a : intents)
    if (is_adversarial(a.leaf)) return TriageTier::ContextualReview;
  if (!devs.empty()) return TriageTier::DocumentationUpdate;
  return TriageTier::Clean;
}

std::string rules_manifest_json() {
  nlohmann::ordered_json doc;
  doc["version"] = std::string(kRulesVersion);
  doc["evaluation"] = "in order; first match wins";
  nlohmann::ordered_json rules = nlohmann::ordered_json::array();
  for (int i = 1; i <= kRuleCount; ++i) {
    nlohmann::ordered_json r;
    r["index"] = i;
    r["name"] = std::string(kRuleNames[static_cast<std::size_t>(i - 1)]);
    r["intent"] = i == 14 ? "G1/G7"
                          : std::string(intent_id(kRuleIntent[static_cast<std::size_t>(i - 1)]));
    rules.push_back(std::move(r));
  }
  doc["rules"] = std::move(rules);
  return doc.dump(2) + "\n";
}

std::string motifs_manifest_json() {
  nlohmann::ordered_json doc;
  doc["version"] = std::string(kMotifsVersion);
  doc["extension_slots"] = kMotifExtensionSlots;
  nlohmann::ordered_json motifs = nlohmann::ordered_json::array();
  for (const auto& def : motif_table()) {
    nlohmann::ordered_json m;
    m["name"] = def.name;
    nlohmann::ordered_json reqs = nlohmann::ordered_json::array();
    for (const auto& req : def.all_of) {
      nlohmann::ordered_json any = nlohmann::ordered_json::array();
      for (IntentLeaf leaf : req.any_of) any.push_back(std::string(intent_id(leaf)));
      if (req.or_exfil_flag) any.push_back("EXFIL_FLAG");
      reqs.push_back(std::move(any));
    }
    m["requires_all_of"] = std::move(reqs);
    motifs.push_back(std::move(m));
  }
  doc["motifs"] = std::move(motifs);
  return doc.dump(2) + "\n";
}

}  // namespace biv
