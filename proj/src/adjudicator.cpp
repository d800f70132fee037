#include "biv/adjudicator.hpp"

#include <sstream>
#include <stdexcept>

namespace biv {
namespace {

// Compound categories in flag order, with their per-chain shape predicate.
struct CompoundShape {
  CompoundCategory category;
  bool (*held)(const FlowChain&);
  bool CompoundFlags::*flag;
};

constexpr CompoundShape kShapes[] = {
    {CompoundCategory::ExfiltrationChain, chain_is_exfil, &CompoundFlags::exfil},
    {CompoundCategory::RceChain, chain_is_rce, &CompoundFlags::rce},
    {CompoundCategory::CodeObfuscation, chain_is_obfuscation, &CompoundFlags::obfuscation},
    {CompoundCategory::DataLineageViolation, chain_is_lineage, &CompoundFlags::lineage},
};

JudgeVerdict fallback_verdict(const JudgeInput& input) {
  RuleFallbackJudge fallback;
  return fallback.judge(input);
}

}  // namespace

std::string_view format_judge_label(JudgeLabel label) {
  return label == JudgeLabel::Mal ? "Mal" : "Safe";
}

JudgeLabel parse_judge_label(std::string_view name) {
  if (name == "Mal" || name == "mal" || name == "malicious") return JudgeLabel::Mal;
  if (name == "Safe" || name == "safe" || name == "benign") return JudgeLabel::Safe;
  throw std::invalid_argument("unknown judge label: " + std::string(name));
}

JudgeVerdict RuleFallbackJudge::judge(const JudgeInput& input) {
  JudgeVerdict verdict;
  verdict.label = JudgeLabel::Safe;
  verdict.rationale_digest = "no adversarial-branch intent with HIGH evidence";
  if (input.deviations == nullptr || input.intents == nullptr) return verdict;
  const auto& devs = *input.deviations;
  const auto& intents = *input.intents;
  for (std::size_t i = 0; i < devs.size() && i < intents.size(); ++i) {
    if (!is_adversarial(intents[i].leaf) || devs[i].evidence != EvidenceTier::High) continue;
    verdict.label = JudgeLabel::Mal;
    std::ostringstream os;
    os << "adversarial intent " << intent_id(intents[i].leaf) << " ("
       << intent_name(intents[i].leaf) << ") on undeclared "
       << format_capability(devs[i].capability) << " with HIGH evidence";
    verdict.rationale_digest = os.str();
    break;
  }
  return verdict;
}

std::string ProviderJudge::name() const { return provider_->mode_name() + "-judge"; }

JudgeVerdict ProviderJudge::judge(const JudgeInput& input) {
  degraded_ = false;
  if (input.pkg != nullptr) {
    try {
      if (auto fixture = provider_->judge_package(*input.pkg)) {
        JudgeVerdict verdict;
        verdict.label = parse_judge_label(fixture->label);
        verdict.confidence = fixture->confidence;
        verdict.rationale_digest = fixture->rationale;
        return verdict;
      }
    } catch (const std::exception&) {
      // unreachable provider or malformed fixture: degrade below
    }
  }
  degraded_ = true;
  JudgeVerdict verdict = fallback_verdict(input);
  verdict.rationale_digest = "provider judge unavailable; rule fallback: " +
                             verdict.rationale_digest;
  return verdict;
}

bool veto(const EvidenceTuple& tuple) {
  if (!tuple.compound.any()) return false;
  for (CapabilityId cap : under_specified(tuple))
    if (severity_of(cap) >= SeverityTier::High) return true;
  return false;
}

std::string_view format_decision_path(DecisionPath path) {
  switch (path) {
    case DecisionPath::Agreement: return "agreement";
    case DecisionPath::VetoOverride: return "veto-override";
    case DecisionPath::JudgeOnly: return "judge-only";
    case DecisionPath::Clear: return "clear";
  }
  return "unknown";
}

std::string describe_chain(const FlowChain& chain) {
  std::ostringstream os;
  os << format_capability(chain.source);
  for (CapabilityId t : chain.transforms) os << " -> " << format_capability(t);
  os << " -> " << format_capability(chain.sink);
  if (!chain.sites.empty()) {
    os << " @ " << chain.sites.front().file << ":" << chain.sites.front().line;
    if (chain.sites.size() > 1)
      os << "..:" << chain.sites.back().line;
  }
  os << " [" << format_scope(chain.scope) << "]";
  return os.str();
}

FinalVerdict adjudicate(const JudgeInput& input, Judge& judge) {
  if (input.tuple == nullptr) throw std::invalid_argument("adjudicate: tuple required");
  const EvidenceTuple& tuple = *input.tuple;

  FinalVerdict out;
  out.veto_fired = veto(tuple);

  JudgeVerdict verdict;
  try {
    verdict = judge.judge(input);
  } catch (const std::exception& e) {
    verdict = fallback_verdict(input);
    verdict.rationale_digest =
        "judge failed (" + std::string(e.what()) + "); rule fallback: " +
        verdict.rationale_digest;
    out.judge_degraded = true;
  }
  if (auto* provider_judge = dynamic_cast<ProviderJudge*>(&judge))
    out.judge_degraded = out.judge_degraded || provider_judge->degraded();

  out.judge_label = verdict.label;
  out.judge_confidence = verdict.confidence;
  out.judge_name = judge.name();
  const bool judge_mal = verdict.label == JudgeLabel::Mal;
  out.label = (out.veto_fired || judge_mal) ? JudgeLabel::Mal : JudgeLabel::Safe;

  if (out.veto_fired && judge_mal) out.path = DecisionPath::Agreement;
  else if (out.veto_fired) out.path = DecisionPath::VetoOverride;
  else if (judge_mal) out.path = DecisionPath::JudgeOnly;
  else out.path = DecisionPath::Clear;

  // Veto evidence: each raised compound flag's first matching chain, then the
  // undeclared >= High capabilities that complete the predicate.
  if (out.veto_fired) {
    for (const auto& shape : kShapes) {
      if (!(tuple.compound.*(shape.flag))) continue;
      std::string line = std::string(format_compound(shape.category)) + ": ";
      bool found = false;
      for (const auto& chain : tuple.flows) {
        if (!shape.held(chain)) continue;
        line += describe_chain(chain);
        found = true;
        break;
      }
      if (!found) line += "flag raised";
      out.decision_path.push_back(std::move(line));
    }
    for (CapabilityId cap : under_specified(tuple)) {
      if (severity_of(cap) < SeverityTier::High) continue;
      std::ostringstream os;
      os << "undeclared " << format_tier(severity_of(cap)) << "-tier capability "
         << format_capability(cap);
      out.decision_path.push_back(os.str());
    }
  }
  std::ostringstream js;
  js << "judge(" << out.judge_name << ") = " << format_judge_label(out.judge_label);
  if (!verdict.rationale_digest.empty()) js << ": " << verdict.rationale_digest;
  out.decision_path.push_back(js.str());
  return out;
}

}  // namespace biv
