#include "biv/actual_track.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "biv/analyzers.hpp"
#include "biv/text.hpp"

namespace biv {

std::string_view format_analyzer(AnalyzerKind k) {
  switch (k) {
    case AnalyzerKind::PythonAst: return "python-ast";
    case AnalyzerKind::JstsRegex: return "jsts-regex";
    case AnalyzerKind::ShellLiteral: return "shell-literal";
    case AnalyzerKind::InstructionClaim: return "instruction-claim";
  }
  return "python-ast";
}

std::string_view format_scope(ChainScope s) {
  switch (s) {
    case ChainScope::IntraProcedural: return "intra-procedural";
    case ChainScope::InterProcedural: return "inter-procedural";
    case ChainScope::IntraFileCoOccurrence: return "intra-file-co-occurrence";
  }
  return "intra-procedural";
}

bool is_network_send(CapabilityId cap) {
  return cap == CapabilityId::NetworkOutboundHttp || cap == CapabilityId::NetworkOutboundSocket;
}

bool is_exec_sink(CapabilityId cap) {
  return cap == CapabilityId::ProcessExec || cap == CapabilityId::ProcessExecShell ||
         cap == CapabilityId::CodeEval || cap == CapabilityId::CodeEvalDynamic;
}

bool is_file_read(CapabilityId cap) {
  return cap == CapabilityId::FileReadProject || cap == CapabilityId::FileReadSensitive ||
         cap == CapabilityId::FileReadHome;
}

bool is_file_write(CapabilityId cap) {
  return cap == CapabilityId::FileWrite || cap == CapabilityId::FileWriteSensitive;
}

bool is_sensitive_source(CapabilityId cap) {
  return category_of(cap) == CapabilityCategory::Environment ||
         cap == CapabilityId::FileReadSensitive || cap == CapabilityId::FileReadHome ||
         cap == CapabilityId::CredentialRead;
}

bool chain_is_exfil(const FlowChain& chain) {
  return is_network_send(chain.sink) &&
         (is_sensitive_source(chain.source) || chain.source_class == SourceClass::UserInput);
}

bool chain_is_rce(const FlowChain& chain) {
  return chain.source_class == SourceClass::NetworkResponse && is_exec_sink(chain.sink);
}

bool chain_is_obfuscation(const FlowChain& chain) {
  if (chain.sink != CapabilityId::CodeEvalDynamic) return false;
  for (CapabilityId t : chain.transforms)
    if (category_of(t) == CapabilityCategory::Encoding) return true;
  return false;
}

bool chain_is_lineage(const FlowChain& chain) {
  if (!is_file_read(chain.source)) return false;
  if (!is_file_write(chain.sink) && !is_network_send(chain.sink)) return false;
  return !chain_is_exfil(chain) && !chain_is_rce(chain) && !chain_is_obfuscation(chain);
}

std::vector<Detection> aggregate_detections(std::vector<Detection> raw) {
  std::vector<Detection> out;
  std::map<std::tuple<int, std::string, int>, std::size_t> index;
  for (auto& d : raw) {
    auto key = std::make_tuple(static_cast<int>(d.capability), d.file, static_cast<int>(d.analyzer));
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(std::move(key), out.size());
      if (d.sites.empty()) d.sites.push_back(Site{d.file, d.line});
      d.occurrence_count = d.sites.size();
      out.push_back(std::move(d));
      continue;
    }
    Detection& merged = out[it->second];
    for (const auto& s : d.sites)
      if (std::find(merged.sites.begin(), merged.sites.end(), s) == merged.sites.end())
        merged.sites.push_back(s);
    merged.occurrence_count = merged.sites.size();
  }
  return out;
}

CompoundFlags detect_compound(const std::vector<FlowChain>& chains,
                              const std::vector<Detection>&) {
  CompoundFlags flags;
  for (const auto& c : chains) {
    flags.exfil = flags.exfil || chain_is_exfil(c);
    flags.rce = flags.rce || chain_is_rce(c);
    flags.obfuscation = flags.obfuscation || chain_is_obfuscation(c);
    flags.lineage = flags.lineage || chain_is_lineage(c);
  }
  return flags;
}

ActualResult actual_set(const SkillPackage& pkg, SemanticProvider& provider, bool parallel_files) {
  ActualResult result;

  std::vector<const SourceDocument*> python, jsts, shell;
  for (const auto& doc : pkg.code_files) {
    switch (doc.language_tag) {
      case LanguageTag::Python: python.push_back(&doc); break;
      case LanguageTag::JavascriptTypescript: jsts.push_back(&doc); break;
      case LanguageTag::Shell: shell.push_back(&doc); break;
      default: break;
    }
  }

  std::vector<Detection> raw;
  auto absorb = [&](AnalyzerOutput&& out) {
    for (auto& d : out.detections) raw.push_back(std::move(d));
    for (auto& c : out.chains) result.chains.push_back(std::move(c));
    for (auto& w : out.warnings) result.warnings.push_back(std::move(w));
  };
  absorb(analyze_python(python, parallel_files));
  absorb(analyze_jsts(jsts, parallel_files));
  absorb(analyze_shell(shell, parallel_files));

  // Instruction-level capabilities come from filtered semantic claims over I.
  try {
    std::vector<SemanticClaim> claims =
        provider.extract_claims(pkg.instruction_docs, ClaimKind::ActualInstruction);
    std::vector<std::string> rejections;
    std::vector<SemanticClaim> kept = apply_filters(claims, pkg.instruction_docs, &rejections);
    for (auto& r : rejections) result.warnings.push_back("claim rejected: " + std::move(r));
    for (const auto& claim : kept) {
      Detection d;
      d.capability = claim.capability;
      d.analyzer = AnalyzerKind::InstructionClaim;
      d.evidence = claim.quoted_span;
      const SourceDocument* doc = nullptr;
      for (const auto& cand : pkg.instruction_docs)
        if (cand.path == claim.source_doc) { doc = &cand; break; }
      if (!doc && !pkg.instruction_docs.empty()) doc = &pkg.instruction_docs.front();
      if (doc) {
        d.file = doc->path;
        d.line = doc->start_line;
        std::size_t offset = find_grounded_span(doc->text, claim.quoted_span);
        if (offset != std::string::npos) d.line = doc->line_at(offset);
      }
      d.sites.push_back(Site{d.file, d.line});
      raw.push_back(std::move(d));
    }
  } catch (const ProviderUnavailableError& e) {
    result.provider_degraded = true;
    result.warnings.push_back(e.what());  // message carries its own prefix
  } catch (const FixtureMissingError& e) {
    result.provider_degraded = true;
    result.warnings.push_back(std::string("fixture miss: ") + e.what());
  }

  result.detections = aggregate_detections(std::move(raw));
  for (const auto& d : result.detections) result.set.insert(d.capability);
  result.compound = detect_compound(result.chains, result.detections);
  return result;
}

}  // namespace biv
