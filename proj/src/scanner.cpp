#include "biv/scanner.hpp"

#include <algorithm>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace biv {

std::unique_ptr<SemanticProvider> make_provider(const ScanConfig& config) {
  if (config.provider_mode == "null") return std::make_unique<NullProvider>();
  if (config.provider_mode == "replay") {
    if (config.fixtures.empty())
      throw std::runtime_error("replay provider requires --fixtures <file>");
    return std::make_unique<ReplayProvider>(config.fixtures);
  }
  if (config.provider_mode == "live") {
    if (config.live_url.empty())
      throw std::runtime_error("live provider requires an endpoint URL");
    LiveEndpointConfig endpoint;
    endpoint.url = config.live_url;
    return std::make_unique<LiveProvider>(endpoint);
  }
  throw std::runtime_error("unknown provider mode: " + config.provider_mode);
}

std::unique_ptr<Judge> make_judge(const ScanConfig& config, SemanticProvider& provider) {
  if (config.provider_mode == "null") return std::make_unique<RuleFallbackJudge>();
  return std::make_unique<ProviderJudge>(provider);
}

SkillScan scan_skill(const std::filesystem::path& dir, SemanticProvider& provider,
                     Judge& judge, bool parallel_files) {
  SkillScan scan;
  scan.pkg = load_package(dir);
  scan.content_hash = package_content_hash(dir);
  scan.provider_mode = provider.mode_name();
  scan.declared = declared_set(scan.pkg, provider);
  scan.actual = actual_set(scan.pkg, provider, parallel_files);
  scan.tuple = build_tuple(scan.declared, scan.actual);
  scan.deviations = compute_deviations(scan.tuple, scan.declared, scan.actual, scan.pkg);
  const IntentContext ctx = build_intent_context(scan.tuple, scan.actual, scan.pkg);
  scan.intents = classify_all(scan.deviations, ctx);
  scan.motifs = match_motifs(scan.intents, scan.tuple);
  scan.triage = rollup_triage(scan.deviations, scan.intents, scan.motifs);

  JudgeInput input;
  input.tuple = &scan.tuple;
  input.pkg = &scan.pkg;
  input.deviations = &scan.deviations;
  input.intents = &scan.intents;
  scan.verdict = adjudicate(input, judge);

  scan.warnings = scan.pkg.warnings;
  scan.warnings.insert(scan.warnings.end(), scan.declared.warnings.begin(),
                       scan.declared.warnings.end());
  scan.warnings.insert(scan.warnings.end(), scan.actual.warnings.begin(),
                       scan.actual.warnings.end());
  if (scan.verdict.judge_degraded)
    scan.warnings.push_back("judge degraded: rule fallback substituted for " +
                            scan.provider_mode + " judge");
  return scan;
}

bool is_skill_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) return false;
  for (const char* marker : {"SKILL.md", "skill.yaml", "skill.yml", "tool.json"})
    if (fs::exists(dir / marker)) return true;
  return false;
}

std::vector<std::filesystem::path> enumerate_skill_dirs(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::exists(root)) throw std::runtime_error("no such path: " + root.string());
  if (is_skill_dir(root)) return {root};
  if (!fs::is_directory(root)) throw std::runtime_error("not a directory: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && is_skill_dir(entry.path())) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty())
    throw std::runtime_error("no skill packages under: " + root.string());
  return dirs;
}

std::vector<SkillScan> scan_corpus_serial(const std::filesystem::path& root,
                                          const ScanConfig& config) {
  const auto dirs = enumerate_skill_dirs(root);
  auto provider = make_provider(config);
  auto judge = make_judge(config, *provider);
  std::vector<SkillScan> scans;
  scans.reserve(dirs.size());
  for (const auto& dir : dirs)
    scans.push_back(scan_skill(dir, *provider, *judge, config.parallel_files));
  return scans;
}

std::vector<SkillScan> scan_corpus(const std::filesystem::path& root, const ScanConfig& config,
                                   int jobs) {
#ifdef _OPENMP
  if (jobs > 1) {
    const auto dirs = enumerate_skill_dirs(root);
    std::vector<SkillScan> scans(dirs.size());
    std::exception_ptr failure;
#pragma omp parallel num_threads(jobs)
    {
      // Providers and judges are per-thread: replay fixtures are immutable
      // once loaded and live clients are not shared across threads.
      std::unique_ptr<SemanticProvider> provider;
      std::unique_ptr<Judge> judge;
      try {
        provider = make_provider(config);
        judge = make_judge(config, *provider);
      } catch (...) {
#pragma omp critical(biv_scan_failure)
        if (!failure) failure = std::current_exception();
      }
#pragma omp for schedule(dynamic)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(dirs.size()); ++i) {
        if (!provider || failure) continue;
        try {
          scans[static_cast<std::size_t>(i)] =
              scan_skill(dirs[static_cast<std::size_t>(i)], *provider, *judge,
                         config.parallel_files);
        } catch (...) {
#pragma omp critical(biv_scan_failure)
          if (!failure) failure = std::current_exception();
        }
      }
    }
    if (failure) std::rethrow_exception(failure);
    return scans;
  }
#else
  (void)jobs;
#endif
  return scan_corpus_serial(root, config);
}

}  // namespace biv
