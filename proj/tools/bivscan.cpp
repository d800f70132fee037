#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "biv/analyzers.hpp"
#include "biv/patterns.hpp"
#include "biv/report.hpp"
#include "biv/scanner.hpp"
#include "biv/version.hpp"

namespace {

struct CommonOpts {
  std::string provider = "null";
  std::string fixtures;
  std::string live_url;
  std::string out;
  int jobs = 1;
  bool parallel_files = false;
};

void add_provider_opts(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--provider", opts.provider, "Semantic provider mode")
      ->check(CLI::IsMember({"null", "replay", "live"}))
      ->capture_default_str();
  cmd->add_option("--fixtures", opts.fixtures, "Replay fixture file");
  cmd->add_option("--live-url", opts.live_url, "Live provider endpoint URL");
  cmd->add_option("--jobs", opts.jobs, "Worker threads for corpus scans")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--parallel-files", opts.parallel_files,
                "Parallelize the per-file analyzer stage");
}

biv::ScanConfig to_config(const CommonOpts& opts) {
  biv::ScanConfig config;
  config.provider_mode = opts.provider;
  config.fixtures = opts.fixtures;
  config.live_url = opts.live_url;
  config.parallel_files = opts.parallel_files;
  return config;
}

void write_or_print(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write output file: " + out);
  f << text;
}

int run_scan(const std::string& path, const CommonOpts& opts, const std::string& format,
             bool sidecar, const std::vector<std::string>& argv_tail) {
  const auto scans = biv::scan_corpus(path, to_config(opts), opts.jobs);
  std::string text;
  if (format == "summary") {
    for (const auto& scan : scans) text += biv::render_summary(scan);
  } else if (scans.size() == 1) {
    text = biv::report_json(scans.front()).dump(2) + "\n";
  } else {
    text = biv::corpus_report_json(scans).dump(2) + "\n";
  }
  write_or_print(opts.out, text);
  if (sidecar && !opts.out.empty()) {
    std::ofstream env(opts.out + ".envelope.json");
    env << biv::sidecar_envelope(path, argv_tail).dump(2) << "\n";
  }
  for (const auto& scan : scans)
    if (scan.verdict.label == biv::JudgeLabel::Mal) return 1;
  return 0;
}

int run_bench(const std::string& path, const std::string& labels_path,
              const CommonOpts& opts) {
  const auto scans = biv::scan_corpus(path, to_config(opts), opts.jobs);
  const auto labels = biv::parse_labels_file(labels_path);
  std::map<std::string, biv::BenchmarkMetrics> by_source;
  const auto metrics = biv::bench_metrics(scans, labels, &by_source);
  nlohmann::ordered_json doc = biv::metrics_json(metrics);
  if (!by_source.empty()) {
    nlohmann::ordered_json breakdown;
    for (const auto& [source, m] : by_source) breakdown[source] = biv::metrics_json(m);
    doc["by_source"] = std::move(breakdown);
  }
  write_or_print(opts.out, doc.dump(2) + "\n");
  return 0;
}

int run_explain(const std::string& path, const CommonOpts& opts) {
  const biv::ScanConfig config = to_config(opts);
  auto provider = biv::make_provider(config);
  auto judge = biv::make_judge(config, *provider);
  const auto scan = biv::scan_skill(path, *provider, *judge, config.parallel_files);
  write_or_print(opts.out, biv::explain_text(scan));
  return scan.verdict.label == biv::JudgeLabel::Mal ? 1 : 0;
}

int run_taxonomy(const std::string& what, const std::string& out) {
  std::string text;
  if (what == "taxonomy") text = biv::taxonomy_manifest_json();
  else if (what == "patterns") text = biv::patterns_manifest_json();
  else if (what == "rules") text = biv::rules_manifest_json();
  else if (what == "motifs") text = biv::motifs_manifest_json();
  else if (what == "python") text = biv::python_patterns_manifest_json();
  else if (what == "jsts") text = biv::jsts_patterns_manifest_json();
  else if (what == "shell") text = biv::shell_patterns_manifest_json();
  else throw std::runtime_error("unknown manifest: " + what);
  write_or_print(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"behavioral-integrity scanner for agent skill packages"};
  app.set_version_flag("--version", std::string(biv::kToolVersion));
  app.require_subcommand(1);

  CommonOpts opts;
  std::string path, labels_path, format = "json", what = "taxonomy";
  bool sidecar = false;

  auto* scan_cmd = app.add_subcommand("scan", "Scan a skill or a corpus of skills");
  scan_cmd->add_option("path", path, "Skill directory or directory of skills")->required();
  add_provider_opts(scan_cmd, opts);
  scan_cmd->add_option("--out", opts.out, "Output file (default stdout)");
  scan_cmd->add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"json", "summary"}))
      ->capture_default_str();
  scan_cmd->add_flag("--sidecar", sidecar,
                     "Write <out>.envelope.json with timestamp/host facts");

  auto* bench_cmd = app.add_subcommand("bench", "Score scan verdicts against labels");
  bench_cmd->add_option("path", path, "Corpus directory")->required();
  bench_cmd->add_option("--labels", labels_path, "skill_id<TAB>label[<TAB>source] file")
      ->required();
  add_provider_opts(bench_cmd, opts);
  bench_cmd->add_option("--out", opts.out, "Output file (default stdout)");

  auto* explain_cmd = app.add_subcommand("explain", "Pretty-print one skill's decision path");
  explain_cmd->add_option("path", path, "Skill directory")->required();
  add_provider_opts(explain_cmd, opts);
  explain_cmd->add_option("--out", opts.out, "Output file (default stdout)");

  auto* tax_cmd = app.add_subcommand("taxonomy", "Dump a versioned manifest");
  tax_cmd
      ->add_option("--what", what,
                   "taxonomy|patterns|rules|motifs|python|jsts|shell")
      ->check(CLI::IsMember({"taxonomy", "patterns", "rules", "motifs", "python", "jsts",
                             "shell"}))
      ->capture_default_str();
  tax_cmd->add_option("--out", opts.out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  std::vector<std::string> argv_tail;
  for (int i = 1; i < argc; ++i) argv_tail.emplace_back(argv[i]);

  try {
    if (scan_cmd->parsed()) return run_scan(path, opts, format, sidecar, argv_tail);
    if (bench_cmd->parsed()) return run_bench(path, labels_path, opts);
    if (explain_cmd->parsed()) return run_explain(path, opts);
    if (tax_cmd->parsed()) return run_taxonomy(what, opts.out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
