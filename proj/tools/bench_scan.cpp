#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>

#include "biv/report.hpp"
#include "biv/scanner.hpp"
#include "synth_corpus.hpp"

namespace {

double time_ms(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benchmark: serial reference vs OpenMP corpus scan"};
  std::size_t skills = 72;
  std::uint64_t seed = 17;
  int jobs = 4;
  int repeats = 3;
  std::string keep;
  app.add_option("--skills", skills, "Synthetic corpus size")->capture_default_str();
  app.add_option("--seed", seed, "Corpus generator seed")->capture_default_str();
  app.add_option("--jobs", jobs, "Parallel worker count")->capture_default_str();
  app.add_option("--repeats", repeats, "Timed repetitions per configuration")
      ->capture_default_str();
  app.add_option("--keep", keep, "Write the corpus here and keep it");
  CLI11_PARSE(app, argc, argv);

  namespace fs = std::filesystem;
  const fs::path root = keep.empty()
                            ? fs::temp_directory_path() / ("biv-bench-" + std::to_string(seed))
                            : fs::path(keep);
  fs::remove_all(root);
  const auto corpus = biv::synth::generate_corpus(seed, skills);
  biv::synth::write_corpus(root, corpus);
  biv::synth::write_labels(root / "labels.tsv", corpus);

  biv::ScanConfig config;  // null provider: deterministic, no fixtures needed

  try {
    std::vector<biv::SkillScan> serial, parallel, parallel_files;
    double t_serial = 0, t_parallel = 0, t_parallel_files = 0;
    for (int r = 0; r < repeats; ++r) {
      t_serial += time_ms([&] { serial = biv::scan_corpus_serial(root, config); });
      t_parallel += time_ms([&] { parallel = biv::scan_corpus(root, config, jobs); });
      biv::ScanConfig pf = config;
      pf.parallel_files = true;
      t_parallel_files += time_ms([&] { parallel_files = biv::scan_corpus(root, pf, jobs); });
    }
    t_serial /= repeats;
    t_parallel /= repeats;
    t_parallel_files /= repeats;

    const std::string serial_dump = biv::corpus_report_json(serial).dump();
    const std::string parallel_dump = biv::corpus_report_json(parallel).dump();
    const std::string parallel_files_dump = biv::corpus_report_json(parallel_files).dump();
    const bool identical =
        serial_dump == parallel_dump && serial_dump == parallel_files_dump;

    std::size_t mal = 0;
    for (const auto& scan : serial)
      if (scan.verdict.label == biv::JudgeLabel::Mal) ++mal;

    std::cout << "corpus: " << skills << " skills (" << mal << " flagged Mal), seed " << seed
              << "\n";
    std::cout << "serial reference:        " << t_serial << " ms\n";
    std::cout << "parallel corpus (x" << jobs << "):    " << t_parallel << " ms  (speedup "
              << (t_parallel > 0 ? t_serial / t_parallel : 0.0) << ")\n";
    std::cout << "parallel corpus+files:   " << t_parallel_files << " ms  (speedup "
              << (t_parallel_files > 0 ? t_serial / t_parallel_files : 0.0) << ")\n";
    std::cout << "outputs identical: " << (identical ? "yes" : "NO") << "\n";
    if (keep.empty()) fs::remove_all(root);
    return identical ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (keep.empty()) fs::remove_all(root);
    return 2;
  }
}
