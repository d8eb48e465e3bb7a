// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "nastaliq/ctc.hpp"
#include "nastaliq/pipeline.hpp"
#include "nastaliq/preprocess.hpp"
#include "nastaliq/synth.hpp"
#include "nastaliq/train.hpp"
#include "oracles.hpp"

using namespace nastaliq;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

// 1. Forward-backward against K^T path enumeration.
Outcome ctc_enumeration() {
  const auto start = Clock::now();
  Rng rng(101);
  std::size_t instances = 0;
  double worst = 0.0;
  while (instances < 500) {
    const auto T = 1 + rng.below(8);
    const auto K = 2 + rng.below(3);
    LabelSequence target;
    for (std::size_t n = 1 + rng.below(3); n > 0; --n) target.push_back(static_cast<Label>(1 + rng.below(K - 1)));
    if (ctc_min_frames(target) > T) continue;
    PosteriorSequence p{oracle::random_posteriors(T, K, rng)};
    const double got = std::exp(-ctc_loss(p, target).neg_log_prob);
    worst = std::max(worst, std::abs(got - oracle::ctc_path_sum(p.probs, target)));
    ++instances;
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-10 && secs < 30.0,
          format("%zu instances, max |diff| %.3g, %.2f s", instances, worst, secs)};
}

// 2. Analytic BLSTM+CTC gradient against central differences.
Outcome gradient_check() {
  const auto start = Clock::now();
  Rng rng(202);
  double worst = 0.0;
  double worst_abs = 0.0;
  std::size_t params = 0;
  for (int model = 0; model < 20; ++model) {
    const auto H = 1 + rng.below(4);
    const auto K = 2 + rng.below(3);
    const auto T = 2 + rng.below(5);
    LabelSequence target;
    do {
      target.clear();
      for (std::size_t n = 1 + rng.below(2); n > 0; --n) target.push_back(static_cast<Label>(1 + rng.below(K - 1)));
    } while (ctc_min_frames(target) > T);
    const auto m = oracle::random_model(3, H, K, rng);
    const auto r = oracle::check_gradients(m, oracle::random_matrix(T, 3, rng), target, 1e-5);
    worst = std::max(worst, r.max_relative_error);
    worst_abs = std::max(worst_abs, r.max_absolute_error);
    params += r.parameters;
  }
  const double secs = seconds_since(start);
  return {worst < 1e-4 && secs < 60.0,
          format("20 models, %zu parameters, max rel error %.3g (floor 1e-6), max abs error %.3g, %.2f s", params,
                 worst, worst_abs, secs)};
}

// 3. Skew recovery on noisy synthetic pages, median-filtered as in the pipeline.
Outcome skew_recovery() {
  const SkewSearchConfig search;
  const double tol = std::max(0.5, search.fine_step);
  bool pass = true;
  std::string detail;
  std::uint64_t seed = 300;
  for (double theta : {-10.0, -5.0, -2.0, 0.0, 2.0, 5.0, 10.0}) {
    int hits = 0;
    for (int trial = 0; trial < 50; ++trial) {
      SynthConfig cfg;
      cfg.tokens_min = 12;
      cfg.tokens_max = 16;
      cfg.skew_min = cfg.skew_max = theta;
      cfg.seed = seed++;
      const auto page = generate_page(cfg, 0);
      const auto report = detect_skew(median_filter(page.image, 1), search);
      hits += std::abs(report.angle + theta) <= tol;
    }
    pass = pass && hits >= 48;  // 95% of 50, rounded up
    detail += format("%s%+g:%d/50", detail.empty() ? "" : " ", theta, hits);
  }
  return {pass, detail};
}

// 4. Bands against the truth ledger and against the transcribed line-cutting pseudocode.
Outcome segmentation() {
  int truth_matches = 0;
  int oracle_matches = 0;
  for (std::size_t p = 0; p < 100; ++p) {
    SynthConfig cfg;
    cfg.noise = 0.0;
    cfg.skew_min = cfg.skew_max = 0.0;
    cfg.seed = 400 + p;
    const auto page = generate_page(cfg, p);
    truth_matches += segment_lines(page.image) == page.bands;
    std::vector<std::pair<std::size_t, std::size_t>> got;
    for (const auto& b : segment_lines(page.image, 0, 1)) got.emplace_back(b.top, b.height);
    oracle_matches += got == oracle::pseudocode_bands(page.image);
  }
  return {truth_matches == 100 && oracle_matches == 100,
          format("truth %d/100, pseudocode oracle %d/100", truth_matches, oracle_matches)};
}

// 300 / 50 / 50 lines: 80 single-page writers of 5 lines split 60 / 10 / 10.
SynthCorpus learnability_corpus(const std::filesystem::path& dir) {
  SynthConfig cfg;
  cfg.lines_per_page = 5;
  cfg.skew_min = cfg.skew_max = 0.0;
  cfg.noise = 0.0;
  cfg.fractions = {0.75, 0.125, 0.125};
  return generate_corpus(cfg, 80, dir);
}

// 5. Default training config (H = 100), seed 1.
Outcome learnability() {
  oracle::TempDir dir("accept-learn");
  const auto corpus = learnability_corpus(dir.path());
  const auto stats = manifest_stats(corpus.manifest);
  const auto alphabet = build_alphabet(corpus.manifest);
  TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.seed = 1;
  const auto start = Clock::now();
  const auto r = train(corpus.manifest, alphabet, cfg);
  const double test = evaluate(r.best, corpus.manifest, Split::test, alphabet).label_error_rate;
  const double secs = seconds_since(start);
  const bool sizes = stats.split_lines[0] == 300 && stats.split_lines[1] == 50 && stats.split_lines[2] == 50;
  return {sizes && test < 0.10 && r.history.size() <= 50 && secs < 600.0,
          format("%zu/%zu/%zu lines, H=%zu, test LER %.4f after %zu epochs (best %zu), %.1f s",
                 stats.split_lines[0], stats.split_lines[1], stats.split_lines[2], cfg.hidden_size, test,
                 r.history.size(), r.best_epoch, secs)};
}

// 6. Patience 20 on a small task that saturates early.
Outcome early_stopping() {
  oracle::TempDir dir("accept-stop");
  SynthConfig sc;
  sc.glyph_classes = 3;
  sc.lines_per_page = 5;
  sc.tokens_max = 4;
  sc.skew_min = sc.skew_max = 0.0;
  const auto corpus = generate_corpus(sc, 40, dir.path());
  const auto alphabet = build_alphabet(corpus.manifest);
  TrainConfig cfg;
  cfg.hidden_size = 16;
  cfg.max_epochs = 200;
  cfg.patience = 20;
  cfg.reproducible = true;
  const auto r = train(corpus.manifest, alphabet, cfg);
  double lowest = 1e300;
  for (const auto& m : r.history) lowest = std::min(lowest, m.val_label_error);
  const double rechecked = evaluate(r.best, corpus.manifest, Split::val, alphabet).label_error_rate;
  // A run that never left its first-epoch error would stop trivially.
  const bool learned = lowest < r.history.front().val_label_error;
  const bool pass = learned && r.early_stopped && r.history.size() < cfg.max_epochs &&
                    r.best_val_label_error == lowest && rechecked == lowest &&
                    r.history.size() == r.best_epoch + cfg.patience;
  return {pass, format("stopped after %zu of %zu epochs, val %.4f at epoch 1, best epoch %zu, best val %.4f, "
                       "history min %.4f, re-evaluated %.4f",
                       r.history.size(), cfg.max_epochs, r.history.front().val_label_error, r.best_epoch,
                       r.best_val_label_error, lowest, rechecked)};
}

// 7. Seconds per epoch grows with the hidden size.
Outcome sweep_timing() {
  oracle::TempDir dir("accept-sweep");
  SynthConfig sc;
  sc.lines_per_page = 5;
  const auto corpus = generate_corpus(sc, 20, dir.path());
  const auto alphabet = build_alphabet(corpus.manifest);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  const auto rows = sweep_hidden_sizes(corpus.manifest, alphabet, {16, 32, 64}, cfg);
  std::vector<double> per_epoch;
  for (const auto& r : rows) per_epoch.push_back(r.train_seconds / static_cast<double>(r.epochs));
  const bool pass = per_epoch.size() == 3 && per_epoch[0] < per_epoch[1] && per_epoch[1] < per_epoch[2];
  return {pass, format("s/epoch H16 %.3f, H32 %.3f, H64 %.3f", per_epoch[0], per_epoch[1], per_epoch[2])};
}

// 8. Two reproducible pipeline runs.
Outcome determinism() {
  oracle::TempDir corpus("accept-det");
  SynthConfig sc;
  sc.lines_per_page = 4;
  sc.glyph_classes = 4;
  sc.seed = 8;
  generate_corpus(sc, 8, corpus.path());
  oracle::TempDir a("accept-det"), b("accept-det");
  for (const auto* work : {&a, &b}) {
    PipelineConfig cfg;
    cfg.set("pages", (corpus / "pages").string());
    cfg.set("gt", (corpus / "gt").string());
    cfg.set("workdir", work->path().string());
    cfg.set("hidden", "8");
    cfg.set("max-epochs", "4");
    cfg.set("reproducible", "true");
    run_pipeline(cfg);
  }
  const bool metrics = oracle::read_bytes(a / "metrics.csv") == oracle::read_bytes(b / "metrics.csv");
  const bool model = oracle::read_bytes(a / "model.bin") == oracle::read_bytes(b / "model.bin");
  return {metrics && model, format("metrics.csv %s, model.bin %s", metrics ? "identical" : "differ",
                                   model ? "identical" : "differ")};
}

// 9. Id round trips, the 500-writer split and writer-disjoint manifests.
Outcome corpus_contracts() {
  Rng rng(909);
  int round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    const SampleId id{static_cast<int>(rng.below(1000)), static_cast<int>(rng.below(100)),
                      static_cast<int>(rng.below(100))};
    round_trips += parse_sample_id(id.render()) == id;
  }

  std::vector<int> writers(500);
  for (int w = 0; w < 500; ++w) writers[static_cast<std::size_t>(w)] = w + 1;
  std::array<int, 3> counts{};
  for (const auto& [w, split] : split_by_writer(writers, {0.60, 0.24, 0.16}, 7)) ++counts[static_cast<std::size_t>(split)];

  int clean = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ManifestRecord> records;
    std::set<SampleId> ids;
    for (std::size_t n = 20 + rng.below(80); n > 0; --n) {
      const SampleId id{static_cast<int>(1 + rng.below(15)), static_cast<int>(1 + rng.below(3)),
                        static_cast<int>(1 + rng.below(8))};
      if (ids.insert(id).second) records.push_back({id.render() + ".pgm", id.render() + ".gt.txt", id, Split::train});
    }
    const auto m = assign_writer_splits(records, {0.60, 0.24, 0.16}, rng.next());
    std::map<int, Split> seen;
    bool ok = true;
    for (const auto& r : m.records) {
      const auto [it, fresh] = seen.emplace(r.id.writer, r.split);
      ok = ok && (fresh || it->second == r.split);
    }
    clean += ok;
  }
  const bool pass = round_trips == 1000 && counts == std::array<int, 3>{300, 120, 80} && clean == 100;
  return {pass, format("%d/1000 round trips, split %d/%d/%d, %d/100 manifests writer-disjoint", round_trips,
                       counts[0], counts[1], counts[2], clean)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"ctc-enumeration", ctc_enumeration}, {"gradient-check", gradient_check},
      {"skew-recovery", skew_recovery},     {"segmentation", segmentation},
      {"learnability", learnability},       {"early-stopping", early_stopping},
      {"sweep-timing", sweep_timing},       {"determinism", determinism},
      {"corpus-contracts", corpus_contracts},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
