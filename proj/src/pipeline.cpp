#include "nastaliq/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "nastaliq/error.hpp"
#include "nastaliq/parallel.hpp"

namespace nastaliq {
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw_usage("bad value for " + std::string(key) + ": \"" + std::string(value) + "\"");
}

double to_double(std::string_view key, std::string_view value) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || end != value.data() + value.size()) bad_value(key, value);
  return v;
}

template <typename T>
T to_integer(std::string_view key, std::string_view value) {
  T v{};
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || end != value.data() + value.size()) bad_value(key, value);
  return v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

std::optional<InkColor> to_ink(std::string_view key, std::string_view value) {
  if (value == "none") return std::nullopt;
  if (value == "red") return InkColor::red;
  if (value == "black") return InkColor::black;
  bad_value(key, value);
}

FrameDirection to_direction(std::string_view key, std::string_view value) {
  if (value == "right-to-left") return FrameDirection::right_to_left;
  if (value == "left-to-right") return FrameDirection::left_to_right;
  bad_value(key, value);
}

bool is_raster(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".pgm" || ext == ".ppm" || ext == ".png";
}

struct PageInput {
  PageId id;
  fs::path path;
};

std::vector<PageInput> list_pages(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw_data("not a directory: " + dir.string());
  std::vector<PageInput> pages;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_raster(entry.path())) continue;
    try {
      pages.push_back({parse_page_id(entry.path().stem().string()), entry.path()});
    } catch (const Error&) {
      continue;  // not a page image
    }
  }
  std::sort(pages.begin(), pages.end(), [](const auto& a, const auto& b) {
    return std::pair(a.id.writer, a.id.page) < std::pair(b.id.writer, b.id.page);
  });
  for (std::size_t i = 1; i < pages.size(); ++i) {
    if (pages[i].id.render() == pages[i - 1].id.render()) {
      throw_data("duplicate page id " + pages[i].id.render() + " in " + dir.string());
    }
  }
  if (pages.empty()) throw_data("no page images in " + dir.string());
  return pages;
}

// Ground-truth line counts keyed by page id.
std::map<std::string, std::size_t> count_ground_truth(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw_data("not a directory: " + dir.string());
  std::map<std::string, std::size_t> counts;
  constexpr std::string_view suffix = ".gt.txt";
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_regular_file() || name.size() <= suffix.size() ||
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    try {
      ++counts[parse_sample_id(name.substr(0, name.size() - suffix.size())).page_id()];
    } catch (const Error&) {
      continue;
    }
  }
  return counts;
}

void checkpoint(std::string_view stage, const StageCallback& after_stage) {
  if (after_stage) after_stage(stage);
  if (cancel_requested()) throw_data("interrupted after stage " + std::string(stage));
}

}  // namespace

PreprocessedPage preprocess_page(const fs::path& input, const PreprocessOptions& opts) {
  opts.skew.validate();
  if (opts.median_radius < 0) throw_usage("median radius must be >= 0");
  GrayImage page = opts.ink ? strip_color(load_color_image(input), *opts.ink, opts.color_tolerance)
                            : load_image(input);
  if (opts.median_radius > 0) page = median_filter(page, opts.median_radius);
  auto [level, report] = deskew(page, opts.skew, opts.threads);
  return {std::move(level), report};
}

std::string skew_report_csv(const SkewReport& report) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.6f,%.9g,%zu", report.angle, report.best_variance, report.evaluated_angles);
  return buf;
}

std::vector<fs::path> segment_page(const GrayImage& page, const PageId& id, const fs::path& outdir,
                                   const SegmentOptions& opts) {
  if (opts.ink_threshold < 0) throw_usage("tau must be >= 0");
  if (opts.min_line_height < 1) throw_usage("min-height must be >= 1");
  const auto bands = segment_lines(page, opts.ink_threshold, opts.min_line_height);
  if (bands.size() > 99) throw_data("page " + id.render() + " has more than 99 lines");
  fs::create_directories(outdir);
  std::vector<fs::path> written;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const SampleId sid{id.writer, id.page, static_cast<int>(i + 1)};
    auto path = outdir / (sid.render() + ".pgm");
    save_pgm(crop_band(page, bands[i]), path);
    written.push_back(std::move(path));
  }
  return written;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw_usage("config line " + std::to_string(lineno) + ": expected key = value");
    }
    auto key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw_usage("config line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), trim(std::string_view(line).substr(eq + 1)));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_key_values(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("unreadable config: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

const std::vector<std::string_view>& PipelineConfig::keys() {
  static const std::vector<std::string_view> k = {
      "pages",    "gt",      "workdir",    "ink",        "tolerance", "median-radius", "max-angle",
      "coarse",   "fine",    "tau",        "min-height", "fractions", "seed",          "hidden",
      "lr",       "momentum", "max-epochs", "patience",  "clip",      "batch",         "threads",
      "reproducible", "direction"};
  return k;
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
  if (key == "pages") {
    pages = value;
  } else if (key == "gt") {
    gt = value;
  } else if (key == "workdir") {
    workdir = value;
  } else if (key == "ink") {
    preprocess.ink = to_ink(key, value);
  } else if (key == "tolerance") {
    preprocess.color_tolerance = to_double(key, value);
  } else if (key == "median-radius") {
    preprocess.median_radius = to_integer<int>(key, value);
  } else if (key == "max-angle") {
    preprocess.skew.max_angle = to_double(key, value);
  } else if (key == "coarse") {
    preprocess.skew.coarse_step = to_double(key, value);
  } else if (key == "fine") {
    preprocess.skew.fine_step = to_double(key, value);
  } else if (key == "tau") {
    segment.ink_threshold = to_integer<std::int64_t>(key, value);
  } else if (key == "min-height") {
    segment.min_line_height = to_integer<std::size_t>(key, value);
  } else if (key == "fractions") {
    fractions = parse_fractions(value);
  } else if (key == "seed") {
    train.seed = to_integer<std::uint64_t>(key, value);
  } else if (key == "hidden") {
    train.hidden_size = to_integer<std::size_t>(key, value);
  } else if (key == "lr") {
    train.learning_rate = to_double(key, value);
  } else if (key == "momentum") {
    train.momentum = to_double(key, value);
  } else if (key == "max-epochs") {
    train.max_epochs = to_integer<std::size_t>(key, value);
  } else if (key == "patience") {
    train.patience = to_integer<std::size_t>(key, value);
  } else if (key == "clip") {
    train.gradient_clip = to_double(key, value);
  } else if (key == "batch") {
    train.batch_size = to_integer<std::size_t>(key, value);
  } else if (key == "threads") {
    train.threads = to_integer<int>(key, value);
    preprocess.threads = train.threads;
  } else if (key == "reproducible") {
    train.reproducible = to_bool(key, value);
  } else if (key == "direction") {
    train.direction = to_direction(key, value);
  } else {
    throw_usage("unknown config key: " + std::string(key));
  }
}

void PipelineConfig::validate() const {
  if (pages.empty()) throw_usage("missing required key: pages");
  if (gt.empty()) throw_usage("missing required key: gt");
  if (workdir.empty()) throw_usage("missing required key: workdir");
  preprocess.skew.validate();
  if (preprocess.median_radius < 0) throw_usage("median-radius must be >= 0");
  if (!(preprocess.color_tolerance >= 0.0 && preprocess.color_tolerance <= 1.0)) {
    throw_usage("tolerance must be in [0, 1]");
  }
  if (segment.ink_threshold < 0) throw_usage("tau must be >= 0");
  if (segment.min_line_height < 1) throw_usage("min-height must be >= 1");
  train.validate();
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  PipelineConfig cfg;
  for (const auto& [key, value] : read_key_values(path)) cfg.set(key, value);
  return cfg;
}

PipelineReport run_pipeline(const PipelineConfig& cfg, const StageCallback& after_stage,
                            const EpochCallback& on_epoch) {
  cfg.validate();
  if (cancel_requested()) throw_data("interrupted before stage preprocess");
  PipelineReport report;

  const auto pages = list_pages(cfg.pages);
  const auto clean_dir = cfg.workdir / "clean";
  const auto lines_dir = cfg.workdir / "lines";
  fs::create_directories(clean_dir);
  report.pages = pages.size();

  // Pages are independent; the per-page skew search runs single-threaded.
  std::vector<SkewReport> skews(pages.size());
  PreprocessOptions page_opts = cfg.preprocess;
  page_opts.threads = 1;
  parallel_for(pages.size(), cfg.preprocess.threads, [&](std::size_t i) {
    auto result = preprocess_page(pages[i].path, page_opts);
    save_pgm(result.image, clean_dir / (pages[i].id.render() + ".pgm"));
    skews[i] = result.skew;
  });
  std::string skew_csv = "page_id,angle,best_variance,evaluated_angles\n";
  for (std::size_t i = 0; i < pages.size(); ++i) {
    skew_csv += pages[i].id.render() + "," + skew_report_csv(skews[i]) + "\n";
  }
  write_text_file(cfg.workdir / "skew.csv", skew_csv);
  checkpoint("preprocess", after_stage);

  std::vector<std::vector<fs::path>> lines(pages.size());
  parallel_for(pages.size(), cfg.preprocess.threads, [&](std::size_t i) {
    const auto clean = load_image(clean_dir / (pages[i].id.render() + ".pgm"));
    lines[i] = segment_page(clean, pages[i].id, lines_dir, cfg.segment);
  });
  checkpoint("segment", after_stage);

  // Only pages whose line count agrees with the ground truth can be paired
  // line by line.
  const auto gt_counts = count_ground_truth(cfg.gt);
  std::vector<ManifestRecord> records;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    report.lines_segmented += lines[i].size();
    const auto pid = pages[i].id.render();
    const auto it = gt_counts.find(pid);
    if (it == gt_counts.end() || it->second != lines[i].size()) {
      report.mismatched_pages.push_back(pid);
      continue;
    }
    for (const auto& path : lines[i]) {
      const auto stem = path.stem().string();
      const auto gt = cfg.gt / (stem + ".gt.txt");
      if (!fs::exists(gt)) throw_data("missing ground truth for " + stem);
      records.push_back({path, gt, parse_sample_id(stem), Split::train});
    }
  }
  report.lines_matched = records.size();
  std::string mismatched;
  for (const auto& pid : report.mismatched_pages) mismatched += pid + "\n";
  write_text_file(cfg.workdir / "segment_mismatch.txt", mismatched);
  if (records.empty()) throw_data("no segmented page matches its ground-truth line count");
  const auto manifest = assign_writer_splits(std::move(records), cfg.fractions, cfg.train.seed);
  save_manifest(manifest, cfg.workdir / "manifest.tsv");
  const auto alphabet = build_alphabet(manifest);
  alphabet.save(cfg.workdir / "alphabet.txt");
  checkpoint("manifest", after_stage);

  report.training = train(manifest, alphabet, cfg.train, on_epoch);
  save_model(report.training.best, cfg.workdir / "model.bin");
  write_text_file(cfg.workdir / "metrics.csv", metrics_csv(report.training.history, cfg.train.reproducible));
  checkpoint("train", after_stage);

  const auto eval = evaluate(report.training.best, manifest, Split::test, alphabet, cfg.train.direction,
                             cfg.train.threads);
  write_eval_tsv(eval, alphabet, cfg.workdir / "eval_test.tsv");
  report.test_label_error = eval.label_error_rate;
  char buf[64];
  std::snprintf(buf, sizeof buf, "test_label_error\t%.9g\n", eval.label_error_rate);
  write_text_file(cfg.workdir / "report.tsv", buf);
  checkpoint("eval", after_stage);
  return report;
}

}  // namespace nastaliq
