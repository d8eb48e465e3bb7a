#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nastaliq/corpus.hpp"
#include "nastaliq/preprocess.hpp"
#include "nastaliq/segment.hpp"
#include "nastaliq/train.hpp"

namespace nastaliq {

struct PreprocessOptions {
  std::optional<InkColor> ink;  // color-keyed cleanup when set
  double color_tolerance = 0.25;
  int median_radius = 1;
  SkewSearchConfig skew{};
  int threads = 1;
};

struct PreprocessedPage {
  GrayImage image{1, 1};
  SkewReport skew;
};

// strip_color (optional) -> median_filter -> deskew.
PreprocessedPage preprocess_page(const std::filesystem::path& input, const PreprocessOptions& opts);

std::string skew_report_csv(const SkewReport& report);  // "angle,best_variance,evaluated_angles"

struct SegmentOptions {
  std::int64_t ink_threshold = 0;
  std::size_t min_line_height = 5;
};

// Writes `<pageid>-NN.pgm` per retained band; returns the written paths.
std::vector<std::filesystem::path> segment_page(const GrayImage& page, const PageId& id,
                                                const std::filesystem::path& outdir, const SegmentOptions& opts);

// `key = value` lines; blank lines and lines starting with '#' are ignored.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);
std::vector<std::pair<std::string, std::string>> read_key_values(const std::filesystem::path& path);

struct PipelineConfig {
  std::filesystem::path pages;    // page images named ddd-dd.*
  std::filesystem::path gt;       // <sampleid>.gt.txt files
  std::filesystem::path workdir;  // all outputs
  PreprocessOptions preprocess{};
  SegmentOptions segment{};
  SplitFractions fractions{};
  TrainConfig train{};

  // Applies one key using the command-line flag names; unknown keys and bad
  // values are usage errors naming the key.
  void set(std::string_view key, std::string_view value);
  void validate() const;

  static PipelineConfig load(const std::filesystem::path& path);
  static const std::vector<std::string_view>& keys();
};

struct PipelineReport {
  std::size_t pages = 0;
  std::size_t lines_segmented = 0;
  std::size_t lines_matched = 0;
  std::vector<std::string> mismatched_pages;  // segmented count != ground-truth count
  TrainResult training;
  double test_label_error = 0.0;
};

using StageCallback = std::function<void(std::string_view stage)>;

// preprocess -> segment -> manifest -> train -> eval, writing every
// intermediate under workdir. Polls cancel_requested() between stages;
// outputs of finished stages are left in place.
PipelineReport run_pipeline(const PipelineConfig& cfg, const StageCallback& after_stage = {},
                            const EpochCallback& on_epoch = {});

}  // namespace nastaliq
