#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nastaliq/corpus.hpp"
#include "nastaliq/raster.hpp"
#include "nastaliq/segment.hpp"

namespace nastaliq {

enum class GlyphPosition { isolated = 0, initial = 1, medial = 2, final = 3 };

std::string_view position_suffix(GlyphPosition p);  // iso, i, m, f

// Token name for a (class, position) pair, e.g. "meem_iso".
std::string glyph_token(int glyph_class, GlyphPosition position);

struct SynthConfig {
  int glyph_classes = 8;
  int lines_per_page = 8;
  int tokens_min = 3;
  int tokens_max = 6;
  double skew_min = -5.0;
  double skew_max = 5.0;
  double noise = 0.01;          // salt-and-pepper density
  double stroke_jitter = 0.5;   // px
  int pages_per_writer = 1;
  int first_writer = 1;
  bool red_ink = false;         // color pages: red strokes, black ruled baselines
  SplitFractions fractions{};
  std::uint64_t seed = 1;

  void validate() const;
};

// Glyph cell geometry shared by all glyphs.
inline constexpr std::size_t kGlyphHeight = 24;
inline constexpr std::size_t kGlyphWidth = 12;
inline constexpr std::size_t kGlyphBaseline = 16;

struct Glyph {
  GrayImage bitmap{kGlyphHeight, kGlyphWidth};
  bool joins_left = false;   // connector towards the following letter
  bool joins_right = false;  // connector towards the preceding letter
};

Glyph render_glyph(int glyph_class, GlyphPosition position, double jitter, std::uint64_t seed);

struct SynthPage {
  PageId id;
  GrayImage image{1, 1};  // skewed + noised page
  GrayImage clean{1, 1};  // before skew and noise
  std::optional<ColorImage> color;  // red-ink rendering, when requested
  std::vector<std::vector<std::string>> line_tokens;
  std::vector<LineBand> bands;  // in `clean` coordinates
  double true_skew = 0.0;
};

SynthPage generate_page(const SynthConfig& cfg, std::size_t page_index);

struct SynthCorpus {
  Manifest manifest;
  std::vector<SynthPage> pages;  // images dropped after writing; truth kept
  std::size_t lines = 0;
  std::size_t tokens = 0;
};

// Writes pages/, lines/ (truth crops of the clean page), gt/, manifest.tsv,
// alphabet.txt and truth.tsv under `outdir`.
SynthCorpus generate_corpus(const SynthConfig& cfg, std::size_t pages, const std::filesystem::path& outdir,
                            int threads = 1);

// One line of truth.tsv: `pageid<TAB>true_skew<TAB>top:height,...`.
std::string truth_line(const SynthPage& page);

}  // namespace nastaliq
