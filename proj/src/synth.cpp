#include "nastaliq/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nastaliq/error.hpp"
#include "nastaliq/parallel.hpp"
#include "nastaliq/rng.hpp"

namespace nastaliq {
namespace {

struct Point {
  double x;
  double y;
};
using Polyline = std::vector<Point>;

constexpr std::array<std::string_view, 8> kClassNames{"alif", "bay", "jeem", "seen", "dal", "ain", "toay", "meem"};

// Body box inside the glyph cell, in pixel coordinates.
constexpr double kBodyLeft = 2.0;
constexpr double kBodyRight = 10.0;
constexpr double kBodyTop = 3.0;
constexpr double kBodyBottom = static_cast<double>(kGlyphBaseline);
constexpr double kStrokeRadius = 1.0;
constexpr int kWordGap = 5;
constexpr int kLineGap = 10;
constexpr int kPageMargin = 28;

// Base strokes per class in body units: u in [0,1] left to right, v in
// [0,1] top to baseline.
std::vector<Polyline> class_strokes(int glyph_class) {
  switch (glyph_class) {
    case 0: return {{{0.5, 0.0}, {0.5, 1.0}}};
    case 1: return {{{0.0, 0.45}, {0.1, 1.0}, {0.9, 1.0}, {1.0, 0.45}}};
    case 2: {
      Polyline ring;
      for (int k = 0; k <= 12; ++k) {
        const double a = 2.0 * 3.14159265358979323846 * k / 12.0;
        ring.push_back({0.5 + 0.42 * std::cos(a), 0.55 + 0.42 * std::sin(a)});
      }
      return {ring};
    }
    case 3: return {{{0.0, 1.0}, {0.17, 0.5}, {0.33, 1.0}, {0.5, 0.5}, {0.67, 1.0}, {0.83, 0.5}, {1.0, 1.0}}};
    case 4: return {{{0.1, 0.0}, {0.9, 1.0}, {0.1, 1.0}}};
    case 5: return {{{0.9, 0.05}, {0.15, 0.3}, {0.85, 0.6}, {0.15, 1.0}}};
    case 6: return {{{0.5, 0.15}, {1.0, 1.0}, {0.0, 1.0}, {0.5, 0.15}}};
    case 7: return {{{0.0, 0.5}, {1.0, 0.5}}, {{0.5, 0.0}, {0.5, 1.0}}};
    default: {
      // Procedural classes: a seeded zig-zag that always lands on the baseline.
      Rng rng(derive_seed(0xC1A55ULL, static_cast<std::uint64_t>(glyph_class)));
      Polyline p;
      for (int k = 0; k < 4; ++k) p.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.0, 0.9)});
      p.push_back({rng.uniform(0.2, 0.8), 1.0});
      return {p};
    }
  }
}

// Extra strokes that distinguish the positional forms.
std::vector<Polyline> position_strokes(GlyphPosition pos) {
  switch (pos) {
    case GlyphPosition::isolated: return {{{0.2, 1.0}, {0.2, 1.45}, {0.85, 1.45}}};
    // The bar hangs from a stem so every line keeps contiguous ink rows.
    case GlyphPosition::initial: return {{{0.0, 1.0}, {0.0, -0.15}, {1.0, -0.15}}};
    case GlyphPosition::medial: return {{{0.5, 1.0}, {0.5, 1.35}}};
    case GlyphPosition::final: return {{{1.0, 1.0}, {1.0, 1.5}, {0.55, 1.5}}};
  }
  return {};
}

double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx);
  const double dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

void draw(GrayImage& img, const Polyline& line) {
  for (std::size_t k = 0; k + 1 < line.size(); ++k) {
    const Point a = line[k];
    const Point b = line[k + 1];
    const auto r0 = static_cast<std::ptrdiff_t>(std::floor(std::min(a.y, b.y) - kStrokeRadius));
    const auto r1 = static_cast<std::ptrdiff_t>(std::ceil(std::max(a.y, b.y) + kStrokeRadius));
    const auto c0 = static_cast<std::ptrdiff_t>(std::floor(std::min(a.x, b.x) - kStrokeRadius));
    const auto c1 = static_cast<std::ptrdiff_t>(std::ceil(std::max(a.x, b.x) + kStrokeRadius));
    for (auto r = std::max<std::ptrdiff_t>(r0, 0); r <= std::min<std::ptrdiff_t>(r1, static_cast<std::ptrdiff_t>(img.height()) - 1); ++r) {
      for (auto c = std::max<std::ptrdiff_t>(c0, 0); c <= std::min<std::ptrdiff_t>(c1, static_cast<std::ptrdiff_t>(img.width()) - 1); ++c) {
        if (segment_distance({static_cast<double>(c), static_cast<double>(r)}, a, b) <= kStrokeRadius) {
          img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 0.0;
        }
      }
    }
  }
}

struct LineLayout {
  std::vector<std::string> tokens;  // reading order
  GrayImage image{kGlyphHeight, 1};
};

// Words of 1-3 letters, composed right to left.
LineLayout compose_line(const SynthConfig& cfg, Rng& rng) {
  const int count = rng.between(cfg.tokens_min, cfg.tokens_max);
  std::vector<std::pair<int, GlyphPosition>> letters;
  std::vector<bool> word_end;
  int left = count;
  while (left > 0) {
    const int len = std::min(left, rng.between(1, 3));
    for (int k = 0; k < len; ++k) {
      GlyphPosition pos = len == 1 ? GlyphPosition::isolated
                          : k == 0 ? GlyphPosition::initial
                          : k == len - 1 ? GlyphPosition::final
                                         : GlyphPosition::medial;
      letters.emplace_back(rng.between(0, cfg.glyph_classes - 1), pos);
      word_end.push_back(k == len - 1);
    }
    left -= len;
  }

  std::size_t width = 0;
  for (std::size_t k = 0; k < letters.size(); ++k) {
    width += kGlyphWidth;
    if (word_end[k] && k + 1 < letters.size()) width += kWordGap;
  }
  LineLayout out;
  out.image = GrayImage(kGlyphHeight, width);
  std::size_t right = width;
  for (std::size_t k = 0; k < letters.size(); ++k) {
    const auto [cls, pos] = letters[k];
    out.tokens.push_back(glyph_token(cls, pos));
    Glyph g = render_glyph(cls, pos, cfg.stroke_jitter, rng.next());
    const std::size_t left_edge = right - kGlyphWidth;
    for (std::size_t r = 0; r < kGlyphHeight; ++r) {
      for (std::size_t c = 0; c < kGlyphWidth; ++c) {
        double& px = out.image.at(r, left_edge + c);
        px = std::min(px, g.bitmap.at(r, c));
      }
    }
    right = left_edge;
    if (word_end[k] && k + 1 < letters.size()) right -= kWordGap;
  }
  return out;
}

std::size_t max_line_width(const SynthConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.tokens_max);
  return n * kGlyphWidth + (n - 1) * kWordGap;
}

void add_noise(std::span<double> px, std::size_t channels, double density, Rng& rng) {
  if (density <= 0.0) return;
  for (std::size_t i = 0; i < px.size(); i += channels) {
    if (rng.uniform01() < density) {
      const double v = rng.uniform01() < 0.5 ? 0.0 : 1.0;
      for (std::size_t c = 0; c < channels; ++c) px[i + c] = v;
    }
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write " + path.string());
  out << text;
  if (!out) throw_data("cannot write " + path.string());
}

}  // namespace

std::string_view position_suffix(GlyphPosition p) {
  switch (p) {
    case GlyphPosition::isolated: return "iso";
    case GlyphPosition::initial: return "i";
    case GlyphPosition::medial: return "m";
    case GlyphPosition::final: return "f";
  }
  throw_internal("bad glyph position");
}

std::string glyph_token(int glyph_class, GlyphPosition position) {
  std::string name;
  if (glyph_class >= 0 && glyph_class < static_cast<int>(kClassNames.size())) {
    name = kClassNames[static_cast<std::size_t>(glyph_class)];
  } else {
    char buf[16];
    std::snprintf(buf, sizeof buf, "c%02d", glyph_class);
    name = buf;
  }
  return name + "_" + std::string(position_suffix(position));
}

void SynthConfig::validate() const {
  if (glyph_classes < 2) throw_usage("synth needs at least 2 glyph classes");
  if (glyph_classes > 99) throw_usage("synth supports at most 99 glyph classes");
  if (lines_per_page < 1 || lines_per_page > 99) throw_usage("lines per page must be in 1..99");
  if (tokens_min < 1 || tokens_max < tokens_min) throw_usage("token range must be non-empty and >= 1");
  if (!(skew_min <= skew_max) || std::abs(skew_min) > 45.0 || std::abs(skew_max) > 45.0) {
    throw_usage("skew range must be non-empty and within +-45 degrees");
  }
  if (!(noise >= 0.0 && noise <= 0.2)) throw_usage("noise density must be in [0, 0.2]");
  if (!(stroke_jitter >= 0.0 && stroke_jitter <= 3.0)) throw_usage("stroke jitter must be in [0, 3] px");
  if (pages_per_writer < 1 || pages_per_writer > 99) throw_usage("pages per writer must be in 1..99");
  if (first_writer < 0 || first_writer > 999) throw_usage("first writer must be in 0..999");
}

Glyph render_glyph(int glyph_class, GlyphPosition position, double jitter, std::uint64_t seed) {
  if (glyph_class < 0) throw_usage("glyph class must be >= 0");
  Rng rng(seed);
  const bool medial = position == GlyphPosition::medial;
  auto place = [&](Point p) {
    const double u = medial ? 0.25 + 0.5 * p.x : p.x;
    Point q{kBodyLeft + u * (kBodyRight - kBodyLeft), kBodyTop + p.y * (kBodyBottom - kBodyTop)};
    if (jitter > 0.0) {
      q.x += rng.uniform(-jitter, jitter);
      q.y += rng.uniform(-jitter, jitter);
    }
    return q;
  };

  Glyph g;
  auto strokes = class_strokes(glyph_class);
  for (auto& s : position_strokes(position)) strokes.push_back(std::move(s));
  for (auto& stroke : strokes) {
    Polyline placed;
    for (Point p : stroke) placed.push_back(place(p));
    draw(g.bitmap, placed);
  }

  const double mid = 0.5 * static_cast<double>(kGlyphWidth - 1);
  const auto base = static_cast<double>(kGlyphBaseline);
  g.joins_left = position == GlyphPosition::initial || position == GlyphPosition::medial;
  g.joins_right = position == GlyphPosition::final || position == GlyphPosition::medial;
  if (g.joins_left) draw(g.bitmap, {{-0.5, base}, {mid, base}});
  if (g.joins_right) draw(g.bitmap, {{mid, base}, {static_cast<double>(kGlyphWidth) - 0.5, base}});
  return g;
}

SynthPage generate_page(const SynthConfig& cfg, std::size_t page_index) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, page_index));
  SynthPage page;
  const auto ppw = static_cast<std::size_t>(cfg.pages_per_writer);
  page.id.writer = cfg.first_writer + static_cast<int>(page_index / ppw);
  page.id.page = static_cast<int>(page_index % ppw) + 1;
  if (page.id.writer > 999) throw_usage("too many pages: writer id exceeds 999");

  const auto lines = static_cast<std::size_t>(cfg.lines_per_page);
  const std::size_t width = max_line_width(cfg) + 2 * kPageMargin;
  const std::size_t height = lines * kGlyphHeight + (lines - 1) * kLineGap + 2 * kPageMargin;
  page.clean = GrayImage(height, width);
  std::vector<std::size_t> rule_rows;
  std::vector<std::size_t> line_tops;

  for (std::size_t l = 0; l < lines; ++l) {
    LineLayout layout = compose_line(cfg, rng);
    const std::size_t top = kPageMargin + l * (kGlyphHeight + kLineGap);
    const std::size_t right = width - kPageMargin;
    const std::size_t left = right - layout.image.width();
    for (std::size_t r = 0; r < kGlyphHeight; ++r) {
      for (std::size_t c = 0; c < layout.image.width(); ++c) page.clean.at(top + r, left + c) = layout.image.at(r, c);
    }
    line_tops.push_back(top);
    page.line_tokens.push_back(std::move(layout.tokens));
    rule_rows.push_back(top + kGlyphBaseline + 3);
  }

  // Truth bands use the page's own binarization so that anti-aliased stroke
  // ends count as ink exactly when the segmenter would count them.
  const double threshold = otsu_threshold(page.clean);
  for (std::size_t top : line_tops) {
    std::size_t first = kGlyphHeight;
    std::size_t last = 0;
    std::int64_t ink = 0;
    for (std::size_t r = 0; r < kGlyphHeight; ++r) {
      for (double v : page.clean.row(top + r)) {
        if (v < threshold) {
          first = std::min(first, r);
          last = std::max(last, r);
          ++ink;
        }
      }
    }
    page.bands.push_back({top + first, last - first + 1, ink});
  }

  page.true_skew = cfg.skew_min == cfg.skew_max ? cfg.skew_min : rng.uniform(cfg.skew_min, cfg.skew_max);
  Rng noise_rng(derive_seed(rng.next(), 7));

  if (!cfg.red_ink) {
    page.image = rotate(page.clean, page.true_skew);
    add_noise(page.image.pixels(), 1, cfg.noise, noise_rng);
    return page;
  }

  // Red strokes over black ruled lines; each channel is rotated separately.
  std::array<GrayImage, 3> channels{GrayImage(height, width), page.clean, page.clean};
  for (std::size_t row : rule_rows) {
    for (std::size_t c = kPageMargin / 2; c < width - kPageMargin / 2; ++c) {
      if (page.clean.at(row, c) < 0.5) continue;
      for (auto& ch : channels) ch.at(row, c) = 0.0;
    }
  }
  ColorImage color;
  color.height = height;
  color.width = width;
  color.pixels.resize(height * width * 3);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    GrayImage rotated = rotate(channels[ch], page.true_skew);
    auto px = rotated.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) color.pixels[3 * i + ch] = px[i];
  }
  add_noise(color.pixels, 3, cfg.noise, noise_rng);
  std::vector<double> luma(height * width);
  for (std::size_t i = 0; i < luma.size(); ++i) {
    luma[i] = nastaliq::luma(color.pixels[3 * i], color.pixels[3 * i + 1], color.pixels[3 * i + 2]);
  }
  page.image = GrayImage(height, width, std::move(luma));
  page.color = std::move(color);
  return page;
}

std::string truth_line(const SynthPage& page) {
  std::string out = page.id.render() + "\t" + format_double(page.true_skew) + "\t";
  for (std::size_t i = 0; i < page.bands.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(page.bands[i].top) + ":" + std::to_string(page.bands[i].height);
  }
  return out;
}

SynthCorpus generate_corpus(const SynthConfig& cfg, std::size_t pages, const std::filesystem::path& outdir,
                            int threads) {
  cfg.validate();
  if (pages == 0) throw_usage("synth needs at least one page");
  std::error_code ec;
  for (const char* sub : {"pages", "lines", "gt"}) {
    std::filesystem::create_directories(outdir / sub, ec);
    if (ec) throw_data("unwritable output directory " + (outdir / sub).string() + ": " + ec.message());
  }

  SynthCorpus corpus;
  corpus.pages.resize(pages);
  parallel_for(pages, threads, [&](std::size_t p) {
    SynthPage page = generate_page(cfg, p);
    const std::string pid = page.id.render();
    if (page.color) {
      save_ppm(*page.color, outdir / "pages" / (pid + ".ppm"));
    } else {
      save_pgm(page.image, outdir / "pages" / (pid + ".pgm"));
    }
    for (std::size_t l = 0; l < page.bands.size(); ++l) {
      const SampleId id{page.id.writer, page.id.page, static_cast<int>(l + 1)};
      save_pgm(crop_band(page.clean, page.bands[l]), outdir / "lines" / (id.render() + ".pgm"));
      write_text(outdir / "gt" / (id.render() + ".gt.txt"), join_tokens(page.line_tokens[l]) + "\n");
    }
    // Keep only the truth; the rasters are on disk.
    page.image = GrayImage(1, 1);
    page.clean = GrayImage(1, 1);
    page.color.reset();
    corpus.pages[p] = std::move(page);
  });

  std::vector<int> writers;
  for (const auto& page : corpus.pages) writers.push_back(page.id.writer);
  std::map<int, Split> assignment;
  std::sort(writers.begin(), writers.end());
  writers.erase(std::unique(writers.begin(), writers.end()), writers.end());
  if (writers.size() >= 3) {
    assignment = split_by_writer(writers, cfg.fractions, cfg.seed);
  } else {
    for (int w : writers) assignment[w] = Split::train;
  }

  std::string truth;
  for (const auto& page : corpus.pages) {
    truth += truth_line(page) + "\n";
    for (std::size_t l = 0; l < page.bands.size(); ++l) {
      const SampleId id{page.id.writer, page.id.page, static_cast<int>(l + 1)};
      corpus.manifest.records.push_back({outdir / "lines" / (id.render() + ".pgm"),
                                         outdir / "gt" / (id.render() + ".gt.txt"), id,
                                         assignment.at(page.id.writer)});
      ++corpus.lines;
      corpus.tokens += page.line_tokens[l].size();
    }
  }
  write_text(outdir / "truth.tsv", truth);
  save_manifest(corpus.manifest, outdir / "manifest.tsv");
  build_alphabet(corpus.manifest).save(outdir / "alphabet.txt");
  return corpus;
}

}  // namespace nastaliq
