#include "nastaliq/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nastaliq/error.hpp"
#include "nastaliq/rng.hpp"

namespace nastaliq {
namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t count) {
  int v = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (text[i] < '0' || text[i] > '9') return -1;
    v = v * 10 + (text[i] - '0');
  }
  return v;
}

std::string pad(int v, int width) {
  std::string s = std::to_string(v);
  if (v < 0 || s.size() > static_cast<std::size_t>(width)) {
    throw_usage("id field " + s + " does not fit " + std::to_string(width) + " digits");
  }
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("unreadable file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::string SampleId::render() const { return pad(writer, 3) + "-" + pad(page, 2) + "-" + pad(line, 2); }

std::string SampleId::page_id() const { return pad(writer, 3) + "-" + pad(page, 2); }

SampleId parse_sample_id(std::string_view text) {
  if (text.size() == 9 && text[3] == '-' && text[6] == '-') {
    const int w = parse_digits(text, 0, 3);
    const int p = parse_digits(text, 4, 2);
    const int l = parse_digits(text, 7, 2);
    if (w >= 0 && p >= 0 && l >= 0) return {w, p, l};
  }
  throw_data("malformed sample id \"" + std::string(text) + "\" (expected ddd-dd-dd)");
}

std::string PageId::render() const { return pad(writer, 3) + "-" + pad(page, 2); }

PageId parse_page_id(std::string_view text) {
  if (text.size() == 6 && text[3] == '-') {
    const int w = parse_digits(text, 0, 3);
    const int p = parse_digits(text, 4, 2);
    if (w >= 0 && p >= 0) return {w, p};
  }
  throw_data("malformed page id \"" + std::string(text) + "\" (expected ddd-dd)");
}

Alphabet::Alphabet() : tokens_{std::string(kBlankToken)} { index_.emplace(tokens_[0], kBlank); }

Alphabet::Alphabet(std::vector<std::string> tokens) : Alphabet() {
  for (auto& t : tokens) {
    if (t.empty() || t == kBlankToken) throw_data("invalid alphabet token \"" + t + "\"");
    if (t.find_first_of(" \t\r\n") != std::string::npos) throw_data("alphabet token contains whitespace: \"" + t + "\"");
    const auto index = static_cast<Label>(tokens_.size());
    if (!index_.emplace(t, index).second) throw_data("duplicate alphabet token \"" + t + "\"");
    tokens_.push_back(std::move(t));
  }
}

const std::string& Alphabet::token(Label index) const {
  if (index >= tokens_.size()) throw_data("label index " + std::to_string(index) + " outside alphabet");
  return tokens_[index];
}

std::optional<Label> Alphabet::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Alphabet::serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

std::uint64_t Alphabet::fingerprint() const { return fnv1a(serialize()); }

Alphabet Alphabet::parse(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.empty() || lines.front() != kBlankToken) throw_data("alphabet file must start with <blank>");
  std::vector<std::string> tokens;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    tokens.emplace_back(lines[i]);
  }
  return Alphabet(std::move(tokens));
}

Alphabet Alphabet::load(const std::filesystem::path& path) { return parse(read_file(path)); }

void Alphabet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write " + path.string());
  out << serialize();
}

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

LabelSequence encode_transcription(std::string_view gt, const Alphabet& alphabet) {
  auto tokens = tokenize(gt);
  if (tokens.empty()) throw_data("empty target");
  LabelSequence out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto idx = alphabet.find(tokens[i]);
    if (!idx || *idx == kBlank) {
      throw_data("unknown token \"" + tokens[i] + "\" at position " + std::to_string(i + 1));
    }
    out.push_back(*idx);
  }
  return out;
}

std::vector<std::string> decode_labels(const LabelSequence& labels, const Alphabet& alphabet) {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (Label l : labels) out.push_back(alphabet.token(l));
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string read_transcription(const std::filesystem::path& path) {
  std::string text = read_file(path);
  auto nl = text.find('\n');
  if (nl != std::string::npos) text.resize(nl);
  if (!text.empty() && text.back() == '\r') text.pop_back();
  return text;
}

CodepointMap load_codepoint_map(const std::filesystem::path& path) {
  CodepointMap map;
  const std::string text = read_file(path);
  for (auto line : split_lines(text)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw_data("codepoint map line without TAB: " + std::string(line));
    map.emplace(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
  }
  return map;
}

std::string render_text(const LabelSequence& labels, const Alphabet& alphabet, const CodepointMap& map) {
  std::string out;
  for (Label l : labels) {
    const auto& tok = alphabet.token(l);
    auto it = map.find(tok);
    out += it != map.end() ? it->second : "[" + tok + "]";
  }
  return out;
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  throw_internal("bad split value");
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw_data("unknown split \"" + std::string(name) + "\"");
}

void Manifest::validate() const {
  std::set<SampleId> seen;
  std::map<int, Split> writer_split;
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) throw_data("duplicate sample id " + r.id.render());
    auto [it, fresh] = writer_split.emplace(r.id.writer, r.split);
    if (!fresh && it->second != r.split) {
      throw_data("writer " + std::to_string(r.id.writer) + " appears in splits " +
                 std::string(split_name(it->second)) + " and " + std::string(split_name(r.split)));
    }
  }
}

std::vector<const ManifestRecord*> Manifest::select(Split split) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(&r);
  }
  return out;
}

Manifest load_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto base = path.parent_path();
  Manifest m;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) {
      throw_data(path.string() + ":" + std::to_string(line_no) + ": expected image<TAB>gt<TAB>split");
    }
    ManifestRecord r;
    std::filesystem::path image(std::string(line.substr(0, t1)));
    std::filesystem::path gt(std::string(line.substr(t1 + 1, t2 - t1 - 1)));
    r.image = image.is_absolute() ? image : base / image;
    r.ground_truth = gt.is_absolute() ? gt : base / gt;
    r.id = parse_sample_id(image.stem().string());
    r.split = parse_split(line.substr(t2 + 1));
    m.records.push_back(std::move(r));
  }
  m.validate();
  return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write " + path.string());
  const auto base = std::filesystem::absolute(path).parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    return std::filesystem::absolute(p).lexically_normal().lexically_relative(base.lexically_normal()).generic_string();
  };
  for (const auto& r : manifest.records) {
    out << rel(r.image) << '\t' << rel(r.ground_truth) << '\t' << split_name(r.split) << '\n';
  }
  if (!out) throw_data("cannot write " + path.string());
}

Alphabet build_alphabet(const Manifest& manifest) {
  std::set<std::string> tokens;
  for (const auto& r : manifest.records) {
    for (auto& t : tokenize(read_transcription(r.ground_truth))) tokens.insert(std::move(t));
  }
  tokens.erase(std::string(kBlankToken));
  return Alphabet(std::vector<std::string>(tokens.begin(), tokens.end()));
}

SplitFractions parse_fractions(std::string_view text) {
  std::array<double, 3> v{};
  std::size_t start = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    std::size_t end = text.find(',', start);
    if ((i < 2) == (end == std::string_view::npos)) throw_usage("fractions must be train,val,test");
    if (end == std::string_view::npos) end = text.size();
    auto part = text.substr(start, end - start);
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v[i]);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      throw_usage("bad fraction \"" + std::string(part) + "\"");
    }
    start = end + 1;
  }
  return {v[0], v[1], v[2]};
}

std::map<int, Split> split_by_writer(const std::vector<int>& writers, const SplitFractions& f,
                                     std::uint64_t seed) {
  const std::array<double, 3> frac{f.train, f.val, f.test};
  for (double x : frac) {
    if (!(x >= 0.0 && x <= 1.0)) throw_usage("split fractions must lie in [0,1]");
  }
  if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9) throw_usage("split fractions must sum to 1");

  std::vector<int> order(writers);
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  const std::size_t n = order.size();
  if (n < 3) throw_data("too few writers for a three-way split: " + std::to_string(n));

  Rng rng(seed);
  rng.shuffle(std::span<int>(order));

  // Cumulative rounding of writer counts.
  std::array<std::size_t, 3> count{};
  const auto b1 = static_cast<std::size_t>(std::llround(f.train * static_cast<double>(n)));
  const auto b2 = static_cast<std::size_t>(std::llround((f.train + f.val) * static_cast<double>(n)));
  count[0] = std::min(b1, n);
  count[1] = std::min(b2, n) - count[0];
  count[2] = n - count[0] - count[1];
  // A split with a positive fraction never ends up empty.
  for (std::size_t s = 0; s < 3; ++s) {
    if (frac[s] > 0.0 && count[s] == 0) {
      auto donor = static_cast<std::size_t>(std::max_element(count.begin(), count.end()) - count.begin());
      --count[donor];
      ++count[s];
    }
  }

  std::map<int, Split> out;
  std::size_t i = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < count[s]; ++k) out[order[i++]] = static_cast<Split>(s);
  }
  return out;
}

Manifest build_manifest(const std::filesystem::path& image_dir, const std::filesystem::path& gt_dir,
                        const SplitFractions& fractions, std::uint64_t seed) {
  std::error_code ec;
  if (!std::filesystem::is_directory(image_dir, ec)) throw_data("not a directory: " + image_dir.string());
  std::vector<ManifestRecord> records;
  for (const auto& entry : std::filesystem::directory_iterator(image_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext != ".pgm" && ext != ".png" && ext != ".ppm") continue;
    const auto stem = entry.path().stem().string();
    SampleId id;
    try {
      id = parse_sample_id(stem);
    } catch (const Error&) {
      continue;  // not a line image
    }
    auto gt = gt_dir / (stem + ".gt.txt");
    if (!std::filesystem::exists(gt)) continue;
    records.push_back({entry.path(), gt, id, Split::train});
  }
  return assign_writer_splits(std::move(records), fractions, seed);
}

Manifest assign_writer_splits(std::vector<ManifestRecord> records, const SplitFractions& fractions,
                              std::uint64_t seed) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  std::vector<int> writers;
  for (const auto& r : records) writers.push_back(r.id.writer);
  auto assignment = split_by_writer(writers, fractions, seed);
  for (auto& r : records) r.split = assignment.at(r.id.writer);

  Manifest m{std::move(records)};
  m.validate();
  return m;
}

ManifestStats manifest_stats(const Manifest& manifest) {
  ManifestStats s;
  std::set<std::string> distinct;
  std::array<std::set<int>, 3> writers;
  for (const auto& r : manifest.records) {
    auto tokens = tokenize(read_transcription(r.ground_truth));
    s.tokens += tokens.size();
    distinct.insert(tokens.begin(), tokens.end());
    const auto si = static_cast<std::size_t>(r.split);
    writers[si].insert(r.id.writer);
    ++s.split_lines[si];
  }
  s.lines = manifest.records.size();
  s.distinct_tokens = distinct.size();
  for (std::size_t i = 0; i < 3; ++i) s.writers[i] = writers[i].size();
  return s;
}

}  // namespace nastaliq
