#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nastaliq {

// Line identifier `ddd-dd-dd`: writer, page, line serial.
struct SampleId {
  int writer = 0;
  int page = 0;
  int line = 0;

  std::string render() const;
  std::string page_id() const;  // `ddd-dd`

  friend auto operator<=>(const SampleId&, const SampleId&) = default;
};

SampleId parse_sample_id(std::string_view text);

struct PageId {
  int writer = 0;
  int page = 0;
  std::string render() const;
};

PageId parse_page_id(std::string_view text);

using Label = std::uint32_t;
using LabelSequence = std::vector<Label>;

inline constexpr Label kBlank = 0;
inline constexpr std::string_view kBlankToken = "<blank>";

// Token classes with the CTC blank at index 0.
class Alphabet {
 public:
  Alphabet();  // blank only
  explicit Alphabet(std::vector<std::string> tokens);  // tokens exclude the blank

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(Label index) const;
  std::optional<Label> find(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Canonical file bytes: `<blank>` then one token per line.
  std::string serialize() const;
  // FNV-1a 64 of serialize().
  std::uint64_t fingerprint() const;

  static Alphabet parse(std::string_view text);
  static Alphabet load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, Label> index_;
};

std::vector<std::string> tokenize(std::string_view line);

LabelSequence encode_transcription(std::string_view gt, const Alphabet& alphabet);
std::vector<std::string> decode_labels(const LabelSequence& labels, const Alphabet& alphabet);
std::string join_tokens(const std::vector<std::string>& tokens);

// Reads the first line of a `<id>.gt.txt` file.
std::string read_transcription(const std::filesystem::path& path);

// Optional token -> display text map; file lines are `token<TAB>text`.
using CodepointMap = std::map<std::string, std::string>;
CodepointMap load_codepoint_map(const std::filesystem::path& path);
std::string render_text(const LabelSequence& labels, const Alphabet& alphabet, const CodepointMap& map);

enum class Split { train = 0, val = 1, test = 2 };
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct ManifestRecord {
  std::filesystem::path image;
  std::filesystem::path ground_truth;
  SampleId id;
  Split split = Split::train;
};

struct Manifest {
  std::vector<ManifestRecord> records;

  // Unique ids and one split per writer.
  void validate() const;
  std::vector<const ManifestRecord*> select(Split split) const;
};

// Paths in the file are resolved against the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

Alphabet build_alphabet(const Manifest& manifest);

struct SplitFractions {
  double train = 0.60;
  double val = 0.24;
  double test = 0.16;
};

SplitFractions parse_fractions(std::string_view text);  // "0.6,0.24,0.16"

std::map<int, Split> split_by_writer(const std::vector<int>& writers, const SplitFractions& fractions,
                                     std::uint64_t seed);

// Sets every record's split from split_by_writer over the records' writers.
Manifest assign_writer_splits(std::vector<ManifestRecord> records, const SplitFractions& fractions,
                              std::uint64_t seed);

// Pairs every `<id>.pgm|.png` under `image_dir` with `<id>.gt.txt` in
// `gt_dir` and assigns writer-level splits.
Manifest build_manifest(const std::filesystem::path& image_dir, const std::filesystem::path& gt_dir,
                        const SplitFractions& fractions, std::uint64_t seed);

struct ManifestStats {
  std::size_t lines = 0;
  std::size_t tokens = 0;
  std::size_t distinct_tokens = 0;
  std::array<std::size_t, 3> writers{};  // by Split
  std::array<std::size_t, 3> split_lines{};
};

ManifestStats manifest_stats(const Manifest& manifest);

}  // namespace nastaliq
