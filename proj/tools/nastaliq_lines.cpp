// nastaliq-lines: command-line front end over the C API.
#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nastaliq/nastaliq.h"

namespace {

constexpr int kUsage = NQL_ERR_USAGE;

struct UsageError {
  std::string message;
};

// Raised by subcommand handlers after a failing C API call.
struct ApiError {
  int code;
  std::string message;
};

void check(int rc) {
  if (rc != NQL_OK) throw ApiError{rc, nql_last_error()};
}

extern "C" void on_sigint(int) { nql_request_cancel(); }

std::pair<double, double> parse_range(const std::string& flag, const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const double v = std::stod(text);
      return {v, v};
    }
    std::size_t used = 0;
    const double lo = std::stod(text.substr(0, dots), &used);
    if (used != dots) throw std::invalid_argument(text);
    const auto rest = text.substr(dots + 2);
    const double hi = std::stod(rest, &used);
    if (used != rest.size() || lo > hi) throw std::invalid_argument(text);
    return {lo, hi};
  } catch (const std::exception&) {
    throw UsageError{"bad range for --" + flag + ": \"" + text + "\" (expected lo..hi)"};
  }
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      sizes.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError{"bad value for --sizes: \"" + text + "\""};
    }
  }
  return sizes;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sibling(const std::string& file, const char* name) {
  const auto slash = file.find_last_of('/');
  return (slash == std::string::npos ? std::string() : file.substr(0, slash + 1)) + name;
}

int direction_code(const std::string& d) {
  return d == "left-to-right" ? NQL_LEFT_TO_RIGHT : NQL_RIGHT_TO_LEFT;
}

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  int threads = 1;
  bool reproducible = false;
};

struct TrainFlags {
  std::string manifest;
  std::string alphabet;
  std::size_t hidden = 0;
  double lr = 0;
  double momentum = 0;
  std::size_t max_epochs = 0;
  std::size_t patience = 0;
  double clip = 0;
  std::size_t batch = 0;
  std::string direction = "right-to-left";

  void add(CLI::App* sub, const nql_train_config& d) {
    hidden = d.hidden_size;
    lr = d.learning_rate;
    momentum = d.momentum;
    max_epochs = d.max_epochs;
    patience = d.patience;
    clip = d.gradient_clip;
    batch = d.batch_size;
    sub->add_option("--manifest", manifest, "Manifest TSV");
    sub->add_option("--alphabet", alphabet, "Alphabet file (default: alphabet.txt beside the manifest)");
    sub->add_option("--hidden", hidden, "Hidden units per direction")->capture_default_str();
    sub->add_option("--lr", lr, "Learning rate")->capture_default_str();
    sub->add_option("--momentum", momentum, "Momentum")->capture_default_str();
    sub->add_option("--max-epochs", max_epochs, "Epoch cap")->capture_default_str();
    sub->add_option("--patience", patience, "Epochs without validation improvement before stopping")
        ->capture_default_str();
    sub->add_option("--clip", clip, "Per-component gradient bound")->capture_default_str();
    sub->add_option("--batch", batch, "Samples per update")->capture_default_str();
    sub->add_option("--direction", direction, "Frame order")
        ->check(CLI::IsMember({"right-to-left", "left-to-right"}))
        ->capture_default_str();
  }

  nql_train_config config(const Globals& g) const {
    nql_train_config c;
    nql_train_config_init(&c);
    c.hidden_size = hidden;
    c.learning_rate = lr;
    c.momentum = momentum;
    c.max_epochs = max_epochs;
    c.patience = patience;
    c.gradient_clip = clip;
    c.batch_size = batch;
    c.seed = g.seed;
    c.reproducible = g.reproducible ? 1 : 0;
    c.threads = g.threads;
    c.direction = direction_code(direction);
    return c;
  }

  std::string alphabet_path() const { return alphabet.empty() ? sibling(manifest, "alphabet.txt") : alphabet; }
};

void print_epoch(const nql_epoch_metrics* m, void*) {
  std::fprintf(stderr, "epoch %zu  loss %.4f  train %.4f  val %.4f  %.1fs\n", m->epoch, m->train_ctc_loss,
               m->train_label_error, m->val_label_error, m->wall_seconds);
}

void print_stage(const char* stage, void*) { std::fprintf(stderr, "stage %s done\n", stage); }

void require(const CLI::App* sub, std::initializer_list<const char*> flags) {
  for (const char* f : flags) {
    if (sub->get_option(f)->count() == 0) throw UsageError{"missing required flag " + std::string(f)};
  }
}

struct ConfigPair {
  std::string key;
  std::string value;
};

void collect_pair(const char* key, const char* value, void* user) {
  static_cast<std::vector<ConfigPair>*>(user)->push_back({key, value});
}

// Finds --key on the selected subcommand chain or the top-level app.
CLI::Option* find_flag(const std::vector<CLI::App*>& chain, const std::string& key) {
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    if (auto* opt = (*it)->get_option_no_throw("--" + key)) return opt;
  }
  return nullptr;
}

std::vector<CLI::App*> selected_chain(CLI::App& app) {
  std::vector<CLI::App*> chain{&app};
  for (CLI::App* cur = &app;;) {
    const auto subs = cur->get_subcommands();
    if (subs.empty()) break;
    cur = subs.front();
    chain.push_back(cur);
  }
  return chain;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Handwritten text-line recognition: preprocessing, segmentation, corpus tooling, "
               "BLSTM-CTC training and evaluation.",
               "nastaliq-lines"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", nql_version());

  Globals g;
  app.add_option("--config", g.config, "File of `key = value` lines; keys are flag names, flags win");
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::Range(1, 1024));
  app.add_flag("--reproducible", g.reproducible, "Fixed reduction order and zeroed timings in metric files");

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Color strip, median filter and deskew one page");
  nql_preprocess_options popts;
  nql_preprocess_options_init(&popts);
  std::string pre_in, pre_out, pre_report, pre_ink = "none";
  pre->add_option("--input", pre_in, "Page image (PGM, PPM or PNG)");
  pre->add_option("--output", pre_out, "Cleaned page (PGM)");
  pre->add_option("--ink", pre_ink, "Ink color to keep")->check(CLI::IsMember({"none", "red", "black"}))
      ->capture_default_str();
  pre->add_option("--tolerance", popts.color_tolerance, "Color-key tolerance")->capture_default_str();
  pre->add_option("--max-angle", popts.max_angle, "Skew search bound (degrees)")->capture_default_str();
  pre->add_option("--coarse", popts.coarse_step, "Coarse skew step")->capture_default_str();
  pre->add_option("--fine", popts.fine_step, "Fine skew step")->capture_default_str();
  pre->add_option("--median-radius", popts.median_radius, "Median filter radius, 0 disables")
      ->capture_default_str();
  pre->add_option("--report", pre_report, "Also write the skew report CSV here");

  // segment
  auto* seg = app.add_subcommand("segment", "Cut a cleaned page into line images");
  std::string seg_in, seg_out, seg_page;
  std::int64_t seg_tau = 0;
  std::size_t seg_min = 5;
  seg->add_option("--input", seg_in, "Cleaned page image");
  seg->add_option("--outdir", seg_out, "Directory for <pageid>-NN.pgm");
  seg->add_option("--tau", seg_tau, "Ink-row threshold")->capture_default_str();
  seg->add_option("--min-height", seg_min, "Minimum band height")->capture_default_str();
  seg->add_option("--page-id", seg_page, "Page id ddd-dd (default: input file stem)");

  // corpus
  auto* corpus = app.add_subcommand("corpus", "Manifest and alphabet tooling");
  corpus->require_subcommand(1);
  auto* build = corpus->add_subcommand("build-manifest", "Pair line images with ground truth and split by writer");
  std::string bm_root, bm_images, bm_gt, bm_out, bm_fractions = "0.6,0.24,0.16";
  build->add_option("--root", bm_root, "Corpus directory (uses lines/ and gt/ when present)");
  build->add_option("--images", bm_images, "Line image directory (overrides --root)");
  build->add_option("--gt", bm_gt, "Ground-truth directory (overrides --root)");
  build->add_option("--fractions", bm_fractions, "train,val,test writer fractions")->capture_default_str();
  build->add_option("--out", bm_out, "Manifest TSV to write");
  auto* stats = corpus->add_subcommand("stats", "Summarize a manifest");
  std::string st_manifest;
  stats->add_option("manifest", st_manifest, "Manifest TSV")->required();
  auto* alpha = corpus->add_subcommand("alphabet", "Write the alphabet of a manifest");
  std::string al_manifest, al_out;
  alpha->add_option("manifest", al_manifest, "Manifest TSV")->required();
  alpha->add_option("--out", al_out, "Alphabet file (default: alphabet.txt beside the manifest)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  nql_synth_config scfg;
  nql_synth_config_init(&scfg);
  std::size_t sy_pages = 10;
  std::string sy_out, sy_skew = "-5..5", sy_tokens = "3..6", sy_fractions = "0.6,0.24,0.16";
  bool sy_red = false;
  synth->add_option("--pages", sy_pages, "Page count")->capture_default_str();
  synth->add_option("--lines", scfg.lines_per_page, "Lines per page")->capture_default_str();
  synth->add_option("--classes", scfg.glyph_classes, "Glyph classes")->capture_default_str();
  synth->add_option("--tokens", sy_tokens, "Tokens per line, lo..hi")->capture_default_str();
  synth->add_option("--skew", sy_skew, "Page skew range in degrees, lo..hi (use --skew=-5..5)")
      ->capture_default_str();
  synth->add_option("--noise", scfg.noise, "Salt-and-pepper density")->capture_default_str();
  synth->add_option("--jitter", scfg.stroke_jitter, "Stroke jitter in pixels")->capture_default_str();
  synth->add_option("--pages-per-writer", scfg.pages_per_writer, "Pages per writer")->capture_default_str();
  synth->add_option("--first-writer", scfg.first_writer, "Id of the first writer")->capture_default_str();
  synth->add_option("--fractions", sy_fractions, "train,val,test writer fractions")->capture_default_str();
  synth->add_flag("--red-ink", sy_red, "Red strokes with black ruled baselines (PPM pages)");
  synth->add_option("--outdir", sy_out, "Output directory");

  // train
  nql_train_config tdefaults;
  nql_train_config_init(&tdefaults);
  auto* tr = app.add_subcommand("train", "Train a BLSTM-CTC model");
  TrainFlags tf;
  tf.add(tr, tdefaults);
  std::string tr_out, tr_metrics;
  tr->add_option("--out", tr_out, "Checkpoint to write");
  tr->add_option("--metrics", tr_metrics, "Metrics CSV (default: <out>.metrics.csv)");

  // eval
  auto* ev = app.add_subcommand("eval", "Label error rate of a checkpoint on one split");
  std::string ev_model, ev_manifest, ev_alphabet, ev_split = "test", ev_out, ev_direction = "right-to-left";
  ev->add_option("--model", ev_model, "Checkpoint");
  ev->add_option("--manifest", ev_manifest, "Manifest TSV");
  ev->add_option("--alphabet", ev_alphabet, "Alphabet file (default: alphabet.txt beside the manifest)");
  ev->add_option("--split", ev_split, "Split")->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  ev->add_option("--out", ev_out, "Per-sample decodes TSV");
  ev->add_option("--direction", ev_direction, "Frame order")
      ->check(CLI::IsMember({"right-to-left", "left-to-right"}))
      ->capture_default_str();

  // sweep
  auto* sw = app.add_subcommand("sweep", "Train once per hidden size");
  TrainFlags sf;
  sf.add(sw, tdefaults);
  std::string sw_sizes = "20,40,60,80,100,120,140", sw_out;
  sw->add_option("--sizes", sw_sizes, "Strictly increasing hidden sizes")->capture_default_str();
  sw->add_option("--out", sw_out, "Sweep CSV to write");

  // recognize
  auto* rec = app.add_subcommand("recognize", "Decode one line image");
  std::string rc_model, rc_alphabet, rc_input, rc_direction = "right-to-left";
  rec->add_option("--model", rc_model, "Checkpoint");
  rec->add_option("--alphabet", rc_alphabet, "Alphabet file");
  rec->add_option("--input", rc_input, "Line image");
  rec->add_option("--direction", rc_direction, "Frame order")
      ->check(CLI::IsMember({"right-to-left", "left-to-right"}))
      ->capture_default_str();

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "preprocess -> segment -> manifest -> train -> eval");
  std::map<std::string, std::string> pl_values;
  const std::vector<std::pair<const char*, const char*>> pl_keys = {
      {"pages", "Page image directory"},
      {"gt", "Ground-truth directory"},
      {"workdir", "Output directory"},
      {"ink", "none, red or black"},
      {"tolerance", "Color-key tolerance"},
      {"median-radius", "Median filter radius"},
      {"max-angle", "Skew search bound"},
      {"coarse", "Coarse skew step"},
      {"fine", "Fine skew step"},
      {"tau", "Ink-row threshold"},
      {"min-height", "Minimum band height"},
      {"fractions", "train,val,test writer fractions"},
      {"hidden", "Hidden units per direction"},
      {"lr", "Learning rate"},
      {"momentum", "Momentum"},
      {"max-epochs", "Epoch cap"},
      {"patience", "Early-stopping patience"},
      {"clip", "Per-component gradient bound"},
      {"batch", "Samples per update"},
      {"direction", "right-to-left or left-to-right"},
  };
  for (const auto& [key, help] : pl_keys) pl->add_option(std::string("--") + key, pl_values[key], help);

  auto parse = [&](std::vector<std::string> args) {
    app.clear();
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  };

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    parse(args);
    // Config values fill flags absent from the command line. The pipeline
    // reads its config through the library instead.
    if (!g.config.empty() && !pl->parsed()) {
      std::vector<ConfigPair> pairs;
      check(nql_config_read(g.config.c_str(), collect_pair, &pairs));
      const auto chain = selected_chain(app);
      std::vector<std::string> extra;
      for (const auto& [key, value] : pairs) {
        auto* opt = key == "config" ? nullptr : find_flag(chain, key);
        if (opt == nullptr) throw UsageError{"unknown config key: " + key};
        if (opt->count() == 0) extra.push_back("--" + key + "=" + value);
      }
      if (!extra.empty()) {
        args.insert(args.end(), extra.begin(), extra.end());
        parse(args);
      }
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::fprintf(stderr, "run with --help for usage\n");
    return kUsage;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return kUsage;
  } catch (const ApiError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code;
  }

  std::signal(SIGINT, on_sigint);

  try {
    if (pre->parsed()) {
      require(pre, {"--input", "--output"});
      popts.ink = pre_ink == "red" ? NQL_INK_RED : pre_ink == "black" ? NQL_INK_BLACK : NQL_INK_NONE;
      popts.threads = g.threads;
      nql_image* img = nullptr;
      nql_skew_report report{};
      check(nql_preprocess_page(pre_in.c_str(), &popts, &img, &report));
      const int rc = nql_image_save_pgm(img, pre_out.c_str());
      nql_image_free(img);
      check(rc);
      char row[128];
      std::size_t needed = 0;
      check(nql_skew_report_csv(&report, row, sizeof row, &needed));
      const std::string csv = std::string("angle,best_variance,evaluated_angles\n") + row + "\n";
      if (!pre_report.empty()) {
        std::ofstream out(pre_report, std::ios::binary);
        out << csv;
        if (!out) throw ApiError{NQL_ERR_DATA, "cannot write " + pre_report};
      }
      std::fputs(csv.c_str(), stdout);
    } else if (seg->parsed()) {
      require(seg, {"--input", "--outdir"});
      if (seg_page.empty()) {
        const auto slash = seg_in.find_last_of('/');
        seg_page = seg_in.substr(slash == std::string::npos ? 0 : slash + 1);
        seg_page = seg_page.substr(0, seg_page.find('.'));
      }
      nql_image* img = nullptr;
      check(nql_image_load(seg_in.c_str(), &img));
      std::size_t lines = 0;
      const int rc = nql_segment_page(img, seg_page.c_str(), seg_out.c_str(), seg_tau, seg_min, &lines);
      nql_image_free(img);
      check(rc);
      for (std::size_t i = 1; i <= lines; ++i) {
        std::printf("%s/%s-%02zu.pgm\n", seg_out.c_str(), seg_page.c_str(), i);
      }
    } else if (build->parsed()) {
      require(build, {"--out"});
      if (bm_root.empty() && (bm_images.empty() || bm_gt.empty())) {
        throw UsageError{"missing required flag --root (or both --images and --gt)"};
      }
      std::string images = bm_images, gt = bm_gt;
      if (images.empty()) images = std::filesystem::is_directory(bm_root + "/lines") ? bm_root + "/lines" : bm_root;
      if (gt.empty()) gt = std::filesystem::is_directory(bm_root + "/gt") ? bm_root + "/gt" : bm_root;
      check(nql_build_manifest(images.c_str(), gt.c_str(), bm_fractions.c_str(), g.seed, bm_out.c_str()));
      nql_corpus_stats s{};
      check(nql_manifest_stats(bm_out.c_str(), &s));
      std::fprintf(stderr, "%zu lines: train %zu, val %zu, test %zu\n", s.lines, s.split_lines[0], s.split_lines[1],
                   s.split_lines[2]);
    } else if (stats->parsed()) {
      nql_corpus_stats s{};
      check(nql_manifest_stats(st_manifest.c_str(), &s));
      std::printf("lines\t%zu\ntokens\t%zu\ndistinct_tokens\t%zu\n", s.lines, s.tokens, s.distinct_tokens);
      const char* names[] = {"train", "val", "test"};
      for (int i = 0; i < 3; ++i) {
        std::printf("%s_writers\t%zu\n%s_lines\t%zu\n", names[i], s.writers[i], names[i], s.split_lines[i]);
      }
    } else if (alpha->parsed()) {
      if (al_out.empty()) al_out = sibling(al_manifest, "alphabet.txt");
      check(nql_write_alphabet(al_manifest.c_str(), al_out.c_str()));
      std::fputs(read_file(al_out).c_str(), stdout);
    } else if (synth->parsed()) {
      require(synth, {"--outdir"});
      std::tie(scfg.skew_min, scfg.skew_max) = parse_range("skew", sy_skew);
      const auto [tlo, thi] = parse_range("tokens", sy_tokens);
      scfg.tokens_min = static_cast<int>(tlo);
      scfg.tokens_max = static_cast<int>(thi);
      if (scfg.tokens_min != tlo || scfg.tokens_max != thi) throw UsageError{"--tokens must be integers"};
      std::stringstream fs(sy_fractions);
      std::string part;
      for (int i = 0; i < 3; ++i) {
        if (!std::getline(fs, part, ',')) throw UsageError{"bad value for --fractions: \"" + sy_fractions + "\""};
        try {
          scfg.fractions[i] = std::stod(part);
        } catch (const std::exception&) {
          throw UsageError{"bad value for --fractions: \"" + sy_fractions + "\""};
        }
      }
      scfg.red_ink = sy_red ? 1 : 0;
      scfg.seed = g.seed;
      check(nql_synth_generate(&scfg, sy_pages, sy_out.c_str(), g.threads));
      std::printf("%s/manifest.tsv\n", sy_out.c_str());
    } else if (tr->parsed()) {
      require(tr, {"--manifest", "--out"});
      if (tr_metrics.empty()) tr_metrics = tr_out + ".metrics.csv";
      const auto cfg = tf.config(g);
      nql_train_summary s{};
      check(nql_train(tf.manifest.c_str(), tf.alphabet_path().c_str(), &cfg, tr_out.c_str(), tr_metrics.c_str(),
                      print_epoch, nullptr, &s));
      if (s.skipped > 0) std::fprintf(stderr, "skipped %zu infeasible samples per epoch\n", s.skipped);
      std::printf("epochs\t%zu\nbest_epoch\t%zu\nbest_val_label_error\t%.9g\nearly_stopped\t%d\n", s.epochs_run,
                  s.best_epoch, s.best_val_label_error, s.early_stopped);
    } else if (ev->parsed()) {
      require(ev, {"--model", "--manifest"});
      if (ev_alphabet.empty()) ev_alphabet = sibling(ev_manifest, "alphabet.txt");
      double ler = 0.0;
      check(nql_evaluate(ev_model.c_str(), ev_manifest.c_str(), ev_alphabet.c_str(), ev_split.c_str(),
                         direction_code(ev_direction), g.threads, ev_out.empty() ? nullptr : ev_out.c_str(), &ler));
      std::printf("%s_label_error\t%.9g\n", ev_split.c_str(), ler);
    } else if (sw->parsed()) {
      require(sw, {"--manifest", "--out"});
      const auto sizes = parse_sizes(sw_sizes);
      const auto cfg = sf.config(g);
      check(nql_sweep(sf.manifest.c_str(), sf.alphabet_path().c_str(), sizes.data(), sizes.size(), &cfg,
                      sw_out.c_str(), nullptr));
      std::fputs(read_file(sw_out).c_str(), stdout);
    } else if (rec->parsed()) {
      require(rec, {"--model", "--alphabet", "--input"});
      nql_model* model = nullptr;
      check(nql_model_load(rc_model.c_str(), rc_alphabet.c_str(), &model));
      std::size_t needed = 0;
      nql_model_recognize(model, rc_input.c_str(), direction_code(rc_direction), nullptr, 0, &needed);
      std::string text(needed, '\0');
      const int rc = needed == 0 ? NQL_ERR_DATA
                                 : nql_model_recognize(model, rc_input.c_str(), direction_code(rc_direction),
                                                       text.data(), text.size(), &needed);
      nql_model_free(model);
      check(rc);
      std::printf("%s\n", text.c_str());
    } else if (pl->parsed()) {
      nql_pipeline* p = nullptr;
      check(nql_pipeline_new(g.config.empty() ? nullptr : g.config.c_str(), &p));
      std::unique_ptr<nql_pipeline, void (*)(nql_pipeline*)> guard(p, nql_pipeline_free);
      for (const auto& [key, help] : pl_keys) {
        if (pl->get_option(std::string("--") + key)->count() > 0) {
          check(nql_pipeline_set(p, key, pl_values[key].c_str()));
        }
      }
      if (app.get_option("--seed")->count() > 0) check(nql_pipeline_set(p, "seed", std::to_string(g.seed).c_str()));
      if (app.get_option("--threads")->count() > 0) {
        check(nql_pipeline_set(p, "threads", std::to_string(g.threads).c_str()));
      }
      if (g.reproducible) check(nql_pipeline_set(p, "reproducible", "true"));
      nql_pipeline_report r{};
      check(nql_pipeline_run(p, print_stage, print_epoch, nullptr, &r));
      if (r.mismatched_pages > 0) {
        std::fprintf(stderr, "%zu pages skipped: line count differs from ground truth\n", r.mismatched_pages);
      }
      std::printf("pages\t%zu\nlines_segmented\t%zu\nlines_matched\t%zu\nepochs\t%zu\nbest_epoch\t%zu\n"
                  "best_val_label_error\t%.9g\ntest_label_error\t%.9g\n",
                  r.pages, r.lines_segmented, r.lines_matched, r.epochs_run, r.best_epoch, r.best_val_label_error,
                  r.test_label_error);
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return kUsage;
  } catch (const ApiError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code;
  }
  return 0;
}
