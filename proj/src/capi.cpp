#include "nastaliq/nastaliq.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <system_error>

#include "nastaliq/ctc.hpp"
#include "nastaliq/error.hpp"
#include "nastaliq/pipeline.hpp"
#include "nastaliq/synth.hpp"

struct nql_image {
  nastaliq::GrayImage image;
};

struct nql_model {
  nastaliq::BlstmModel model;
  std::optional<nastaliq::Alphabet> alphabet;
};

struct nql_pipeline {
  nastaliq::PipelineConfig config;
};

namespace {

using namespace nastaliq;

thread_local std::string g_last_error;

int fail(nql_status code, const char* what) {
  g_last_error = what;
  return code;
}

template <typename Fn>
int guard(Fn&& fn) noexcept {
  g_last_error.clear();
  try {
    fn();
    return NQL_OK;
  } catch (const Error& e) {
    return fail(static_cast<nql_status>(e.kind()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(NQL_ERR_DATA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(NQL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NQL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(NQL_ERR_INTERNAL, "unknown exception");
  }
}

template <typename T>
T& need(T* p, const char* name) {
  if (p == nullptr) throw_usage(std::string("null argument: ") + name);
  return *p;
}

const char* need_str(const char* s, const char* name) {
  if (s == nullptr) throw_usage(std::string("null argument: ") + name);
  return s;
}

void copy_out(const std::string& text, char* buf, std::size_t cap, std::size_t* needed) {
  if (needed != nullptr) *needed = text.size() + 1;
  if (buf == nullptr || cap < text.size() + 1) throw_usage("output buffer too small");
  std::memcpy(buf, text.c_str(), text.size() + 1);
}

FrameDirection to_direction(int d) {
  if (d == NQL_RIGHT_TO_LEFT) return FrameDirection::right_to_left;
  if (d == NQL_LEFT_TO_RIGHT) return FrameDirection::left_to_right;
  throw_usage("bad direction value " + std::to_string(d));
}

PreprocessOptions to_options(const nql_preprocess_options& o) {
  PreprocessOptions p;
  switch (o.ink) {
    case NQL_INK_NONE: break;
    case NQL_INK_RED: p.ink = InkColor::red; break;
    case NQL_INK_BLACK: p.ink = InkColor::black; break;
    default: throw_usage("bad ink value " + std::to_string(o.ink));
  }
  p.color_tolerance = o.color_tolerance;
  p.median_radius = o.median_radius;
  p.skew = {o.max_angle, o.coarse_step, o.fine_step};
  p.threads = o.threads;
  return p;
}

nql_skew_report to_c(const SkewReport& r) { return {r.angle, r.best_variance, r.evaluated_angles}; }

TrainConfig to_train_config(const nql_train_config& c) {
  TrainConfig t;
  t.hidden_size = c.hidden_size;
  t.learning_rate = c.learning_rate;
  t.momentum = c.momentum;
  t.max_epochs = c.max_epochs;
  t.patience = c.patience;
  t.gradient_clip = c.gradient_clip;
  t.batch_size = c.batch_size;
  t.seed = c.seed;
  t.reproducible = c.reproducible != 0;
  t.threads = c.threads;
  t.direction = to_direction(c.direction);
  t.validate();
  return t;
}

EpochCallback wrap(nql_epoch_callback cb, void* user) {
  if (cb == nullptr) return {};
  return [cb, user](const EpochMetrics& m) {
    const nql_epoch_metrics c{m.epoch, m.train_ctc_loss, m.train_label_error, m.val_label_error, m.wall_seconds};
    cb(&c, user);
  };
}

}  // namespace

extern "C" {

const char* nql_last_error(void) { return g_last_error.c_str(); }

const char* nql_version(void) { return "0.1.0"; }

void nql_request_cancel(void) { request_cancel(); }
void nql_reset_cancel(void) { reset_cancel(); }

int nql_image_load(const char* path, nql_image** out) {
  return guard([&] {
    need(out, "out") = nullptr;
    *out = new nql_image{load_image(need_str(path, "path"))};
  });
}

int nql_image_save_pgm(const nql_image* image, const char* path) {
  return guard([&] { save_pgm(need(image, "image").image, need_str(path, "path")); });
}

int nql_image_size(const nql_image* image, size_t* height, size_t* width) {
  return guard([&] {
    need(height, "height") = need(image, "image").image.height();
    need(width, "width") = image->image.width();
  });
}

void nql_image_free(nql_image* image) { delete image; }

void nql_preprocess_options_init(nql_preprocess_options* opts) {
  if (opts == nullptr) return;
  const PreprocessOptions d;
  *opts = {NQL_INK_NONE, d.color_tolerance, d.median_radius, d.skew.max_angle,
           d.skew.coarse_step, d.skew.fine_step, d.threads};
}

int nql_preprocess_page(const char* input, const nql_preprocess_options* opts, nql_image** out,
                        nql_skew_report* report) {
  return guard([&] {
    need(out, "out") = nullptr;
    auto result = preprocess_page(need_str(input, "input"), to_options(need(opts, "opts")));
    if (report != nullptr) *report = to_c(result.skew);
    *out = new nql_image{std::move(result.image)};
  });
}

int nql_detect_skew(const nql_image* image, const nql_preprocess_options* opts, nql_skew_report* report) {
  return guard([&] {
    const auto o = to_options(need(opts, "opts"));
    need(report, "report") = to_c(detect_skew(need(image, "image").image, o.skew, o.threads));
  });
}

int nql_skew_report_csv(const nql_skew_report* report, char* buf, size_t cap, size_t* needed) {
  return guard([&] {
    const auto& r = need(report, "report");
    copy_out(skew_report_csv({r.angle, r.best_variance, r.evaluated_angles}), buf, cap, needed);
  });
}

int nql_segment_page(const nql_image* page, const char* page_id, const char* outdir, int64_t tau,
                     size_t min_height, size_t* lines_written) {
  return guard([&] {
    const auto id = parse_page_id(need_str(page_id, "page_id"));
    const auto written = segment_page(need(page, "page").image, id, need_str(outdir, "outdir"),
                                      {tau, min_height});
    if (lines_written != nullptr) *lines_written = written.size();
  });
}

int nql_build_manifest(const char* image_dir, const char* gt_dir, const char* fractions, uint64_t seed,
                       const char* out_path) {
  return guard([&] {
    const auto f = fractions != nullptr ? parse_fractions(fractions) : SplitFractions{};
    const auto m = build_manifest(need_str(image_dir, "image_dir"), need_str(gt_dir, "gt_dir"), f, seed);
    save_manifest(m, need_str(out_path, "out_path"));
  });
}

int nql_manifest_stats(const char* manifest, nql_corpus_stats* stats) {
  return guard([&] {
    const auto s = nastaliq::manifest_stats(load_manifest(need_str(manifest, "manifest")));
    auto& out = need(stats, "stats");
    out.lines = s.lines;
    out.tokens = s.tokens;
    out.distinct_tokens = s.distinct_tokens;
    for (int i = 0; i < 3; ++i) {
      out.writers[i] = s.writers[i];
      out.split_lines[i] = s.split_lines[i];
    }
  });
}

int nql_write_alphabet(const char* manifest, const char* out_path) {
  return guard([&] {
    build_alphabet(load_manifest(need_str(manifest, "manifest"))).save(need_str(out_path, "out_path"));
  });
}

void nql_synth_config_init(nql_synth_config* cfg) {
  if (cfg == nullptr) return;
  const SynthConfig d;
  *cfg = {d.glyph_classes, d.lines_per_page, d.tokens_min, d.tokens_max, d.skew_min, d.skew_max, d.noise,
          d.stroke_jitter, d.pages_per_writer, d.first_writer, d.red_ink ? 1 : 0,
          {d.fractions.train, d.fractions.val, d.fractions.test}, d.seed};
}

int nql_synth_generate(const nql_synth_config* cfg, size_t pages, const char* outdir, int threads) {
  return guard([&] {
    const auto& c = need(cfg, "cfg");
    SynthConfig s;
    s.glyph_classes = c.glyph_classes;
    s.lines_per_page = c.lines_per_page;
    s.tokens_min = c.tokens_min;
    s.tokens_max = c.tokens_max;
    s.skew_min = c.skew_min;
    s.skew_max = c.skew_max;
    s.noise = c.noise;
    s.stroke_jitter = c.stroke_jitter;
    s.pages_per_writer = c.pages_per_writer;
    s.first_writer = c.first_writer;
    s.red_ink = c.red_ink != 0;
    s.fractions = {c.fractions[0], c.fractions[1], c.fractions[2]};
    s.seed = c.seed;
    generate_corpus(s, pages, need_str(outdir, "outdir"), threads);
  });
}

void nql_train_config_init(nql_train_config* cfg) {
  if (cfg == nullptr) return;
  const TrainConfig d;
  *cfg = {d.hidden_size, d.learning_rate, d.momentum, d.max_epochs, d.patience, d.gradient_clip, d.batch_size,
          d.seed, d.reproducible ? 1 : 0, d.threads, NQL_RIGHT_TO_LEFT};
}

int nql_train(const char* manifest, const char* alphabet, const nql_train_config* cfg, const char* model_out,
              const char* metrics_csv_path, nql_epoch_callback on_epoch, void* user, nql_train_summary* summary) {
  return guard([&] {
    const auto tc = to_train_config(need(cfg, "cfg"));
    const auto m = load_manifest(need_str(manifest, "manifest"));
    const auto a = Alphabet::load(need_str(alphabet, "alphabet"));
    need_str(model_out, "model_out");
    const auto r = train(m, a, tc, wrap(on_epoch, user));
    save_model(r.best, model_out);
    if (metrics_csv_path != nullptr) write_text_file(metrics_csv_path, metrics_csv(r.history, tc.reproducible));
    if (summary != nullptr) {
      *summary = {r.history.size(), r.best_epoch, r.best_val_label_error, r.processed,
                  r.skipped, r.early_stopped ? 1 : 0, r.train_seconds};
    }
  });
}

int nql_evaluate(const char* model, const char* manifest, const char* alphabet, const char* split, int direction,
                 int threads, const char* per_sample_tsv, double* label_error_rate) {
  return guard([&] {
    const auto s = parse_split(need_str(split, "split"));
    const auto dir = to_direction(direction);
    const auto a = Alphabet::load(need_str(alphabet, "alphabet"));
    const auto net = load_model(need_str(model, "model"), a.fingerprint());
    const auto r = evaluate(net, load_manifest(need_str(manifest, "manifest")), s, a, dir, threads);
    if (per_sample_tsv != nullptr) write_eval_tsv(r, a, per_sample_tsv);
    need(label_error_rate, "label_error_rate") = r.label_error_rate;
  });
}

int nql_sweep(const char* manifest, const char* alphabet, const size_t* sizes, size_t count,
              const nql_train_config* base, const char* csv_out, nql_sweep_row* rows) {
  return guard([&] {
    const auto tc = to_train_config(need(base, "base"));
    if (count > 0) need(sizes, "sizes");
    const std::vector<std::size_t> hs(sizes, sizes + count);
    const auto m = load_manifest(need_str(manifest, "manifest"));
    const auto a = Alphabet::load(need_str(alphabet, "alphabet"));
    const auto result = sweep_hidden_sizes(m, a, hs, tc);
    if (csv_out != nullptr) write_text_file(csv_out, sweep_csv(result));
    if (rows != nullptr) {
      for (std::size_t i = 0; i < result.size(); ++i) {
        const auto& r = result[i];
        rows[i] = {r.hidden_size, r.best_val_label_error, r.test_label_error, r.train_seconds, r.epochs};
      }
    }
  });
}

int nql_model_load(const char* path, const char* alphabet, nql_model** out) {
  return guard([&] {
    need(out, "out") = nullptr;
    std::optional<Alphabet> a;
    if (alphabet != nullptr) a = Alphabet::load(alphabet);
    auto net = load_model(need_str(path, "path"),
                          a ? std::optional<std::uint64_t>(a->fingerprint()) : std::nullopt);
    *out = new nql_model{std::move(net), std::move(a)};
  });
}

int nql_model_shape(const nql_model* model, size_t* input, size_t* hidden, size_t* classes) {
  return guard([&] {
    const auto& m = need(model, "model").model;
    if (input != nullptr) *input = m.input_size();
    if (hidden != nullptr) *hidden = m.hidden_size();
    if (classes != nullptr) *classes = m.alphabet_size();
  });
}

int nql_model_recognize(const nql_model* model, const char* line_image, int direction, char* buf, size_t cap,
                        size_t* needed) {
  return guard([&] {
    const auto& m = need(model, "model");
    const auto frames =
        extract_frames(normalize_height(load_image(need_str(line_image, "line_image"))), to_direction(direction));
    const auto decoded = best_path_decode(blstm_forward(m.model, frames).posteriors);
    std::string text;
    if (m.alphabet) {
      text = join_tokens(decode_labels(decoded.labels, *m.alphabet));
    } else {
      for (const auto l : decoded.labels) text += (text.empty() ? "" : " ") + std::to_string(l);
    }
    copy_out(text, buf, cap, needed);
  });
}

void nql_model_free(nql_model* model) { delete model; }

int nql_config_read(const char* path, nql_key_value_visitor visit, void* user) {
  return guard([&] {
    if (visit == nullptr) throw_usage("null argument: visit");
    for (const auto& [k, v] : read_key_values(need_str(path, "path"))) visit(k.c_str(), v.c_str(), user);
  });
}

int nql_pipeline_new(const char* config_path, nql_pipeline** out) {
  return guard([&] {
    need(out, "out") = nullptr;
    auto p = std::make_unique<nql_pipeline>();
    if (config_path != nullptr) p->config = PipelineConfig::load(config_path);
    *out = p.release();
  });
}

int nql_pipeline_set(nql_pipeline* pipeline, const char* key, const char* value) {
  return guard([&] { need(pipeline, "pipeline").config.set(need_str(key, "key"), need_str(value, "value")); });
}

int nql_pipeline_run(const nql_pipeline* pipeline, nql_stage_callback on_stage, nql_epoch_callback on_epoch,
                     void* user, nql_pipeline_report* report) {
  return guard([&] {
    StageCallback stage;
    if (on_stage != nullptr) stage = [on_stage, user](std::string_view s) { on_stage(std::string(s).c_str(), user); };
    const auto r = run_pipeline(need(pipeline, "pipeline").config, stage, wrap(on_epoch, user));
    if (report != nullptr) {
      *report = {r.pages, r.lines_segmented, r.lines_matched, r.mismatched_pages.size(),
                 r.training.history.size(), r.training.best_epoch, r.training.best_val_label_error,
                 r.test_label_error};
    }
  });
}

void nql_pipeline_free(nql_pipeline* pipeline) { delete pipeline; }

int nql_run_pipeline(const char* config_path, nql_pipeline_report* report) {
  if (config_path == nullptr) return fail(NQL_ERR_USAGE, "null argument: config_path");
  nql_pipeline* p = nullptr;
  int rc = nql_pipeline_new(config_path, &p);
  if (rc == NQL_OK) rc = nql_pipeline_run(p, nullptr, nullptr, nullptr, report);
  nql_pipeline_free(p);
  return rc;
}

}  // extern "C"
