#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>

#include "m2t/checkpoint.hpp"
#include "m2t/dataset.hpp"
#include "m2t/embedding.hpp"
#include "m2t/errors.hpp"
#include "m2t/metrics.hpp"
#include "m2t/segmentation.hpp"
#include "m2t/synth.hpp"
#include "m2t/text.hpp"
#include "m2t/viz.hpp"

#ifndef M2T_VERSION
#define M2T_VERSION "0.0.0"
#endif

namespace m2t::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Flag groups shared between subcommands.

struct ModelFlags {
  std::string encoder = "mlp";
  std::string attention = "local-recurrent";
  int D = 5;
  double overlap_alpha = 1.0;
  bool mask = true;
  bool causal = false;
  double gaussian_width = 0.0;
  std::size_t enc_hidden = 64;
  std::vector<std::size_t> mlp_dims;
  std::size_t embedding = 64;
  std::size_t dec_hidden = 64;
  std::size_t max_len = 30;
  double length_penalty = 0.7;
  std::uint64_t init_seed = 1;

  void attach(CLI::App* app) {
    app->add_option("--encoder", encoder, "Motion encoder")
        ->check(CLI::IsMember({"gru", "bigru", "mlp", "deep-mlp"}))
        ->capture_default_str();
    app->add_option("--attention", attention, "Attention mechanism")
        ->check(CLI::IsMember({"soft", "local", "local-recurrent"}))
        ->capture_default_str();
    app->add_option("--D", D, "Half-width of the attention window, in frames")->capture_default_str();
    app->add_option("--overlap-alpha", overlap_alpha, "Overlap proportion between successive windows")
        ->capture_default_str();
    app->add_flag("--mask,!--no-mask", mask, "Restrict the Gaussian to the window")->capture_default_str();
    app->add_flag("--causal", causal, "Attend to [p-D, p) instead of [p-D, p+D)");
    app->add_option("--gaussian-width", gaussian_width, "Gaussian width r; D/2 when 0")->capture_default_str();
    app->add_option("--enc-hidden", enc_hidden, "State size of the recurrent encoders")->capture_default_str();
    app->add_option("--mlp-dims", mlp_dims, "Layer widths of the MLP encoder (default 64 64; deep-mlp 64 64 64 64)");
    app->add_option("--embedding", embedding, "Word embedding size")->capture_default_str();
    app->add_option("--dec-hidden", dec_hidden, "Decoder state size")->capture_default_str();
    app->add_option("--max-len", max_len, "Maximum generated length")->capture_default_str();
    app->add_option("--length-penalty", length_penalty, "Beam length normalisation exponent")
        ->capture_default_str();
    app->add_option("--init-seed", init_seed, "Seed of the parameter initialisation")->capture_default_str();
  }

  ModelConfig resolve(std::size_t vocab_size, std::size_t input_dim) const {
    ModelConfig c;
    if (encoder == "deep-mlp") {
      c.encoder.kind = EncoderKind::mlp;
      c.encoder.mlp_dims = {64, 64, 64, 64};
    } else {
      c.encoder.kind = parse_encoder_kind(encoder);
    }
    if (!mlp_dims.empty()) c.encoder.mlp_dims = mlp_dims;
    c.encoder.input_dim = input_dim;
    c.encoder.hidden_dim = enc_hidden;
    c.attention.mode = parse_attention_mode(attention);
    c.attention.window = D;
    c.attention.overlap = overlap_alpha;
    c.attention.mask = mask;
    c.attention.causal = causal;
    if (gaussian_width > 0) c.attention.width = gaussian_width;
    c.decoder.vocab_size = vocab_size;
    c.decoder.embedding_dim = embedding;
    c.decoder.hidden_dim = dec_hidden;
    c.decoder.max_len = max_len;
    c.decoder.length_penalty = length_penalty;
    c.validate();
    return c;
  }
};

struct TrainFlags {
  TrainingConfig cfg;

  void attach(CLI::App* app) {
    app->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
    app->add_option("--teacher-forcing", cfg.teacher_forcing, "Probability of feeding the reference token")
        ->capture_default_str();
    app->add_flag("--tf-per-sequence", cfg.teacher_forcing_per_sequence,
                  "Draw the teacher-forcing coin once per sequence");
    app->add_option("--beta", cfg.beta, "Loss length-normalisation exponent")->capture_default_str();
    app->add_option("--batch", cfg.batch_size, "Mini-batch size")->capture_default_str();
    app->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
    app->add_option("--seed", cfg.seed, "Seed of batch order and teacher-forcing draws")->capture_default_str();
    app->add_option("--grad-clip", cfg.grad_clip, "Global gradient norm bound; 0 disables")->capture_default_str();
    app->add_option("--workers", cfg.workers, "Gradient threads; results do not depend on it")
        ->capture_default_str();
  }
};

struct DataFlags {
  std::string path;
  std::string annotations;
  std::size_t stride = 1;
  std::size_t width = kPoseWidth;

  void attach(CLI::App* app, bool required = true, bool with_annotations = false) {
    auto* o = app->add_option("--data", path, "Dataset, one JSON record per line");
    if (required) o->required();
    app->add_option("--stride", stride, "Keep every stride-th frame")->capture_default_str();
    app->add_option("--width", width, "Expected pose width")->capture_default_str();
    if (with_annotations)
      app->add_option("--annotations", annotations, "Annotation file overriding in-record annotations");
  }
};

// ---------------------------------------------------------------------------
// Helpers.

std::string file_digest(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

/// Collects the resolved configuration of a run and writes manifest.json.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args) {
    doc_["tool"] = "m2t";
    doc_["version"] = M2T_VERSION;
    doc_["command"] = std::move(command);
    doc_["argv"] = args;
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
  }
  json& operator[](const char* key) { return doc_[key]; }
  void input(const fs::path& p) {
    if (!p.empty()) doc_["inputs"].push_back({{"path", p.string()}, {"fnv1a64", file_digest(p)}});
  }
  void output(const fs::path& p) { doc_["outputs"].push_back(p.filename().string()); }
  void write(const fs::path& dir) const {
    std::ofstream out(dir / "manifest.json");
    out << doc_.dump(2) << "\n";
    if (!out) throw IoError("failed writing " + (dir / "manifest.json").string());
  }

 private:
  json doc_;
};

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw IoError("cannot create output directory " + dir);
  return p;
}

std::vector<MotionSample> load_samples(const DataFlags& d, std::ostream& err) {
  auto parsed = parse_dataset(fs::path(d.path), {d.width, d.stride});
  for (const auto& r : parsed.rejected) err << d.path << ":" << r.line << ": skipped: " << r.reason << "\n";
  if (parsed.samples.empty()) throw FormatError("no usable records in " + d.path);
  if (!d.annotations.empty()) {
    auto ann = read_annotations(d.annotations);
    for (auto& s : parsed.samples) {
      auto it = ann.find(s.id);
      if (it == ann.end()) continue;
      it->second.validate(static_cast<int>(s.length()));
      s.annotation = it->second;
    }
  }
  return parsed.samples;
}

std::map<std::string, const MotionSample*> index_by_id(const std::vector<MotionSample>& samples) {
  std::map<std::string, const MotionSample*> m;
  for (const auto& s : samples) m.emplace(s.id, &s);
  return m;
}

const MotionSample& find_sample(const std::map<std::string, const MotionSample*>& index, const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) throw ArgumentError("prediction " + id + " has no matching sample in the dataset");
  return *it->second;
}

json tensor_rows(const Tensor& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < t.cols(); ++c) row.push_back(t(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Tensor rows_tensor(const json& rows) {
  const std::size_t n = rows.size(), m = n ? rows[0].size() : 0;
  Tensor t({n, m});
  for (std::size_t r = 0; r < n; ++r) {
    if (rows[r].size() != m) throw FormatError("ragged attention matrix");
    for (std::size_t c = 0; c < m; ++c) t(r, c) = rows[r][c].get<double>();
  }
  return t;
}

json report_json(const CorpusReport& r) {
  json j;
  j["thetas"] = r.thetas;
  j["iou"] = r.iou;
  j["iop"] = r.iop;
  if (r.element_of_continuous) j["element_of"] = r.element_of;
  j["iou_continuous"] = r.iou_continuous;
  j["iop_continuous"] = r.iop_continuous;
  j["element_of_continuous"] = r.element_of_continuous ? json(*r.element_of_continuous) : json(nullptr);
  j["scored"] = r.scored;
  j["excluded"] = r.excluded;
  return j;
}

void print_report(std::ostream& out, const CorpusReport& r) {
  auto cell = [](std::optional<double> v) {
    char b[16];
    if (v)
      std::snprintf(b, sizeof b, "%.4f", *v);
    else
      std::snprintf(b, sizeof b, "-");
    return std::string(b);
  };
  char line[160];
  std::snprintf(line, sizeof line, "scored %zu, excluded %zu\n", r.scored, r.excluded.size());
  out << line << "theta    IoU      IoP      elem\n";
  const bool elem = r.element_of_continuous.has_value();
  for (std::size_t i = 0; i < r.thetas.size(); ++i) {
    std::snprintf(line, sizeof line, "%-8.2f %-8.4f %-8.4f %s\n", r.thetas[i], r.iou[i], r.iop[i],
                  cell(elem ? std::optional(r.element_of[i]) : std::nullopt).c_str());
    out << line;
  }
  std::snprintf(line, sizeof line, "cont     %-8.4f %-8.4f %s\n", r.iou_continuous, r.iop_continuous,
                cell(r.element_of_continuous).c_str());
  out << line;
}

std::vector<SegmentationInput> segmentation_inputs(const std::vector<Prediction>& preds,
                                                   const std::vector<MotionSample>& samples, std::ostream& err) {
  auto index = index_by_id(samples);
  std::vector<SegmentationInput> inputs;
  for (const auto& p : preds) {
    const auto& s = find_sample(index, p.id);
    if (!s.annotation) {
      err << "sample " << p.id << " has no annotation; skipped\n";
      continue;
    }
    inputs.push_back(segmentation_input(p, s));
  }
  if (inputs.empty()) throw ArgumentError("no annotated samples to segment");
  return inputs;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + p.string());
}

// ---------------------------------------------------------------------------
// Subcommands.

struct Context {
  const std::vector<std::string>& args;
  std::ostream& out;
  std::ostream& err;
};

struct SynthCmd {
  ScenarioConfig cfg;
  std::uint64_t seed = 1;
  std::vector<std::string> primitives;
  std::string out_dir;

  void attach(CLI::App* app) {
    app->add_option("--count", cfg.count, "Number of samples")->capture_default_str();
    app->add_option("--seed", seed, "Generator seed")->capture_default_str();
    app->add_option("--min-primitives", cfg.min_primitives, "Fewest primitives per sample")->capture_default_str();
    app->add_option("--max-primitives", cfg.max_primitives, "Most primitives per sample")->capture_default_str();
    app->add_option("--sequence", primitives, "Fixed primitive sequence, e.g. walk-forward turn");
    app->add_option("--noise", cfg.noise, "Coordinate noise standard deviation")->capture_default_str();
    app->add_option("--fps", cfg.fps, "Frame rate")->capture_default_str();
    app->add_option("--id-prefix", cfg.id_prefix, "Sample id prefix")->capture_default_str();
    app->add_option("--out", out_dir, "Output directory")->required();
  }

  int operator()(Context& ctx) {
    for (const auto& p : primitives) cfg.sequence.push_back(parse_primitive(p));
    auto samples = synth_generate(cfg, seed);
    auto dir = prepare_dir(out_dir);
    write_dataset(dir / "dataset.jsonl", samples);
    Manifest m("synth", ctx.args);
    m["seed"] = seed;
    m["config"] = {{"count", cfg.count},         {"min_primitives", cfg.min_primitives},
                   {"max_primitives", cfg.max_primitives}, {"sequence", primitives},
                   {"noise", cfg.noise},         {"fps", cfg.fps},
                   {"id_prefix", cfg.id_prefix}};
    m.output(dir / "dataset.jsonl");
    m.write(dir);
    ctx.out << "wrote " << samples.size() << " samples to " << (dir / "dataset.jsonl").string() << "\n";
    return kOk;
  }
};

struct TrainCmd {
  DataFlags data;
  ModelFlags model;
  TrainFlags training;
  std::size_t min_freq = 1;
  std::string out_dir;

  void attach(CLI::App* app) {
    data.attach(app);
    model.attach(app);
    training.attach(app);
    app->add_option("--min-freq", min_freq, "Drop words rarer than this")->capture_default_str();
    app->add_option("--out", out_dir, "Output directory")->required();
  }

  int operator()(Context& ctx) {
    auto samples = load_samples(data, ctx.err);
    training.cfg.validate();
    auto vocab = build_vocab(samples, min_freq);
    auto normalizer = fit_normalizer(samples);
    ModelConfig mc = model.resolve(vocab.size(), data.width);
    Model m = Model::create(mc, model.init_seed);
    m.set_normalizer(normalizer);
    auto examples = make_examples(samples, vocab, normalizer);
    auto dir = prepare_dir(out_dir);

    std::ofstream curve(dir / "loss_curve.csv");
    curve << "epoch,loss,seconds\n";
    auto result = train(m, examples, training.cfg, [&](const EpochStats& s) {
      char line[96];
      std::snprintf(line, sizeof line, "%zu,%.17g,%.3f\n", s.epoch, s.mean_loss, s.seconds);
      curve << line;
      curve.flush();
      std::snprintf(line, sizeof line, "epoch %zu  loss %.5f  (%.1fs)\n", s.epoch + 1, s.mean_loss, s.seconds);
      ctx.out << line << std::flush;
    });
    if (!curve) throw IoError("failed writing loss_curve.csv");

    save_checkpoint(dir / "checkpoint.json", {m, vocab, training.cfg, result.loss_curve});
    Manifest man("train", ctx.args);
    man["seed"] = {{"init", model.init_seed}, {"training", training.cfg.seed}};
    man["model"] = json::parse(to_json(mc));
    man["training"] = json::parse(to_json(training.cfg));
    man["data"] = {{"stride", data.stride}, {"width", data.width}, {"min_freq", min_freq},
                   {"samples", samples.size()}, {"examples", examples.size()}};
    man.input(data.path);
    man.output(dir / "checkpoint.json");
    man.output(dir / "loss_curve.csv");
    man.write(dir);
    return kOk;
  }
};

struct GenerateCmd {
  std::string checkpoint;
  DataFlags data;
  std::size_t beam = 1;
  std::size_t workers = 1;
  bool export_attention = false;
  double sharpness = 100.0;
  std::string out_dir;

  void attach(CLI::App* app) {
    app->add_option("--checkpoint", checkpoint, "Checkpoint written by train")->required();
    data.attach(app, true, true);
    app->add_option("--beam", beam, "Beam size; 1 is greedy")->capture_default_str();
    app->add_option("--workers", workers, "Decoding threads")->capture_default_str();
    app->add_flag("--export", export_attention, "Also write attention exports per sample");
    app->add_option("--sharpness", sharpness, "Transparency sharpness F")->capture_default_str();
    app->add_option("--out", out_dir, "Output directory")->required();
  }

  int operator()(Context& ctx) {
    if (beam == 0) throw ConfigError("beam size must be at least 1");
    auto ck = load_checkpoint(checkpoint);
    auto samples = load_samples(data, ctx.err);
    auto preds = predict_all(ck.model, ck.vocabulary, samples, beam, std::max<std::size_t>(workers, 1));
    auto dir = prepare_dir(out_dir);
    write_predictions(dir / "predictions.jsonl", preds);
    {
      std::ofstream cap(dir / "captions.txt");
      for (const auto& p : preds) cap << p.id << "\t" << join(p.sentence()) << "\n";
      if (!cap) throw IoError("failed writing captions.txt");
    }
    Manifest man("generate", ctx.args);
    man["model"] = json::parse(to_json(ck.model.config()));
    man["decoding"] = {{"beam", beam}, {"max_len", ck.model.config().decoder.max_len}};
    man.input(checkpoint);
    man.input(data.path);
    man.input(data.annotations);
    man.output(dir / "predictions.jsonl");
    man.output(dir / "captions.txt");
    if (export_attention) {
      auto index = index_by_id(samples);
      for (const auto& p : preds) {
        const auto& s = find_sample(index, p.id);
        std::optional<SegmentationResult> seg;
        if (s.annotation) {
          if (auto r = segment_sample(segmentation_input(p, s))) seg = r->result;
        }
        export_attention_files(p, seg ? &*seg : nullptr, dir / "attention" / p.id);
      }
      man["sharpness"] = sharpness;
      man.output(dir / "attention");
    }
    man.write(dir);
    auto b = corpus_bleu(preds, samples);
    char line[96];
    std::snprintf(line, sizeof line, "generated %zu captions, BLEU@4 %.4f\n", preds.size(), b.score);
    ctx.out << line;
    return kOk;
  }

  void export_attention_files(const Prediction& p, const SegmentationResult* seg, const fs::path& dir) const {
    m2t::export_attention(p.result, p.words, seg, prepare_dir(dir.string()), sharpness);
  }
};

struct SegmentCmd {
  std::string predictions;
  DataFlags data;
  std::string out_dir;

  void attach(CLI::App* app) {
    app->add_option("--predictions", predictions, "predictions.jsonl written by generate")->required();
    data.attach(app, true, true);
    app->add_option("--out", out_dir, "Output directory")->required();
  }

  int operator()(Context& ctx) {
    auto preds = read_predictions(predictions);
    auto samples = load_samples(data, ctx.err);
    auto inputs = segmentation_inputs(preds, samples, ctx.err);
    auto dir = prepare_dir(out_dir);
    std::ofstream out(dir / "segments.jsonl");
    std::size_t aligned = 0;
    for (const auto& in : inputs) {
      json j{{"id", in.id}};
      auto s = segment_sample(in);
      j["alignable"] = s.has_value();
      if (s) {
        ++aligned;
        j["k"] = s->result.alignment.k;
        j["eos"] = s->result.alignment.eos;
        json segs = json::array();
        for (const auto& m : s->result.motion_segments)
          segs.push_back({{"start", m.interval.start}, {"end", m.interval.end}, {"gap", m.gap}});
        j["motion_segments"] = segs;
        j["iou"] = s->iou;
        j["iop"] = s->iop;
        j["element_of"] = s->element_of ? json(*s->element_of) : json(nullptr);
      }
      out << j.dump() << "\n";
    }
    if (!out) throw IoError("failed writing segments.jsonl");
    Manifest man("segment", ctx.args);
    man.input(predictions);
    man.input(data.path);
    man.input(data.annotations);
    man.output(dir / "segments.jsonl");
    man.write(dir);
    ctx.out << "segmented " << aligned << " of " << inputs.size() << " annotated samples\n";
    return kOk;
  }
};

struct ScoreSegCmd {
  std::string predictions;
  DataFlags data;
  std::vector<double> thetas = default_theta_grid();
  std::string out_dir;

  void attach(CLI::App* app) {
    app->add_option("--predictions", predictions, "predictions.jsonl written by generate")->required();
    data.attach(app, true, true);
    app->add_option("--theta", thetas, "Threshold grid (default 0, 0.1, ..., 1)");
    app->add_option("--out", out_dir, "Output directory")->required();
  }

  int operator()(Context& ctx) {
    auto preds = read_predictions(predictions);
    auto samples = load_samples(data, ctx.err);
    auto report = corpus_scores(segmentation_inputs(preds, samples, ctx.err), thetas);
    auto dir = prepare_dir(out_dir);
    write_json(dir / "segmentation_report.json", report_json(report));
    Manifest man("score-seg", ctx.args);
    man["thetas"] = thetas;
    man.input(predictions);
    man.input(data.path);
    man.input(data.annotations);
    man.output(dir / "segmentation_report.json");
    man.write(dir);
    print_report(ctx.out, report);
    return kOk;
  }
};

struct ScoreTextCmd {
  std::string predictions;
  DataFlags data;
  std::string embeddings;
  bool smoothing = false;
  std::string out_dir;

  void attach(CLI::App* app) {
    app->add_option("--predictions", predictions, "predictions.jsonl written by generate")->required();
    data.attach(app);
    app->add_option("--embeddings", embeddings, "Sentence embedding table; hashed bag of words when absent");
    app->add_flag("--smoothing", smoothing, "Add-one smoothing for orders >= 2");
    app->add_option("--out", out_dir, "Output directory")->required();
  }

  int operator()(Context& ctx) {
    auto preds = read_predictions(predictions);
    auto samples = load_samples(data, ctx.err);
    auto index = index_by_id(samples);
    std::vector<MotionSample> matched;
    std::vector<std::vector<std::string>> refs, hyps;
    for (const auto& p : preds) {
      matched.push_back(find_sample(index, p.id));
      refs.push_back(matched.back().descriptions);
      hyps.push_back({join(p.sentence())});
    }
    auto b = corpus_bleu(preds, matched, smoothing);
    std::unique_ptr<EmbeddingProvider> provider;
    if (embeddings.empty())
      provider = std::make_unique<HashedBagOfWords>();
    else
      provider = std::make_unique<FileEmbeddingProvider>(embeddings);
    std::optional<double> semantic;
    try {
      semantic = semantic_score(refs, hyps, *provider);
    } catch (const ArgumentError& e) {
      // Empty captions cannot be embedded; BLEU still stands.
      ctx.err << "semantic score unavailable: " << e.what() << "\n";
    }
    auto dir = prepare_dir(out_dir);
    json j{{"bleu4", b.score},
           {"brevity_penalty", b.brevity_penalty},
           {"precisions", b.precisions},
           {"hypothesis_length", b.hypothesis_length},
           {"reference_length", b.reference_length},
           {"samples", preds.size()},
           {"semantic", semantic ? json(*semantic) : json(nullptr)},
           {"embedding", embeddings.empty() ? "hashed-bag-of-words" : embeddings}};
    write_json(dir / "text_scores.json", j);
    Manifest man("score-text", ctx.args);
    man["smoothing"] = smoothing;
    man.input(predictions);
    man.input(data.path);
    man.input(embeddings);
    man.output(dir / "text_scores.json");
    man.write(dir);
    char line[128];
    std::snprintf(line, sizeof line, "BLEU@4 %.4f  semantic %s\n", b.score,
                  semantic ? std::to_string(*semantic).c_str() : "-");
    ctx.out << line;
    return kOk;
  }
};

struct ExportCmd {
  std::string predictions;
  DataFlags data;
  std::vector<std::string> ids;
  double sharpness = 100.0;
  std::string out_dir;

  void attach(CLI::App* app) {
    app->add_option("--predictions", predictions, "predictions.jsonl written by generate")->required();
    data.attach(app, false, true);
    app->add_option("--id", ids, "Only export these sample ids");
    app->add_option("--sharpness", sharpness, "Transparency sharpness F")->capture_default_str();
    app->add_option("--out", out_dir, "Output directory")->required();
  }

  int operator()(Context& ctx) {
    auto preds = read_predictions(predictions);
    std::vector<MotionSample> samples;
    if (!data.path.empty()) samples = load_samples(data, ctx.err);
    auto index = index_by_id(samples);
    auto dir = prepare_dir(out_dir);
    std::size_t n = 0;
    for (const auto& p : preds) {
      if (!ids.empty() && std::find(ids.begin(), ids.end(), p.id) == ids.end()) continue;
      std::optional<SegmentationResult> seg;
      auto it = index.find(p.id);
      if (it != index.end() && it->second->annotation) {
        if (auto r = segment_sample(segmentation_input(p, *it->second))) seg = r->result;
      }
      export_attention(p.result, p.words, seg ? &*seg : nullptr, prepare_dir((dir / p.id).string()), sharpness);
      ++n;
    }
    Manifest man("export-attn", ctx.args);
    man["sharpness"] = sharpness;
    man["ids"] = ids;
    man.input(predictions);
    man.input(data.path);
    man.input(data.annotations);
    man.write(dir);
    ctx.out << "exported " << n << " samples\n";
    return kOk;
  }
};

/// Sequential sweep. Every combination is trained on the same split and
/// scored on the validation part.
struct GridCmd {
  DataFlags data;
  ModelFlags model;
  TrainFlags training;
  double val_fraction = 0.2;
  std::uint64_t split_seed = 1;
  std::vector<std::string> encoders{"mlp"};
  std::vector<int> windows{5};
  std::vector<double> alphas{1.0};
  std::vector<double> lrs{1e-3};
  std::vector<std::size_t> layers{2};
  std::vector<std::size_t> widths{64};
  std::string out_dir;

  void attach(CLI::App* app) {
    data.attach(app);
    model.attach(app);
    training.attach(app);
    app->add_option("--val-fraction", val_fraction, "Held-out share of the data")->capture_default_str();
    app->add_option("--split-seed", split_seed, "Seed of the train/validation split")->capture_default_str();
    app->add_option("--grid-encoder", encoders, "Encoders to try")->capture_default_str();
    app->add_option("--grid-D", windows, "Window half-widths to try")->capture_default_str();
    app->add_option("--grid-alpha", alphas, "Overlap proportions to try")->capture_default_str();
    app->add_option("--grid-lr", lrs, "Learning rates to try")->capture_default_str();
    app->add_option("--grid-layers", layers, "MLP depths L to try")->capture_default_str();
    app->add_option("--grid-width", widths, "MLP hidden widths d_i to try; the last layer keeps --enc-dim")
        ->capture_default_str();
    app->add_option("--enc-dim", enc_dim, "Output width of the MLP encoder")->capture_default_str();
    app->add_option("--out", out_dir, "Output directory")->required();
  }
  std::size_t enc_dim = 64;

  int operator()(Context& ctx) {
    training.cfg.validate();
    auto samples = load_samples(data, ctx.err);
    auto split = split_dataset(samples, val_fraction, 0.0, split_seed);
    if (split.val.empty() || split.train.empty()) throw ConfigError("grid needs non-empty train and validation parts");
    auto vocab = build_vocab(split.train, 1);
    auto normalizer = fit_normalizer(split.train);
    auto examples = make_examples(split.train, vocab, normalizer);
    auto dir = prepare_dir(out_dir);
    std::ofstream rows(dir / "grid.jsonl");

    json best;
    std::size_t run = 0;
    for (const auto& enc : encoders)
      for (int D : windows)
        for (double alpha : alphas)
          for (double lr : lrs)
            for (std::size_t L : layers)
              for (std::size_t w : widths) {
                const bool is_mlp = enc == "mlp" || enc == "deep-mlp";
                // Depth and width only vary the MLP; recurrent encoders run once.
                if (!is_mlp && (L != layers.front() || w != widths.front())) continue;
                ModelFlags f = model;
                f.encoder = enc;
                f.D = D;
                f.overlap_alpha = alpha;
                if (is_mlp) {
                  f.mlp_dims.assign(L, w);
                  f.mlp_dims.back() = enc_dim;
                }
                ModelConfig mc = f.resolve(vocab.size(), data.width);
                TrainingConfig tc = training.cfg;
                tc.learning_rate = lr;
                Model m = Model::create(mc, model.init_seed);
                m.set_normalizer(normalizer);
                auto curve = train(m, examples, tc).loss_curve;
                auto preds = predict_all(m, vocab, split.val, 1, tc.workers);
                json row{{"run", run++},
                         {"encoder", enc},
                         {"D", D},
                         {"overlap_alpha", alpha},
                         {"lr", lr},
                         {"mlp_dims", is_mlp ? json(mc.encoder.mlp_dims) : json(nullptr)},
                         {"final_loss", curve.empty() ? 0.0 : curve.back()},
                         {"bleu4", corpus_bleu(preds, split.val).score}};
                std::vector<SegmentationInput> inputs;
                for (std::size_t i = 0; i < preds.size(); ++i)
                  if (split.val[i].annotation) inputs.push_back(segmentation_input(preds[i], split.val[i]));
                row["element_of_continuous"] = nullptr;
                if (!inputs.empty() && mc.attention.has_position()) {
                  try {
                    auto r = corpus_scores(inputs, default_theta_grid());
                    if (r.element_of_continuous) row["element_of_continuous"] = *r.element_of_continuous;
                    row["iou_continuous"] = r.iou_continuous;
                  } catch (const ArgumentError&) {
                    // Nothing alignable on this configuration.
                  }
                }
                rows << row.dump() << "\n";
                rows.flush();
                ctx.out << row.dump() << "\n" << std::flush;
                if (best.is_null() || row["bleu4"].get<double>() > best["bleu4"].get<double>()) best = row;
              }
    if (!rows) throw IoError("failed writing grid.jsonl");
    write_json(dir / "best.json", best);
    Manifest man("grid", ctx.args);
    man["training"] = json::parse(to_json(training.cfg));
    man["split"] = {{"val_fraction", val_fraction}, {"seed", split_seed}};
    man.input(data.path);
    man.output(dir / "grid.jsonl");
    man.output(dir / "best.json");
    man.write(dir);
    return kOk;
  }
};

int categorize(std::ostream& err, const char* kind, const std::exception& e, int code) {
  err << "error (" << kind << "): " << e.what() << "\n";
  return code;
}

}  // namespace

void write_predictions(const fs::path& path, std::span<const Prediction> predictions) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& p : predictions) {
    const auto& r = p.result;
    json segs = json::array();
    for (const auto& s : r.segments) segs.push_back({s.start, s.end});
    json j{{"id", p.id},
           {"words", p.words},
           {"tokens", r.tokens},
           {"log_probs", r.log_probs},
           {"score", r.score},
           {"normalized_score", r.normalized_score},
           {"positions", r.positions},
           {"segments", segs},
           {"frames", r.attention.rank() == 2 ? r.attention.cols() : 0},
           {"attention", tensor_rows(r.attention)},
           {"raw_attention", tensor_rows(r.raw_attention)}};
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<Prediction> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Prediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      Prediction p;
      p.id = j.at("id").get<std::string>();
      p.words = j.at("words").get<std::vector<std::string>>();
      auto& r = p.result;
      r.tokens = j.at("tokens").get<std::vector<TokenId>>();
      r.log_probs = j.at("log_probs").get<std::vector<double>>();
      r.score = j.at("score").get<double>();
      r.normalized_score = j.at("normalized_score").get<double>();
      r.positions = j.at("positions").get<std::vector<double>>();
      for (const auto& s : j.at("segments")) r.segments.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
      const auto frames = j.at("frames").get<std::size_t>();
      r.attention = r.tokens.empty() ? Tensor({0, frames}) : rows_tensor(j.at("attention"));
      r.raw_attention = r.tokens.empty() ? Tensor({0, frames}) : rows_tensor(j.at("raw_attention"));
      if (p.words.size() != r.tokens.size() || r.segments.size() != r.tokens.size() ||
          r.attention.rows() != r.tokens.size())
        throw FormatError("token, word, segment and attention counts differ");
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Motion captioning with synchronised attention", "m2t"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("m2t ") + M2T_VERSION);

  SynthCmd synth;
  TrainCmd train_cmd;
  GenerateCmd generate;
  SegmentCmd segment;
  ScoreSegCmd score_seg;
  ScoreTextCmd score_text;
  ExportCmd export_cmd;
  GridCmd grid;

  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic annotated dataset");
  auto* c_train = app.add_subcommand("train", "Fit a model and save a checkpoint and loss curve");
  auto* c_generate = app.add_subcommand("generate", "Caption motions with greedy or beam decoding");
  auto* c_segment = app.add_subcommand("segment", "Segment predictions against annotated action words");
  auto* c_score_seg = app.add_subcommand("score-seg", "IoU, IoP and element-of over a threshold grid");
  auto* c_score_text = app.add_subcommand("score-text", "BLEU@4 and semantic similarity of predictions");
  auto* c_export = app.add_subcommand("export-attn", "Write attention, transparency, trace and segment maps");
  auto* c_grid = app.add_subcommand("grid", "Sequential hyperparameter sweep");
  synth.attach(c_synth);
  train_cmd.attach(c_train);
  generate.attach(c_generate);
  segment.attach(c_segment);
  score_seg.attach(c_score_seg);
  score_text.attach(c_score_text);
  export_cmd.attach(c_export);
  grid.attach(c_grid);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Context ctx{args, out, err};
  try {
    if (*c_synth) return synth(ctx);
    if (*c_train) return train_cmd(ctx);
    if (*c_generate) return generate(ctx);
    if (*c_segment) return segment(ctx);
    if (*c_score_seg) return score_seg(ctx);
    if (*c_score_text) return score_text(ctx);
    if (*c_export) return export_cmd(ctx);
    if (*c_grid) return grid(ctx);
  } catch (const IoError& e) {
    return categorize(err, "io", e, kIo);
  } catch (const VersionError& e) {
    return categorize(err, "version", e, kVersion);
  } catch (const FormatError& e) {
    return categorize(err, "format", e, kFormat);
  } catch (const ConfigError& e) {
    return categorize(err, "config", e, kConfig);
  } catch (const std::exception& e) {
    return categorize(err, "runtime", e, kRuntime);
  }
  return kUsage;
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace m2t::cli
