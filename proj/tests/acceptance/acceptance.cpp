// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria. Pass criterion numbers as arguments to run a
// subset, e.g. `acceptance 1 3 8`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gradcases.hpp"
#include "m2t/pipeline.hpp"
#include "m2t/segmentation.hpp"
#include "m2t/synth.hpp"
#include "m2t/training.hpp"
#include "m2t/viz.hpp"
#include "oracles.hpp"

using namespace m2t;
using namespace m2t::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Finite-difference checks of every differentiable op and decode_step.
Outcome gradients() {
  constexpr int kInstances = 100;
  constexpr double kTolerance = 1e-4;
  constexpr double kBudget = 60.0;
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_case;
  std::size_t checks = 0;
  const auto cases = gradient_cases();
  for (std::size_t c = 0; c < cases.size(); ++c) {
    std::mt19937_64 rng(1000 + c);
    for (int i = 0; i < kInstances; ++i, ++checks) {
      const double e = cases[c].run(rng);
      if (!(e <= worst)) {
        worst = e;
        worst_case = cases[c].name;
      }
    }
  }
  const double dt = seconds_since(t0);
  return {worst < kTolerance && dt < kBudget,
          fmt("%zu cases x %d instances, max rel error %.2e (%s) < 1e-4, %.1fs < 60s", cases.size(), kInstances,
              worst, worst_case.c_str(), dt)};
}

// 2. Recurrent local attention: monotone positions, disjoint windows at
// α=0 and masked support equal to S_t.
Outcome attention_invariants() {
  constexpr int kDraws = 1000;
  std::mt19937_64 rng(2);
  std::size_t steps = 0, monotone_fail = 0, disjoint_fail = 0, support_fail = 0, disjoint_checked = 0,
              support_checked = 0;
  for (int d = 0; d < kDraws; ++d) {
    AttentionConfig cfg;
    cfg.mode = AttentionMode::local_recurrent;
    cfg.window = static_cast<int>(random_dim(rng, 1, 5));
    cfg.overlap = d % 3 == 0 ? 0.0 : std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    cfg.mask = d % 2 == 0;
    const auto r = random_trace(rng, cfg);
    for (std::size_t t = 0; t < r.positions.size(); ++t, ++steps) {
      if (t > 0 && r.positions[t] - r.positions[t - 1] < cfg.epsilon() - 1e-9) ++monotone_fail;
      if (t > 0 && cfg.overlap == 0.0) {
        ++disjoint_checked;
        if (overlap(r.segments[t], r.segments[t - 1]) != 0) ++disjoint_fail;
      }
      if (cfg.mask) {
        ++support_checked;
        for (std::size_t j = 0; j < r.attention.cols(); ++j)
          if ((r.attention(t, j) != 0.0) != r.segments[t].contains(static_cast<int>(j))) {
            ++support_fail;
            break;
          }
      }
    }
  }
  return {monotone_fail == 0 && disjoint_fail == 0 && support_fail == 0 && disjoint_checked > 0 && support_checked > 0,
          fmt("%d draws, %zu steps: monotone violations %zu, alpha=0 overlaps %zu/%zu, mask support mismatches %zu/%zu",
              kDraws, steps, monotone_fail, disjoint_fail, disjoint_checked, support_fail, support_checked)};
}

// 3. Metrics against brute-force oracles.
Outcome metric_oracles() {
  std::mt19937_64 rng(3);
  double bleu_gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 10, vocab = 3 + rng() % 8;
    auto sentence = [&] {
      Sentence s(1 + rng() % 14);
      for (auto& w : s) w = "w" + std::to_string(rng() % vocab);
      return s;
    };
    std::vector<Sentence> hyps;
    std::vector<std::vector<Sentence>> refs(n);
    for (std::size_t i = 0; i < n; ++i) {
      hyps.push_back(sentence());
      for (std::size_t k = 0; k < 1 + rng() % 4; ++k) refs[i].push_back(sentence());
    }
    bleu_gap = std::max(bleu_gap, std::abs(bleu4(hyps, refs) - oracle::bleu4(hyps, refs)));
  }

  std::size_t interval_mismatch = 0, element_mismatch = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto p = oracle::random_interval(rng), g = oracle::random_interval(rng);
    if (iou(p, g) != oracle::iou(p, g) || iop(p, g) != oracle::iop(p, g)) ++interval_mismatch;

    // Element-of of one segment of 1–6 positions against the frame set of G.
    const std::size_t words = 1 + rng() % 6;
    std::vector<double> pos;
    std::uniform_real_distribution<double> u(-1.0, 201.0);
    for (std::size_t i = 0; i < words; ++i) pos.push_back(i % 3 == 0 ? std::floor(u(rng)) + 0.5 : u(rng));
    const WordAlignment a{{0}, words - 1};
    const SegmentInterval truth[] = {g};
    const auto frames = oracle::frames_of(g);
    std::size_t inside = 0;
    for (double x : pos) {
      // Nearest frame, halves rounding up.
      const int f = static_cast<int>(std::floor(x + 0.5));
      inside += frames.count(f);
    }
    const double expected = static_cast<double>(inside) / static_cast<double>(words);
    if (element_of_per_segment(pos, a, truth).at(0) != expected) ++element_mismatch;
  }
  return {bleu_gap <= 1e-9 && interval_mismatch == 0 && element_mismatch == 0,
          fmt("BLEU max gap %.1e over 50 corpora (<= 1e-9); IoU/IoP mismatches %zu, element-of mismatches %zu over "
              "1e4 trials",
              bleu_gap, interval_mismatch, element_mismatch)};
}

// 4. Overfitting one (motion, caption) pair.
Outcome overfit() {
  ScenarioConfig sc;
  sc.count = 1;
  const auto samples = synth_generate(sc, 4);
  const auto vocab = build_vocab(samples, 1);
  const auto norm = fit_normalizer(samples);
  auto examples = make_examples(samples, vocab, norm);
  examples.resize(1);
  ModelConfig mc;
  mc.decoder.vocab_size = vocab.size();
  TrainingConfig tc;
  tc.epochs = 300;
  tc.batch_size = 1;
  tc.seed = 4;
  auto run = [&] {
    Model m = Model::create(mc, 4);
    m.set_normalizer(norm);
    return train(m, examples, tc).loss_curve;
  };
  const auto t0 = Clock::now();
  const auto a = run();
  const auto b = run();
  const bool bitwise = a == b;
  return {a.back() < 0.01 && bitwise,
          fmt("final loss %.2e after 300 epochs (< 0.01), second run bitwise identical: %s, %.1fs", a.back(),
              bitwise ? "yes" : "no", seconds_since(t0))};
}

// 5. Synthetic synchronisation: MLP encoder against GRU encoder.
Outcome synchronisation() {
  constexpr std::size_t kTrain = 2000, kTest = 200;
  const auto t0 = Clock::now();
  ScenarioConfig sc;
  sc.count = kTrain + kTest;
  const auto all = synth_generate(sc, 7);
  const std::vector<MotionSample> trn(all.begin(), all.begin() + kTrain), test(all.begin() + kTrain, all.end());
  const auto vocab = build_vocab(trn, 1);
  const auto norm = fit_normalizer(trn);
  const auto examples = make_examples(trn, vocab, norm);
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());

  struct Run {
    std::vector<Prediction> preds;
    double bleu = 0.0;
  };
  auto fit = [&](EncoderKind enc) {
    ModelConfig mc;
    mc.encoder.kind = enc;
    mc.attention.mode = AttentionMode::local_recurrent;
    mc.attention.window = 5;
    mc.attention.mask = true;
    mc.decoder.vocab_size = vocab.size();
    TrainingConfig tc;
    tc.epochs = 5;
    tc.learning_rate = 3e-3;
    tc.batch_size = 16;
    tc.teacher_forcing = 0.5;
    tc.workers = workers;
    Model m = Model::create(mc, 1);
    m.set_normalizer(norm);
    train(m, examples, tc);
    Run r;
    r.preds = predict_all(m, vocab, test, 1, workers);
    r.bleu = corpus_bleu(r.preds, test).score;
    return r;
  };
  const Run mlp = fit(EncoderKind::mlp);
  const Run gru = fit(EncoderKind::gru);

  // Compare on the samples both models make alignable.
  std::vector<SegmentationInput> in_mlp, in_gru;
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto a = segmentation_input(mlp.preds[i], test[i]);
    auto b = segmentation_input(gru.preds[i], test[i]);
    if (segment_sample(a) && segment_sample(b)) {
      in_mlp.push_back(std::move(a));
      in_gru.push_back(std::move(b));
    }
  }
  if (in_mlp.empty()) return {false, "no test sample is alignable under both models"};
  const auto rm = corpus_scores(in_mlp, default_theta_grid());
  const auto rg = corpus_scores(in_gru, default_theta_grid());
  const double em = rm.element_of_continuous.value_or(0.0), eg = rg.element_of_continuous.value_or(0.0);
  const double dt = seconds_since(t0);
  const bool pass = em >= 0.70 && em - eg >= 0.15 && mlp.bleu >= 0.85 && gru.bleu >= 0.85 && dt <= 1800.0;
  return {pass, fmt("element-of MLP %.3f (>= 0.70), GRU %.3f, gap %.3f (>= 0.15) on %zu common samples; "
                    "BLEU@4 MLP %.3f, GRU %.3f (>= 0.85); %.0fs (<= 1800s)",
                    em, eg, em - eg, rm.scored, mlp.bleu, gru.bleu, dt)};
}

// 6. Beam search consistency.
Outcome beam_consistency() {
  std::mt19937_64 rng(6);
  std::size_t greedy_mismatch = 0, enum_mismatch = 0;
  for (int i = 0; i < 100; ++i) {
    auto cfg = tiny_model_config(static_cast<EncoderKind>(i % 3), static_cast<AttentionMode>((i / 3) % 3), i % 2);
    Model model = random_model(cfg, rng, 1.5);
    const Tensor x = random_tensor({random_dim(rng, 3, 16), cfg.encoder.input_dim}, rng);
    const auto g = greedy_decode(model, x, 10);
    const auto b = beam_decode(model, x, 1, 10);
    if (b.front().tokens != g.tokens) ++greedy_mismatch;
  }
  constexpr int kToy = 20;
  for (int i = 0; i < kToy; ++i) {
    auto cfg = tiny_model_config(static_cast<EncoderKind>(i % 3), AttentionMode::local_recurrent, true);
    cfg.decoder.vocab_size = 5;
    Model model = random_model(cfg, rng, 1.5);
    const Tensor x = random_tensor({random_dim(rng, 3, 8), cfg.encoder.input_dim}, rng);
    Tape tape(false);
    ParamBinding binding(tape, model.params());
    DecodingContext ctx(model, binding, x);
    ModelSession session(ctx);
    SearchOptions opt;
    opt.max_len = 4;
    opt.length_penalty = cfg.decoder.length_penalty;
    const auto best = oracle::exhaustive_best(session, opt).first;
    // 5^4 = 625 hypotheses: a beam this wide never prunes.
    if (beam_decode(model, x, 625, 4).front().tokens != best) ++enum_mismatch;
  }
  return {greedy_mismatch == 0 && enum_mismatch == 0,
          fmt("beam=1 vs greedy mismatches %zu/100; exhaustive V=5 max_len=4 mismatches %zu/%d", greedy_mismatch,
              enum_mismatch, kToy)};
}

// 7. The README states which published figures are out of reach here.
Outcome readme_statement() {
  std::ifstream in(M2T_README_PATH);
  if (!in) return {false, std::string("cannot read ") + M2T_README_PATH};
  const std::string text{std::istreambuf_iterator<char>(in), {}};
  std::vector<std::string> missing;
  for (const char* needle : {"31.6", "25.4", "directional"})
    if (text.find(needle) == std::string::npos) missing.push_back(needle);
  std::string m;
  for (const auto& s : missing) m += " " + s;
  return {missing.empty(), missing.empty() ? "README names 31.6, 25.4 and marks them directional targets"
                                           : "README lacks:" + m};
}

// 8. Exported transparency and segment coefficients.
Outcome export_exactness() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "m2t_acceptance_export";
  std::mt19937_64 rng(8);
  std::size_t rows = 0, bad_rows = 0, single = 0;
  double gamma_gap = 0.0;
  for (int draw = 0; draw < 200; ++draw) {
    AttentionConfig cfg;
    cfg.mode = static_cast<AttentionMode>(draw % 3);
    cfg.window = static_cast<int>(random_dim(rng, 1, 4));
    cfg.mask = draw % 2 == 0;
    const auto r = random_trace(rng, cfg);
    const std::size_t n = r.tokens.size();
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n; ++i) words.push_back("w" + std::to_string(i));
    // Random action-word indices; each row starts a segment with probability 1/2.
    WordAlignment al{{0}, n - 1};
    for (std::size_t i = 1; i + 1 < n; ++i)
      if (rng() % 2) al.k.push_back(i);
    const SegmentationResult seg{al, motion_segmentation(r.segments, al)};
    fs::remove_all(dir);
    const auto files = export_attention(r, words, &seg, dir);
    const auto v = read_table(files.transparency).values;
    for (std::size_t i = 0; i < v.rows(); ++i, ++rows) {
      double mx = -1.0;
      for (std::size_t j = 0; j < v.cols(); ++j) mx = std::max(mx, v(i, j));
      if (mx != 1.0) ++bad_rows;
    }
    const auto alpha = read_table(files.attention).values;
    const auto gamma = read_table(files.gamma).values;
    for (std::size_t m = 0; m < al.segment_count(); ++m) {
      if (al.segment_end(m) - al.segment_begin(m) != 1) continue;
      ++single;
      for (std::size_t j = 0; j < alpha.cols(); ++j)
        gamma_gap = std::max(gamma_gap, std::abs(gamma(m, j) - alpha(al.segment_begin(m), j)));
    }
  }
  fs::remove_all(dir);
  return {bad_rows == 0 && single > 0 && gamma_gap <= 1e-12,
          fmt("transparency rows with max != 1: %zu/%zu; single-word segments %zu, max |gamma - alpha| %.1e "
              "(<= 1e-12)",
              bad_rows, rows, single, gamma_gap)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradients},
      {"attention invariants", attention_invariants},
      {"metric oracles", metric_oracles},
      {"single-sample overfit", overfit},
      {"synthetic synchronisation", synchronisation},
      {"beam consistency", beam_consistency},
      {"published figures stated as directional", readme_statement},
      {"transparency and segment coefficients", export_exactness},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %d %s: %s - %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
