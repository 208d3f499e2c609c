// Copyright 2026 The cs-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cs_lab: command-line front end for every module. Reports are JSON on
// stdout or in --out; a manifest with the resolved flags and seed travels
// inside every report and, with --out, also sits next to it.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cslab/align.h"
#include "cslab/corpus.h"
#include "cslab/ecgen.h"
#include "cslab/error.h"
#include "cslab/labeler/iob.h"
#include "cslab/labeler/tagger.h"
#include "cslab/lm.h"
#include "cslab/meta.h"
#include "cslab/metrics.h"
#include "cslab/ngram.h"
#include "cslab/pg.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cslab;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes.
constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kContract = 4;

struct Common {
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Write the JSON report here instead of stdout");
  sub->add_option("--seed", c.seed, "Random seed (falls back to CS_LAB_SEED, then 0)");
}

std::uint64_t resolve_seed(const Common& c) {
  if (c.seed) return *c.seed;
  if (const char* env = std::getenv("CS_LAB_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw CLI::ValidationError("CS_LAB_SEED", std::string("not an unsigned integer: ") + env);
  }
  return 0;
}

// Corpus files: the tab-separated token format when any line holds a tab,
// otherwise one raw utterance per line.
Corpus read_corpus(const std::string& path, const TokenizeOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.find('\t') != std::string::npos) {
    std::istringstream s(text);
    Corpus c = parse_conll(s);
    if (!opts.cjk_split) return c;
    // Re-tokenize so CJK runs split into characters.
    Corpus split;
    for (const Utterance& u : c.utterances()) {
      std::string joined;
      for (const Token& t : u.tokens) joined += (joined.empty() ? "" : " ") + t.surface;
      split.add(tokenize(joined, opts, u.id));
    }
    return split;
  }
  Corpus c;
  std::istringstream s(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(s, line)) {
    ++n;
    if (line.find_first_not_of(" \r") == std::string::npos) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    c.add(tokenize(line, opts, "line" + std::to_string(n)));
  }
  if (c.empty()) throw DataError(path + " holds no utterances");
  return c;
}

json ppl_json(const PplReport& r) {
  json j{{"tokens", r.tokens}, {"nll", r.nll}, {"ppl", r.ppl()}};
  if (!r.buckets.empty()) {
    json b = json::object();
    for (const auto& [bucket, v] : r.buckets) {
      b[std::string(to_string(bucket))] = {{"tokens", v.tokens}, {"nll", v.nll}, {"ppl", v.ppl()}};
    }
    j["buckets"] = b;
  }
  return j;
}

json corpus_stats(const Corpus& c) {
  std::size_t sp = 0;
  std::map<std::string, std::size_t> langs{{"L1", 0}, {"L2", 0}, {"OTHER", 0}};
  for (const Utterance& u : c.utterances()) {
    sp += switch_points(u);
    for (const Token& t : u.tokens) ++langs[std::string(to_string(t.lang))];
  }
  return {{"utterances", c.size()},
          {"tokens", c.token_count()},
          {"switch_points", sp},
          {"spf", mean_spf(c)},
          {"cmi", mean_cmi(c)},
          {"languages", langs}};
}

std::vector<std::string> split_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

// name=path, or a bare path named after its stem.
std::pair<std::string, std::string> named_path(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return {fs::path(spec).stem().string(), spec};
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

Utterance tagged_utterance(const std::vector<std::string>& words, const std::string& id) {
  Utterance u;
  u.id = id;
  for (const std::string& w : words) u.tokens.push_back({w, lang_by_script(w), {}, {}});
  return u;
}

std::vector<pg::Example> pg_examples(const std::string& l1, const std::string& l2,
                                     const std::string& cs) {
  const Corpus a = read_corpus(l1);
  const Corpus b = read_corpus(l2);
  if (a.size() != b.size()) throw DataError(l1 + " and " + l2 + " hold different utterance counts");
  std::optional<Corpus> c;
  if (!cs.empty()) {
    c = read_corpus(cs);
    if (c->size() != a.size()) throw DataError(cs + " does not match the parallel utterance count");
  }
  std::vector<pg::Example> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pg::Example ex;
    ex.input = pg::make_input(a.utterances()[i].surfaces(), b.utterances()[i].surfaces());
    if (c) ex.target = c->utterances()[i].surfaces();
    out.push_back(std::move(ex));
  }
  return out;
}

labeler::Tags gold_tags(const Utterance& u) {
  labeler::Tags t;
  for (const Token& tok : u.tokens) {
    if (!tok.ner) throw DataError("utterance '" + u.id + "': token '" + tok.surface + "' has no NER tag");
    t.push_back(*tok.ner);
  }
  return t;
}

// "error: <category>: <message>" on one line.
int fail(std::string_view category, std::string message, int code) {
  for (char& c : message) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error: " << category << ": " << message << "\n";
  return code;
}

// Flags of every parsed subcommand, for the manifest.
json collect_config(const CLI::App* app) {
  json cfg = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name == "--help" || name == "-h" || name == "--out") continue;
    if (opt->count() == 0) continue;
    const auto& res = opt->results();
    if (res.size() == 1 && res.front() == "true") {
      cfg[name] = true;
    } else if (res.size() == 1) {
      cfg[name] = res.front();
    } else {
      cfg[name] = res;
    }
  }
  for (const CLI::App* sub : app->get_subcommands()) cfg[sub->get_name()] = collect_config(sub);
  return cfg;
}

std::string command_path(const CLI::App* app) {
  std::string path;
  for (const CLI::App* sub = app; sub;) {
    const auto subs = sub->get_subcommands();
    if (subs.empty()) break;
    sub = subs.front();
    path += (path.empty() ? "" : " ") + sub->get_name();
  }
  return path;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cs_lab: code-switching corpus analysis, generation, language modeling and labeling"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  std::function<json(std::uint64_t)> action;

  // analyze ------------------------------------------------------------------
  struct {
    std::string input, vocab, triggers;
    bool cjk = false, strip = false, special = false, boundaries = false, per_utt = false;
  } an;
  auto* analyze = app.add_subcommand("analyze", "Corpus statistics: SPF, CMI, transitions, OOV");
  analyze->add_option("input", an.input, "Token file or one raw utterance per line")
      ->required()->check(CLI::ExistingFile);
  analyze->add_flag("--cjk-split", an.cjk, "Split CJK runs into single characters");
  analyze->add_flag("--strip-punctuation", an.strip, "Drop punctuation except apostrophes");
  analyze->add_flag("--special", an.special, "Replace mentions and URLs by USR and URL");
  analyze->add_flag("--boundaries", an.boundaries, "Divide switch points by N-1 instead of N");
  analyze->add_flag("--per-utterance", an.per_utt, "Include per-utterance SPF and CMI");
  analyze->add_option("--vocab", an.vocab, "Vocabulary file for OOV rates")->check(CLI::ExistingFile);
  analyze->add_option("--triggers", an.triggers, "Trigger statistics keyed by pos or surface")
      ->check(CLI::IsMember({"pos", "surface"}));
  add_common(analyze, common);
  analyze->callback([&] {
    action = [&](std::uint64_t) {
      Corpus c = read_corpus(an.input, {an.cjk, an.strip});
      if (an.special) {
        Corpus r;
        for (const Utterance& u : c.utterances()) r.add(replace_special(u));
        c = std::move(r);
      }
      json j = corpus_stats(c);
      if (an.boundaries) j["spf"] = mean_spf(c, SpfDenominator::kBoundaries);
      std::map<std::string, std::size_t> buckets;
      for (const Utterance& u : c.utterances()) {
        for (SegmentBucket b : bucket_transitions(u)) ++buckets[std::string(to_string(b))];
      }
      j["transitions"] = buckets;
      if (an.per_utt) {
        json rows = json::array();
        for (const Utterance& u : c.utterances()) {
          rows.push_back({{"id", u.id},
                          {"spf", spf(u, an.boundaries ? SpfDenominator::kBoundaries
                                                       : SpfDenominator::kTokens)},
                          {"cmi", cmi(u)}});
        }
        j["per_utterance"] = rows;
      }
      if (!an.vocab.empty()) {
        const Vocabulary v = read_vocabulary(an.vocab);
        j["oov"] = {{"type", oov_rate(c, v, OovLevel::kType)},
                    {"token", oov_rate(c, v, OovLevel::kToken)}};
      }
      if (!an.triggers.empty()) {
        json t = json::object();
        const auto stats =
            trigger_stats(c, an.triggers == "pos" ? TriggerSource::kPos : TriggerSource::kSurface);
        for (const auto& [key, row] : stats) {
          for (const auto& [dir, tc] : row) t[key][dir] = {{"count", tc.count}, {"ratio", tc.ratio}};
        }
        j["triggers"] = t;
      }
      return j;
    };
  });

  // align --------------------------------------------------------------------
  struct {
    std::string parallel, output, direction = "target";
    int iterations = 5;
  } al;
  auto* align = app.add_subcommand("align", "IBM Model 1 alignment of a parallel corpus");
  align->add_option("--parallel", al.parallel, "Lines of 'source<TAB>target'")
      ->required()->check(CLI::ExistingFile);
  align->add_option("--iterations", al.iterations, "EM iterations")->check(CLI::PositiveNumber);
  align->add_option("--direction", al.direction, "Link each target word (target) or source word")
      ->check(CLI::IsMember({"target", "source"}));
  align->add_option("--alignments", al.output, "Write Pharaoh lines here");
  add_common(align, common);
  align->callback([&] {
    action = [&](std::uint64_t) {
      const auto pairs = read_parallel(al.parallel);
      const Ibm1Result fit = ibm1_fit(pairs, al.iterations);
      const auto dir =
          al.direction == "target" ? AlignDirection::kTargetSide : AlignDirection::kSourceSide;
      std::string lines;
      std::size_t links = 0;
      for (const auto& [src, tgt] : pairs) {
        const Alignment a = viterbi_align(fit.table, src, tgt, dir);
        links += a.links().size();
        lines += emit_pharaoh(a) + "\n";
      }
      if (!al.output.empty()) write_text(al.output, lines);
      return json{{"pairs", pairs.size()},
                  {"skipped_pairs", fit.skipped_pairs},
                  {"links", links},
                  {"log_likelihood", fit.log_likelihood}};
    };
  });

  // ecgen --------------------------------------------------------------------
  struct {
    std::string l1, l2, alignments, output, ref;
    std::size_t max_switches = 2, max_outputs = 100;
  } eg;
  auto* ecgen = app.add_subcommand("ecgen", "Equivalence-constraint code-switch generation");
  ecgen->add_option("--l1", eg.l1, "Matrix-language utterances")->required()->check(CLI::ExistingFile);
  ecgen->add_option("--l2", eg.l2, "Embedded-language utterances")->required()->check(CLI::ExistingFile);
  ecgen->add_option("--alignments", eg.alignments, "Pharaoh lines, one per pair")
      ->required()->check(CLI::ExistingFile);
  ecgen->add_option("--max-switches", eg.max_switches, "Substituted spans per output");
  ecgen->add_option("--max-outputs", eg.max_outputs, "Outputs per pair (0: no cap)");
  ecgen->add_option("--output", eg.output, "Write the generated corpus here");
  ecgen->add_option("--ref", eg.ref, "Reference corpus for novel n-gram rates")->check(CLI::ExistingFile);
  add_common(ecgen, common);
  ecgen->callback([&] {
    action = [&](std::uint64_t seed) {
      const Corpus a = read_corpus(eg.l1);
      const Corpus b = read_corpus(eg.l2);
      const auto lines = split_lines(eg.alignments);
      if (a.size() != b.size() || lines.size() < a.size()) {
        throw DataError("l1, l2 and alignments must hold the same number of pairs");
      }
      Corpus gen;
      std::size_t spans = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const Utterance& s = a.utterances()[i];
        const Utterance& t = b.utterances()[i];
        const Alignment al = parse_pharaoh(lines[i], s.size(), t.size());
        for (Generated& g : generate(s, t, al, {eg.max_switches, eg.max_outputs, seed + i})) {
          spans += g.spans.size();
          gen.add(std::move(g.utterance));
        }
      }
      if (!eg.output.empty()) write_conll(gen, eg.output);
      json j{{"pairs", a.size()}, {"generated", gen.size()}, {"substituted_spans", spans}};
      if (!gen.empty()) j["stats"] = corpus_stats(gen);
      if (!eg.ref.empty()) {
        const Corpus ref = read_corpus(eg.ref);
        j["novel_ngram_rate"] = {{"1", novel_ngram_rate(gen, ref, 1)},
                                 {"2", novel_ngram_rate(gen, ref, 2)},
                                 {"3", novel_ngram_rate(gen, ref, 3)}};
      }
      return j;
    };
  });

  // ngram --------------------------------------------------------------------
  auto* ngram = app.add_subcommand("ngram", "n-gram language models");
  ngram->require_subcommand(1);
  struct {
    std::string train, model, test, smoothing = "kn";
    int order = 3;
    double discount = 0.75;
    std::size_t unk = 1;
    bool eos = false, buckets = false;
  } ng;
  auto* ng_fit = ngram->add_subcommand("fit", "Fit and save a model");
  ng_fit->add_option("--train", ng.train, "Training corpus")->required()->check(CLI::ExistingFile);
  ng_fit->add_option("--model", ng.model, "Write the model JSON here")->required();
  ng_fit->add_option("--order", ng.order, "n")->check(CLI::Range(1, 10));
  ng_fit->add_option("--smoothing", ng.smoothing, "mle, laplace or kn");
  ng_fit->add_option("--discount", ng.discount, "Kneser-Ney discount in (0, 1)");
  ng_fit->add_option("--unk-threshold", ng.unk, "Words seen fewer times become <unk>");
  ng_fit->add_flag("--eos", ng.eos, "Predict </s>");
  add_common(ng_fit, common);
  ng_fit->callback([&] {
    action = [&](std::uint64_t) {
      NgramConfig cfg{ng.order, parse_smoothing(ng.smoothing), ng.discount, ng.unk, ng.eos};
      const Corpus train = read_corpus(ng.train);
      const NgramModel m = NgramModel::fit(train, cfg);
      m.save(ng.model);
      return json{{"utterances", train.size()},
                  {"tokens", train.token_count()},
                  {"vocab", m.predicted_vocab().size()},
                  {"train", ppl_json(ppl(m, train))}};
    };
  });
  auto* ng_ppl = ngram->add_subcommand("ppl", "Perplexity of a saved model");
  ng_ppl->add_option("--model", ng.model, "Model JSON")->required()->check(CLI::ExistingFile);
  ng_ppl->add_option("--test", ng.test, "Evaluation corpus")->required()->check(CLI::ExistingFile);
  ng_ppl->add_flag("--buckets", ng.buckets, "Split by language-transition bucket");
  add_common(ng_ppl, common);
  ng_ppl->callback([&] {
    action = [&](std::uint64_t) {
      const NgramModel m = NgramModel::load(ng.model);
      return ppl_json(ppl(m, read_corpus(ng.test), ng.buckets));
    };
  });

  // train-lm -----------------------------------------------------------------
  struct {
    std::string real, gen, valid, test, model, strategy = "real";
    lm::LmConfig cfg;
    lm::TrainConfig opt;
    double finetune_lr = 1.0;
    std::size_t min_count = 1;
    bool untied = false;
  } tl;
  auto* train_lm = app.add_subcommand("train-lm", "LSTM language model under a data strategy");
  train_lm->add_option("--real", tl.real, "Real code-switched training corpus")->check(CLI::ExistingFile);
  train_lm->add_option("--gen", tl.gen, "Generated code-switched corpus")->check(CLI::ExistingFile);
  train_lm->add_option("--valid", tl.valid, "Validation corpus")->check(CLI::ExistingFile);
  train_lm->add_option("--test", tl.test, "Test corpus")->check(CLI::ExistingFile);
  train_lm->add_option("--strategy", tl.strategy, "real, gen, concat or pretrain-finetune");
  train_lm->add_option("--hidden", tl.cfg.hidden, "Embedding and LSTM size");
  train_lm->add_flag("--untied", tl.untied, "Separate output weights");
  train_lm->add_flag("--multitask", tl.cfg.multitask, "Joint POS prediction");
  train_lm->add_option("--pos-dim", tl.cfg.pos_dim, "POS embedding size");
  train_lm->add_option("--p", tl.cfg.p, "LM weight of the multi-task loss")->check(CLI::Range(0.0, 1.0));
  train_lm->add_option("--lr", tl.opt.lr, "SGD learning rate");
  train_lm->add_option("--decay", tl.opt.decay, "Learning rate factor on a plateau");
  train_lm->add_option("--clip", tl.opt.clip, "Global gradient norm bound");
  train_lm->add_option("--epochs", tl.opt.max_epochs, "Maximum epochs per stage");
  train_lm->add_option("--patience", tl.opt.patience, "Bad epochs before stopping");
  train_lm->add_option("--finetune-lr", tl.finetune_lr, "Learning rate of the fine-tuning stage");
  train_lm->add_option("--min-count", tl.min_count, "Vocabulary threshold");
  train_lm->add_option("--model", tl.model, "Checkpoint base path");
  add_common(train_lm, common);
  train_lm->callback([&] {
    action = [&](std::uint64_t seed) {
      const Corpus real = tl.real.empty() ? Corpus{} : read_corpus(tl.real);
      const Corpus gen = tl.gen.empty() ? Corpus{} : read_corpus(tl.gen);
      const Corpus valid = tl.valid.empty() ? Corpus{} : read_corpus(tl.valid);
      const Corpus test = tl.test.empty() ? Corpus{} : read_corpus(tl.test);
      tl.cfg.tie_weights = !tl.untied;
      tl.opt.seed = seed;
      lm::TrainPlan plan{lm::parse_strategy(tl.strategy), tl.opt, tl.finetune_lr, tl.min_count};
      lm::StrategyResult r = lm::run_strategy(plan, gen, real, valid, test, tl.cfg, seed);
      json stages = json::array();
      for (std::size_t s = 0; s < r.stages.size(); ++s) {
        json epochs = json::array();
        for (const auto& e : r.stages[s].epochs) {
          epochs.push_back({{"epoch", e.epoch}, {"lr", e.lr}, {"train_loss", e.train_loss},
                            {"valid_nll", e.valid_nll}});
        }
        stages.push_back({{"sentences", r.stage_sizes[s]},
                          {"steps", r.stages[s].steps},
                          {"max_clipped_norm", r.stages[s].max_clipped_norm},
                          {"best_valid_nll", r.stages[s].best_valid_nll},
                          {"early_stopped", r.stages[s].early_stopped},
                          {"epochs", epochs}});
      }
      json j{{"strategy", tl.strategy}, {"vocab", r.model.words().size()}, {"stages", stages}};
      if (r.test) j["test"] = ppl_json(*r.test);
      if (!tl.model.empty()) r.model.save(tl.model);
      return j;
    };
  });

  // train-pg -----------------------------------------------------------------
  struct {
    std::string l1, l2, cs, model;
    pg::PgConfig cfg;
  } tp;
  auto* train_pg = app.add_subcommand("train-pg", "Pointer-generator from parallel pairs to code-switched text");
  train_pg->add_option("--l1", tp.l1, "L1 side")->required()->check(CLI::ExistingFile);
  train_pg->add_option("--l2", tp.l2, "L2 side")->required()->check(CLI::ExistingFile);
  train_pg->add_option("--cs", tp.cs, "Code-switched targets, index for index")
      ->required()->check(CLI::ExistingFile);
  train_pg->add_option("--embed", tp.cfg.embed, "Embedding size");
  train_pg->add_option("--hidden", tp.cfg.hidden, "LSTM size");
  train_pg->add_option("--min-count", tp.cfg.min_count, "Vocabulary threshold");
  train_pg->add_option("--lr", tp.cfg.lr, "SGD learning rate");
  train_pg->add_option("--decay", tp.cfg.decay, "Learning rate factor when the loss stalls");
  train_pg->add_option("--clip", tp.cfg.clip, "Global gradient norm bound");
  train_pg->add_option("--epochs", tp.cfg.epochs, "Training epochs");
  train_pg->add_option("--model", tp.model, "Checkpoint base path")->required();
  add_common(train_pg, common);
  train_pg->callback([&] {
    action = [&](std::uint64_t seed) {
      const auto ex = pg_examples(tp.l1, tp.l2, tp.cs);
      tp.cfg.seed = seed;
      pg::PointerGenerator m(pg::PointerGenerator::build_vocab(ex, tp.cfg.min_count), tp.cfg);
      const auto curve = pg::train_pg(m, ex, tp.cfg);
      json epochs = json::array();
      for (const auto& e : curve) epochs.push_back({{"epoch", e.epoch}, {"lr", e.lr}, {"loss", e.loss}});
      m.save(tp.model);
      return json{{"pairs", ex.size()},
                  {"vocab", m.vocab().size()},
                  {"epochs", epochs},
                  {"train_token_accuracy", pg::token_accuracy(m, ex)}};
    };
  });

  // pg-generate --------------------------------------------------------------
  struct {
    std::string model, l1, l2, output, ngram_lm, neural_lm, attention;
    pg::BeamConfig beam;
  } gp;
  auto* pg_gen = app.add_subcommand("pg-generate", "Beam-search generation with optional LM rescoring");
  pg_gen->add_option("--model", gp.model, "Pointer-generator checkpoint base")->required();
  pg_gen->add_option("--l1", gp.l1, "L1 side")->required()->check(CLI::ExistingFile);
  pg_gen->add_option("--l2", gp.l2, "L2 side")->required()->check(CLI::ExistingFile);
  pg_gen->add_option("--beam", gp.beam.width, "Beam width");
  pg_gen->add_option("--n-best", gp.beam.n_best, "Hypotheses kept per input");
  pg_gen->add_option("--max-len", gp.beam.max_len, "Output length bound");
  pg_gen->add_option("--ngram-lm", gp.ngram_lm, "n-gram model JSON for rescoring")->check(CLI::ExistingFile);
  pg_gen->add_option("--neural-lm", gp.neural_lm, "LSTM LM checkpoint base for rescoring");
  pg_gen->add_option("--alpha", gp.beam.alpha, "Weight of the generator log-probability");
  pg_gen->add_option("--beta", gp.beam.beta, "Weight of the LM log-probability");
  pg_gen->add_option("--gamma", gp.beam.gamma, "Weight of sqrt(word count)");
  pg_gen->add_option("--output", gp.output, "Write the best outputs as a corpus");
  pg_gen->add_option("--attention", gp.attention, "Write attention and p_gen of the best outputs");
  add_common(pg_gen, common);
  pg_gen->callback([&] {
    action = [&](std::uint64_t) {
      if (!gp.ngram_lm.empty() && !gp.neural_lm.empty()) {
        throw CLI::ValidationError("--ngram-lm", "use one rescoring LM at a time");
      }
      pg::PointerGenerator m = pg::PointerGenerator::load(gp.model);
      const auto ex = pg_examples(gp.l1, gp.l2, "");
      std::optional<NgramModel> ngm;
      std::optional<lm::LanguageModel> nlm;
      std::unique_ptr<pg::SequenceScorer> scorer;
      if (!gp.ngram_lm.empty()) {
        ngm = NgramModel::load(gp.ngram_lm);
        scorer = std::make_unique<pg::NgramScorer>(*ngm);
      } else if (!gp.neural_lm.empty()) {
        nlm = lm::LanguageModel::load(gp.neural_lm);
        scorer = std::make_unique<pg::NeuralScorer>(*nlm);
      }
      Corpus out;
      json rows = json::array();
      json attention = json::array();
      for (std::size_t i = 0; i < ex.size(); ++i) {
        const auto hyps = m.beam_search(ex[i].input, gp.beam);
        json cands = json::array();
        pg::Hypothesis best = hyps.front();
        if (scorer) {
          const auto ranked = pg::rescore(hyps, *scorer, gp.beam);
          best = ranked.front().hyp;
          for (const auto& r : ranked) {
            cands.push_back({{"tokens", r.hyp.tokens}, {"log_prob", r.hyp.log_prob},
                             {"lm_log_prob", r.lm_log_prob}, {"score", r.score}});
          }
        } else {
          for (const auto& h : hyps) cands.push_back({{"tokens", h.tokens}, {"log_prob", h.log_prob}});
        }
        rows.push_back({{"pair", i}, {"candidates", cands}});
        attention.push_back(pg::attention_json(ex[i].input, best));
        if (!best.tokens.empty()) out.add(tagged_utterance(best.tokens, "gen" + std::to_string(i)));
      }
      if (!gp.output.empty()) write_conll(out, gp.output);
      if (!gp.attention.empty()) write_text(gp.attention, attention.dump(2) + "\n");
      json j{{"pairs", ex.size()}, {"outputs", rows}};
      if (!out.empty()) j["stats"] = corpus_stats(out);
      return j;
    };
  });

  // train-meta ---------------------------------------------------------------
  struct {
    std::vector<std::string> sources;
    std::string target, eval, mode = "meta-transfer";
    meta::MetaConfig cfg;
    std::size_t iterations = 300, eval_every = 50, hidden = 32;
  } tm;
  auto* train_meta = app.add_subcommand("train-meta", "Character LM trained by joint, MAML or meta-transfer updates");
  train_meta->add_option("--source", tm.sources, "Source-task corpus (repeatable, name=path)")->required();
  train_meta->add_option("--target", tm.target, "Target-task training corpus")
      ->required()->check(CLI::ExistingFile);
  train_meta->add_option("--eval", tm.eval, "Target validation corpus")->required()->check(CLI::ExistingFile);
  train_meta->add_option("--mode", tm.mode, "joint, maml or meta-transfer");
  train_meta->add_option("--alpha", tm.cfg.alpha, "Inner step size");
  train_meta->add_option("--beta", tm.cfg.beta, "Outer step size");
  train_meta->add_option("--inner-steps", tm.cfg.inner_steps, "Inner SGD steps");
  train_meta->add_option("--tasks-per-step", tm.cfg.tasks_per_step, "Tasks per outer step");
  train_meta->add_option("--batch-size", tm.cfg.batch_size, "Samples per batch");
  train_meta->add_option("--iterations", tm.iterations, "Outer steps");
  train_meta->add_option("--eval-every", tm.eval_every, "Evaluation interval");
  train_meta->add_option("--hidden", tm.hidden, "LSTM size");
  add_common(train_meta, common);
  train_meta->callback([&] {
    action = [&](std::uint64_t seed) {
      tm.cfg.mode = meta::parse_mode(tm.mode);
      std::vector<std::pair<std::string, Corpus>> sources;
      for (const std::string& s : tm.sources) {
        auto [name, path] = named_path(s);
        sources.emplace_back(name, read_corpus(path));
      }
      const Corpus target = read_corpus(tm.target);
      const Corpus eval = read_corpus(tm.eval);
      std::vector<const Corpus*> all{&target, &eval};
      for (const auto& s : sources) all.push_back(&s.second);
      meta::CharLmTask task(all, tm.hidden, seed);
      std::vector<meta::Dataset> src;
      for (const auto& [name, c] : sources) src.push_back(task.dataset(c, name));
      meta::TaskSet tasks(std::move(src), task.dataset(target, "target"), seed);
      const meta::Dataset ev = task.dataset(eval, "target");
      const auto trace =
          meta::train_meta(task, tasks, tm.cfg, tm.iterations, ev.samples, tm.eval_every, seed);
      json rows = json::array();
      for (const auto& p : trace) {
        rows.push_back({{"iteration", p.iteration}, {"train_loss", p.train_loss},
                        {"target_val_loss", p.target_val_loss}});
      }
      return json{{"mode", tm.mode},
                  {"tasks", tasks.task_count()},
                  {"final_target_val_loss", trace.back().target_val_loss},
                  {"trace", rows}};
    };
  });

  // label --------------------------------------------------------------------
  auto* label = app.add_subcommand("label", "Meta-embedding sequence labeler");
  label->require_subcommand(1);
  struct {
    std::vector<std::string> emb, subemb, models;
    std::string train, model, input, output, gold, oov = "zero";
    labeler::TaggerConfig cfg;
    std::string combiner = "mme";
    bool weights = false;
  } lb;
  lb.cfg.epochs = 20;
  auto* lb_train = label->add_subcommand("train", "Train a tagger");
  lb_train->add_option("--train", lb.train, "Corpus with NER tags")->required()->check(CLI::ExistingFile);
  lb_train->add_option("--emb", lb.emb, "Word embeddings (repeatable, name=path)")->required();
  lb_train->add_option("--subemb", lb.subemb, "Subword embeddings for hme (repeatable, name=path)");
  lb_train->add_option("--oov", lb.oov, "zero, mean or normalize");
  lb_train->add_option("--combiner", lb.combiner, "concat, linear, mme or hme");
  lb_train->add_option("--proj-dim", lb.cfg.combiner.proj_dim, "Projection size of the combiner");
  lb_train->add_option("--char-dim", lb.cfg.combiner.char_dim, "Character embedding size");
  lb_train->add_option("--char-hidden", lb.cfg.combiner.char_hidden, "Character BiLSTM size per direction");
  lb_train->add_option("--model-dim", lb.cfg.model_dim, "Transformer width");
  lb_train->add_option("--layers", lb.cfg.layers, "Encoder layers");
  lb_train->add_option("--heads", lb.cfg.heads, "Attention heads");
  lb_train->add_option("--ff-dim", lb.cfg.ff_dim, "Feed-forward width");
  lb_train->add_option("--dropout", lb.cfg.dropout, "Dropout rate")->check(CLI::Range(0.0, 0.99));
  lb_train->add_option("--lr", lb.cfg.lr, "Adam learning rate");
  lb_train->add_option("--epochs", lb.cfg.epochs, "Training epochs");
  lb_train->add_option("--model", lb.model, "Checkpoint base path")->required();
  add_common(lb_train, common);
  lb_train->callback([&] {
    action = [&](std::uint64_t seed) {
      const Corpus train = read_corpus(lb.train);
      lb.cfg.combiner.mode = labeler::parse_combine_mode(lb.combiner);
      lb.cfg.seed = seed;
      const labeler::OovPolicy policy = labeler::parse_oov_policy(lb.oov);
      std::vector<labeler::SourceSpec> ws;
      std::vector<labeler::SourceSpec> ss;
      std::vector<labeler::EmbeddingSource> words;
      std::vector<labeler::EmbeddingSource> subwords;
      for (const std::string& e : lb.emb) {
        auto [name, path] = named_path(e);
        ws.push_back({name, fs::absolute(path), labeler::Granularity::kWord, policy});
        words.push_back(ws.back().load());
      }
      for (const std::string& e : lb.subemb) {
        auto [name, path] = named_path(e);
        ss.push_back({name, fs::absolute(path), labeler::Granularity::kSubword, labeler::OovPolicy::kZero});
        subwords.push_back(ss.back().load());
      }
      labeler::Tagger t(train, std::move(words), std::move(subwords), lb.cfg);
      t.word_specs = ws;
      t.subword_specs = ss;
      const auto curve = t.train(train);
      t.save(lb.model);
      const labeler::F1Report f = t.evaluate(train);
      return json{{"sentences", train.size()},
                  {"tags", t.tag_set()},
                  {"epoch_loss", curve},
                  {"train_f1", f.f1()}};
    };
  });
  auto* lb_tag = label->add_subcommand("tag", "Tag a corpus; several models vote");
  lb_tag->add_option("--model", lb.models, "Checkpoint base (repeatable)")->required();
  lb_tag->add_option("--input", lb.input, "Corpus to tag")->required()->check(CLI::ExistingFile);
  lb_tag->add_option("--output", lb.output, "Write the tagged corpus here");
  lb_tag->add_flag("--weights", lb.weights, "Report per-word source weights of the first model");
  add_common(lb_tag, common);
  lb_tag->callback([&] {
    action = [&](std::uint64_t) {
      std::vector<labeler::Tagger> models;
      for (const std::string& m : lb.models) models.push_back(labeler::Tagger::load(m));
      Corpus in = read_corpus(lb.input);
      Corpus out;
      json rows = json::array();
      for (const Utterance& u : in.utterances()) {
        std::vector<labeler::Tags> votes;
        json w;
        for (std::size_t k = 0; k < models.size(); ++k) {
          const labeler::Tagging tg = models[k].tag(u.surfaces());
          votes.push_back(tg.tags);
          if (k == 0 && lb.weights && tg.word_weights.rows() > 0) {
            w = json::array();
            for (std::size_t r = 0; r < tg.word_weights.rows(); ++r) {
              auto row = tg.word_weights.row_span(r);
              w.push_back(std::vector<double>(row.begin(), row.end()));
            }
          }
        }
        const labeler::Tags tags = labeler::ensemble_vote(votes);
        Utterance t = u;
        for (std::size_t i = 0; i < t.size(); ++i) t.tokens[i].ner = tags[i];
        out.add(t);
        json row{{"id", u.id}, {"tags", tags}};
        if (!w.is_null()) row["source_weights"] = w;
        rows.push_back(row);
      }
      if (!lb.output.empty()) write_conll(out, lb.output);
      return json{{"models", lb.models.size()}, {"utterances", rows}};
    };
  });
  auto* lb_eval = label->add_subcommand("eval", "Entity micro-F1 against gold tags");
  lb_eval->add_option("--model", lb.models, "Checkpoint base (repeatable)")->required();
  lb_eval->add_option("--gold", lb.gold, "Corpus with NER tags")->required()->check(CLI::ExistingFile);
  add_common(lb_eval, common);
  lb_eval->callback([&] {
    action = [&](std::uint64_t) {
      std::vector<labeler::Tagger> models;
      for (const std::string& m : lb.models) models.push_back(labeler::Tagger::load(m));
      const Corpus gold = read_corpus(lb.gold);
      std::vector<labeler::Tags> g;
      std::vector<labeler::Tags> p;
      for (const Utterance& u : gold.utterances()) {
        g.push_back(gold_tags(u));
        std::vector<labeler::Tags> votes;
        for (auto& m : models) votes.push_back(m.tag(u));
        p.push_back(labeler::ensemble_vote(votes));
      }
      const labeler::F1Report r = labeler::entity_f1(g, p);
      return json{{"true_positives", r.true_pos}, {"predicted", r.pred}, {"gold", r.gold},
                  {"precision", r.precision()}, {"recall", r.recall()}, {"f1", r.f1()}};
    };
  });

  // score --------------------------------------------------------------------
  struct {
    std::string ref, hyp;
    bool cjk = false;
  } sc;
  auto* score = app.add_subcommand("score", "WER and per-language CER of hypotheses against references");
  score->add_option("--ref", sc.ref, "Reference utterances")->required()->check(CLI::ExistingFile);
  score->add_option("--hyp", sc.hyp, "Hypothesis utterances, index for index")
      ->required()->check(CLI::ExistingFile);
  score->add_flag("--cjk-split", sc.cjk, "Split CJK runs into single characters");
  add_common(score, common);
  score->callback([&] {
    action = [&](std::uint64_t) {
      const Corpus ref = read_corpus(sc.ref, {sc.cjk, false});
      const Corpus hyp = read_corpus(sc.hyp, {sc.cjk, false});
      if (ref.size() != hyp.size()) {
        throw DataError("reference holds " + std::to_string(ref.size()) + " utterances, hypothesis " +
                        std::to_string(hyp.size()));
      }
      EditCounts total;
      CerReport c;
      for (std::size_t i = 0; i < ref.size(); ++i) {
        const EditCounts e = edit_distance(ref.utterances()[i].surfaces(), hyp.utterances()[i].surfaces());
        total.ins += e.ins;
        total.del += e.del;
        total.sub += e.sub;
        total.ref_len += e.ref_len;
        c += cer(ref.utterances()[i], hyp.utterances()[i]);
      }
      const double w = total.ref_len == 0 ? 0.0
                                          : static_cast<double>(total.total()) / static_cast<double>(total.ref_len);
      return json{{"utterances", ref.size()},
                  {"ref_words", total.ref_len},
                  {"edits", {{"ins", total.ins}, {"del", total.del}, {"sub", total.sub}}},
                  {"wer", w},
                  {"cer", {{"overall", c.overall()},
                           {"L1", c.per_language(LangTag::kL1)},
                           {"L2", c.per_language(LangTag::kL2)},
                           {"OTHER", c.per_language(LangTag::kOther)}}}};
    };
  });

  if (argc <= 1) {
    std::cerr << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kUsage);
  }

  try {
    const std::uint64_t seed = resolve_seed(common);
    json result = action(seed);
    json manifest{{"tool", "cs_lab"},
                  {"version", kVersion},
                  {"command", command_path(&app)},
                  {"seed", seed},
                  {"config", collect_config(&app)}};
    json report{{"manifest", manifest}, {"result", std::move(result)}};
    const std::string text = report.dump(2) + "\n";
    if (common.out.empty()) {
      std::cout << text;
    } else {
      write_text(common.out, text);
      write_text(common.out + ".manifest.json", manifest.dump(2) + "\n");
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kUsage);
  } catch (const ContractError& e) {
    return fail(e.category(), e.what(), kContract);
  } catch (const Error& e) {
    return fail(e.category(), e.what(), kData);
  } catch (const std::exception& e) {
    // Malformed JSON models and similar library failures are bad input.
    return fail("data", e.what(), kData);
  }
}
