// Copyright (c) 2026 The srlkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "srl/config.hpp"
#include "srl/tsne.hpp"

namespace fs = std::filesystem;
using namespace srl;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int64_t seed_override = -1;
  bool has_seed = false;
};

Config load_config(const CommonArgs& args) {
  Config c;
  if (!args.config_path.empty()) c = Config::load(args.config_path);
  return c;
}

uint64_t effective_seed(const CommonArgs& args, const Config& cfg) {
  if (args.has_seed) return static_cast<uint64_t>(args.seed_override);
  return cfg.get_u64("train.seed", 0);
}

void warn_unknown_keys(const Config& cfg) {
  for (const std::string& k : cfg.unknown_keys())
    warn("config key '" + k + "' is not recognized by this subcommand");
}

void add_common(CLI::App* sub, CommonArgs& args, bool out_required = true) {
  sub->add_option("--config", args.config_path, "flat key=value config file");
  auto* out = sub->add_option("--out", args.out_dir, "output directory");
  if (out_required) out->required();
  sub->add_option("--seed", args.seed_override, "seed override (wins over config)")
      ->check(CLI::NonNegativeNumber);
}

int cmd_synth_data(const CommonArgs& args) {
  Config cfg = load_config(args);
  SynthCorpusSpec spec = synth_spec_from_config(cfg);
  uint64_t seed = effective_seed(args, cfg);
  DomainFractions fr = fractions_from_config(cfg);
  warn_unknown_keys(cfg);

  fs::create_directories(args.out_dir);
  CorpusManifest full = generate_synthetic_corpus(
      spec.n_styles, spec.n_emotions, spec.n_speakers, spec.n_utts_per_cell, seed,
      spec.gen);
  save_manifest(full, (fs::path(args.out_dir) / "manifest.jsonl").string());
  CorpusManifest relabeled = relabel_domains(full, fr, seed);
  save_manifest(relabeled,
                (fs::path(args.out_dir) / "manifest.domains.jsonl").string());
  std::cout << "wrote " << full.entries.size() << " utterances to "
            << args.out_dir << "/manifest.jsonl (+ manifest.domains.jsonl)\n";
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& manifest_path,
              const std::string& resume_path) {
  Config cfg = load_config(args);
  TrainConfig tc = train_config_from_config(cfg);
  if (args.has_seed) tc.seed = static_cast<uint64_t>(args.seed_override);
  warn_unknown_keys(cfg);

  CorpusManifest manifest = load_manifest(manifest_path);
  fs::create_directories(args.out_dir);

  std::unique_ptr<Trainer> trainer;
  if (!resume_path.empty()) {
    trainer = Trainer::load(resume_path);
  } else {
    trainer = std::make_unique<Trainer>(tc);
  }
  std::string final_ckpt = trainer->run(manifest, args.out_dir);
  std::cout << "trained to step " << trainer->step() << "; final checkpoint "
            << final_ckpt << "\n";
  return 0;
}

std::unique_ptr<Trainer> load_trainer_ckpt(const std::string& ckpt) {
  return Trainer::load(ckpt);
}

int cmd_embed(const CommonArgs& args, const std::string& ckpt,
              const std::string& manifest_path) {
  Config cfg = load_config(args);
  warn_unknown_keys(cfg);
  auto trainer = load_trainer_ckpt(ckpt);
  CorpusManifest manifest = load_manifest(manifest_path);
  EmbedTable table =
      embed_corpus(trainer->model(), manifest, trainer->config().sampler);
  fs::create_directories(args.out_dir);
  std::string path = (fs::path(args.out_dir) / "embeddings.jsonl").string();
  save_embed_table(table, path);
  std::cout << "wrote " << table.size() << " embedding rows to " << path << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& ckpt,
             const std::string& manifest_path) {
  Config cfg = load_config(args);
  ProbeConfig pc = probe_config_from_config(cfg);
  uint64_t seed = effective_seed(args, cfg);
  warn_unknown_keys(cfg);

  auto trainer = load_trainer_ckpt(ckpt);
  CorpusManifest manifest = load_manifest(manifest_path);
  EmbedTable table =
      embed_corpus(trainer->model(), manifest, trainer->config().sampler);
  nlohmann::ordered_json report = evaluation_report(table, seed, pc);

  fs::create_directories(fs::path(args.out_dir) / "reports");
  std::string path =
      (fs::path(args.out_dir) / "reports" / "probe_report.json").string();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write report '" + path + "'");
  f << report.dump(2) << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_plot(const CommonArgs& args, const std::string& ckpt,
             const std::string& manifest_path, const std::string& space_arg,
             const std::string& color_arg) {
  Config cfg = load_config(args);
  double perplexity = tsne_perplexity_from_config(cfg);
  uint64_t seed = effective_seed(args, cfg);
  warn_unknown_keys(cfg);

  auto trainer = load_trainer_ckpt(ckpt);
  CorpusManifest manifest = load_manifest(manifest_path);
  EmbedTable table =
      embed_corpus(trainer->model(), manifest, trainer->config().sampler);
  fs::create_directories(fs::path(args.out_dir) / "plots");

  std::vector<Attribute> spaces;
  if (space_arg == "all") {
    spaces = {Attribute::kStyle, Attribute::kEmotion, Attribute::kSpeaker};
  } else {
    spaces = {attribute_from_name(space_arg)};
  }
  for (Attribute space : spaces) {
    Attribute color =
        color_arg == "own" ? space : attribute_from_name(color_arg);
    Mat feats = stack_embeddings(table, space);
    TsneConfig tc;
    tc.perplexity = perplexity;
    tc.seed = seed;
    Mat coords = tsne_2d(feats, tc);
    std::vector<int> labels = table_labels(table, color);
    std::vector<std::string> ids;
    ids.reserve(table.size());
    for (const auto& row : table) ids.push_back(row.id);
    std::string base = std::string("tsne_") + attribute_name(space) + "_by_" +
                       attribute_name(color);
    std::string img = (fs::path(args.out_dir) / "plots" / (base + ".bmp")).string();
    std::string tsv = (fs::path(args.out_dir) / "plots" / (base + ".tsv")).string();
    write_bmp_scatter(coords, labels, img);
    write_coords_tsv(coords, ids, labels, tsv);
    std::cout << "wrote " << img << " and sidecar\n";
  }
  return 0;
}

int cmd_recombine(const CommonArgs& args, const std::string& ckpt,
                  const std::string& recon_ckpt, const std::string& manifest_path,
                  const std::string& style_id, const std::string& emotion_id,
                  const std::string& speaker_id, const std::string& content_id) {
  Config cfg = load_config(args);
  ReconConfig rc = recon_config_from_config(cfg);
  uint64_t seed = effective_seed(args, cfg);
  warn_unknown_keys(cfg);

  auto trainer = load_trainer_ckpt(ckpt);
  CorpusManifest manifest = load_manifest(manifest_path);
  const SamplerConfig& scfg = trainer->config().sampler;
  fs::create_directories(fs::path(args.out_dir) / "recombine");

  std::unique_ptr<Reconstructor> recon;
  if (!recon_ckpt.empty()) {
    recon = Reconstructor::load(recon_ckpt);
  } else {
    recon = std::make_unique<Reconstructor>(
        trainer->config().model.d_emb, trainer->config().model.input_dim,
        scfg.frame_rate, scfg.slice_frames(), rc, seed);
    std::cout << "no --recon-ckpt given; training reconstructor (" << rc.steps
              << " steps)\n";
    ReconTrainReport rep = train_reconstructor(trainer->model(), manifest, scfg,
                                               *recon, seed);
    std::string saved = (fs::path(args.out_dir) / "recombine" / "recon.ckpt").string();
    recon->save(saved);
    std::cout << "reconstructor holdout MAE " << format_g17(rep.holdout_mae)
              << " (untrained " << format_g17(rep.untrained_holdout_mae)
              << "); saved " << saved << "\n";
  }

  RecombineResult r = recombine(
      trainer->model(), *recon, manifest.by_id(style_id), manifest.by_id(emotion_id),
      manifest.by_id(speaker_id), manifest.by_id(content_id), scfg,
      manifest.category_counts, seed);

  std::string frames_path =
      (fs::path(args.out_dir) / "recombine" / "frames.srlframe").string();
  save_frames_file(r.frames, scfg.frame_rate, frames_path);

  nlohmann::ordered_json rep;
  rep["style_ref"] = style_id;
  rep["emotion_ref"] = emotion_id;
  rep["speaker_ref"] = speaker_id;
  rep["content_ref"] = content_id;
  rep["oracle_style"] = r.oracle_style;
  rep["oracle_emotion"] = r.oracle_emotion;
  rep["oracle_speaker"] = r.oracle_speaker;
  rep["predicted_mad"] = r.predicted_mad;
  std::string report_path =
      (fs::path(args.out_dir) / "recombine" / "report.json").string();
  std::ofstream f(report_path, std::ios::binary);
  if (!f) throw IoError("cannot write report '" + report_path + "'");
  f << rep.dump(2) << "\n";
  std::cout << "wrote " << frames_path << " and " << report_path << "\n";
  return 0;
}

std::string defaults_footer() {
  std::ostringstream out;
  out << "Config keys (flat key=value file; defaults shown):\n";
  for (const ConfigKeyDoc& d : config_key_docs()) {
    out << "  " << d.key;
    for (size_t i = std::string(d.key).size(); i < 34; ++i) out << ' ';
    out << d.def;
    for (size_t i = std::string(d.def).size(); i < 10; ++i) out << ' ';
    out << d.desc << "\n";
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srl: semi-supervised contrastive speech representation learning"};
  app.require_subcommand(1);
  app.footer(defaults_footer());

  CommonArgs synth_args, train_args, embed_args, eval_args, plot_args, recomb_args;
  std::string train_manifest, train_resume;
  std::string embed_ckpt, embed_manifest;
  std::string eval_ckpt, eval_manifest;
  std::string plot_ckpt, plot_manifest, plot_space = "all", plot_color = "own";
  std::string rc_ckpt, rc_recon, rc_manifest, rc_style, rc_emotion, rc_speaker,
      rc_content;

  CLI::App* synth = app.add_subcommand("synth-data",
                                       "generate a synthetic corpus manifest");
  add_common(synth, synth_args);

  CLI::App* train = app.add_subcommand("train", "train the representation model");
  add_common(train, train_args);
  train->add_option("--manifest", train_manifest, "corpus manifest (domain-labeled)")
      ->required();
  train->add_option("--resume", train_resume, "checkpoint to resume from");

  CLI::App* embed = app.add_subcommand("embed", "embed every utterance of a corpus");
  add_common(embed, embed_args);
  embed->add_option("--ckpt", embed_ckpt, "trainer checkpoint")->required();
  embed->add_option("--manifest", embed_manifest, "corpus manifest")->required();

  CLI::App* evalc = app.add_subcommand("eval", "probe and clustering report");
  add_common(evalc, eval_args);
  evalc->add_option("--ckpt", eval_ckpt, "trainer checkpoint")->required();
  evalc->add_option("--manifest", eval_manifest, "fully labeled manifest")->required();

  CLI::App* plot = app.add_subcommand("plot", "t-SNE plots of embedding spaces");
  add_common(plot, plot_args);
  plot->add_option("--ckpt", plot_ckpt, "trainer checkpoint")->required();
  plot->add_option("--manifest", plot_manifest, "fully labeled manifest")->required();
  plot->add_option("--space", plot_space, "embedding space: style|emotion|speaker|all");
  plot->add_option("--color-by", plot_color,
                   "label used for colors: style|emotion|speaker|own");

  CLI::App* recomb = app.add_subcommand(
      "recombine", "attribute transfer through the toy reconstructor");
  add_common(recomb, recomb_args);
  recomb->add_option("--ckpt", rc_ckpt, "trainer checkpoint")->required();
  recomb->add_option("--recon-ckpt", rc_recon,
                     "reconstructor checkpoint (trained on the fly if omitted)");
  recomb->add_option("--manifest", rc_manifest, "corpus manifest")->required();
  recomb->add_option("--style-ref", rc_style, "utterance id for style")->required();
  recomb->add_option("--emotion-ref", rc_emotion, "utterance id for emotion")
      ->required();
  recomb->add_option("--speaker-ref", rc_speaker, "utterance id for speaker")
      ->required();
  recomb->add_option("--content-ref", rc_content, "utterance id for content")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  for (auto* sub : {synth, train, embed, evalc, plot, recomb}) {
    if (sub->parsed()) {
      CommonArgs* args = nullptr;
      if (sub == synth) args = &synth_args;
      else if (sub == train) args = &train_args;
      else if (sub == embed) args = &embed_args;
      else if (sub == evalc) args = &eval_args;
      else if (sub == plot) args = &plot_args;
      else args = &recomb_args;
      args->has_seed = sub->count("--seed") > 0;
    }
  }

  try {
    if (synth->parsed()) return cmd_synth_data(synth_args);
    if (train->parsed()) return cmd_train(train_args, train_manifest, train_resume);
    if (embed->parsed()) return cmd_embed(embed_args, embed_ckpt, embed_manifest);
    if (evalc->parsed()) return cmd_eval(eval_args, eval_ckpt, eval_manifest);
    if (plot->parsed())
      return cmd_plot(plot_args, plot_ckpt, plot_manifest, plot_space, plot_color);
    if (recomb->parsed())
      return cmd_recombine(recomb_args, rc_ckpt, rc_recon, rc_manifest, rc_style,
                           rc_emotion, rc_speaker, rc_content);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
