// Copyright 2026 The FAMA-desk Authors.
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

// fama: command-line front end for the toolkit.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fama/common.hpp"
#include "fama/decoding/beam_search.hpp"
#include "fama/eval/perplexity.hpp"
#include "fama/eval/report.hpp"
#include "fama/eval/wer.hpp"
#include "fama/eval/xrtf.hpp"
#include "fama/frontend/audio.hpp"
#include "fama/frontend/segment.hpp"
#include "fama/frontend/synth.hpp"
#include "fama/log.hpp"
#include "fama/model/checkpoint.hpp"
#include "fama/runtime.hpp"
#include "fama/textproc/manifest.hpp"
#include "fama/textproc/ratio_filter.hpp"
#include "fama/textproc/vocabulary.hpp"
#include "fama/training/averaging.hpp"
#include "fama/training/data.hpp"
#include "fama/training/forgetting_probe.hpp"
#include "fama/training/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fama;

namespace {

constexpr const char* kVersion = "0.1.0";

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw IoError("input file not found: " + p.string());
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

text::Vocabulary load_vocab(const fs::path& p) {
  require_file(p);
  std::ifstream in(p);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(p.string() + ": not a JSON token list");
  }
  return text::Vocabulary::from_tokens(j.get<std::vector<std::string>>());
}

struct Common {
  std::uint64_t seed = 0;
  std::string out;
};

// Every subcommand records how it was invoked next to its outputs.
struct Provenance {
  CLI::App* app = nullptr;
  std::vector<fs::path> inputs;

  void write(const fs::path& dir, const json& outputs, const std::vector<std::string>& argv) const {
    json flags = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      const std::string name = opt->get_name();
      if (name == "--help" || name.empty()) continue;
      const std::string key = name.substr(name.find_first_not_of('-'));
      if (opt->get_items_expected_max() == 0) {
        flags[key] = opt->count() > 0;
      } else if (opt->count() > 0) {
        const auto& r = opt->results();
        flags[key] = r.size() == 1 ? json(r[0]) : json(r);
      } else {
        const std::string d = opt->get_default_str();
        flags[key] = d.empty() ? json(nullptr) : json(d);
      }
    }
    json in = json::array();
    for (const auto& p : inputs) {
      json e{{"path", fs::absolute(p).string()}};
      if (fs::is_regular_file(p)) e["bytes"] = fs::file_size(p);
      in.push_back(e);
    }
    json j{{"command", app->get_name()}, {"version", kVersion}, {"argv", argv}, {"flags", flags},
           {"inputs", in},        {"outputs", outputs}};
    write_json(dir / (app->get_name() + ".provenance.json"), j);
  }
};

void add_decode_flags(CLI::App* sub, decode::DecodeConfig& cfg, bool& greedy) {
  sub->add_option("--beam", cfg.beam, "beam size")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--ctc-weight", cfg.ctc_weight, "CTC rescoring weight")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sub->add_option("--no-repeat-ngram", cfg.no_repeat_ngram, "blocked n-gram size (0 = off)")->capture_default_str();
  sub->add_option("--unk-penalty", cfg.unk_penalty, "log-score penalty on <unk>")->capture_default_str();
  sub->add_option("--max-len-factor", cfg.max_len_factor, "output cap per encoder frame")->capture_default_str();
  sub->add_option("--max-len-extra", cfg.max_len_extra, "output cap offset")->capture_default_str();
  sub->add_flag("--no-length-norm", [&cfg](std::int64_t) { cfg.length_normalize = false; }, "rank by raw scores");
  sub->add_flag("--greedy", greedy, "plain attention argmax (beam 1, no CTC, no n-gram blocking)");
}

decode::DecodeConfig effective(decode::DecodeConfig cfg, bool greedy) {
  if (greedy) {
    cfg.beam = 1;
    cfg.ctc_weight = 0.0;
    cfg.no_repeat_ngram = 0;
  }
  cfg.validate();
  return cfg;
}

std::vector<std::string> references(const train::Dataset& data, Task task) {
  std::vector<std::string> refs;
  for (const auto& u : data.utts) {
    if (task == Task::kSt) {
      if (!u.entry.translation) throw ValueError("utterance " + u.id + " has no translation");
      refs.push_back(*u.entry.translation);
    } else {
      refs.push_back(u.entry.transcript);
    }
  }
  return refs;
}

bool all_translated(const train::Dataset& data) {
  for (const auto& u : data.utts) {
    if (!u.entry.translation) return false;
  }
  return true;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  std::vector<std::string> args(argv, argv + argc);

  CLI::App app{"fama: speech recognition and translation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  const char* env_out = std::getenv("FAMA_OUT_DIR");
  common.out = env_out && *env_out ? env_out : "fama_out";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "random seed")->capture_default_str();
    sub->add_option("--out", common.out, "output directory (default $FAMA_OUT_DIR or fama_out)")->capture_default_str();
  };
  std::map<std::string, Provenance> prov;
  auto sub = [&](const char* name, const char* desc) {
    auto* s = app.add_subcommand(name, desc);
    add_common(s);
    prov[name].app = s;
    return s;
  };

  // synth-data
  audio::CorpusSpec spec;
  std::size_t inventory = 16;
  double outlier_fraction = 0.0;
  auto* synth = sub("synth-data", "generate a synthetic tone corpus");
  synth->add_option("--num-utts", spec.num_utts)->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--min-tokens", spec.min_tokens)->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--max-tokens", spec.max_tokens)->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--inventory", inventory, "number of pseudo-words")->capture_default_str()->check(CLI::Range(1, 25));
  synth->add_option("--prefix", spec.id_prefix)->capture_default_str();
  synth->add_option("--outlier-fraction", outlier_fraction, "share of entries given a tripled translation")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));

  // filter
  text::FilterBounds bounds = text::FilterBounds::en_it();
  std::string manifest, src_lang = "en", tgt_lang = "it";
  auto* filter = sub("filter", "drop pairs with implausible length ratios");
  filter->add_option("--manifest", manifest)->required();
  filter->add_option("--rmin", bounds.r_min)->capture_default_str();
  filter->add_option("--rmax", bounds.r_max)->capture_default_str();
  filter->add_option("--src", src_lang)->capture_default_str();
  filter->add_option("--tgt", tgt_lang)->capture_default_str();

  // prepare
  auto* prepare = sub("prepare", "validate a manifest and build its vocabulary");
  prepare->add_option("--manifest", manifest)->required();

  // segment
  std::string audio_path;
  double target_len = 16.0;
  audio::VadParams vad;
  auto* segment = sub("segment", "cut a long recording into segments");
  segment->add_option("--audio", audio_path)->required();
  segment->add_option("--target-len", target_len, "target segment length in seconds")->capture_default_str()->check(CLI::PositiveNumber);
  segment->add_option("--vad-threshold", vad.threshold_ratio)->capture_default_str();
  segment->add_option("--min-silence", vad.min_silence_s)->capture_default_str();

  // train
  int stage = 1;
  std::string config_path, vocab_path, init_path, model_name = "desk";
  std::optional<std::uint64_t> steps, warmup, interval;
  std::optional<double> lr, p_asr;
  std::optional<std::size_t> batch_tokens, accum;
  bool no_aug = false;
  auto* trn = sub("train", "run one training stage");
  trn->add_option("--manifest", manifest)->required();
  trn->add_option("--stage", stage)->capture_default_str()->check(CLI::IsMember({1, 2}));
  trn->add_option("--config", config_path, "stage config JSON");
  trn->add_option("--vocab", vocab_path, "token list JSON (default: built from the manifest)");
  trn->add_option("--init", init_path, "checkpoint to start from (required for stage 2)");
  trn->add_option("--model", model_name, "desk, small or medium")->capture_default_str();
  trn->add_option("--steps", steps, "optimizer steps");
  trn->add_option("--lr", lr, "peak (stage 1) or constant (stage 2) learning rate");
  trn->add_option("--warmup", warmup);
  trn->add_option("--p-asr", p_asr);
  trn->add_option("--batch-tokens", batch_tokens);
  trn->add_option("--accum", accum);
  trn->add_option("--checkpoint-interval", interval);
  trn->add_flag("--no-spec-augment", no_aug);

  // decode
  decode::DecodeConfig dcfg;
  bool greedy = false;
  std::string ckpt_path, task_name = "asr";
  std::size_t batch_size = 1;
  auto* dec = sub("decode", "beam search over a manifest");
  dec->add_option("--checkpoint", ckpt_path)->required();
  dec->add_option("--manifest", manifest)->required();
  dec->add_option("--task", task_name)->capture_default_str();
  dec->add_option("--batch-size", batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  add_decode_flags(dec, dcfg, greedy);

  // evaluate
  std::string decodes_path;
  auto* evl = sub("evaluate", "WER and perplexity");
  evl->add_option("--checkpoint", ckpt_path)->required();
  evl->add_option("--manifest", manifest)->required();
  evl->add_option("--task", task_name)->capture_default_str();
  evl->add_option("--decodes", decodes_path, "score an existing decode file instead of decoding");
  evl->add_option("--batch-size", batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  add_decode_flags(evl, dcfg, greedy);

  // bench
  auto* bench = sub("bench", "throughput as seconds of audio per second of compute");
  bench->add_option("--checkpoint", ckpt_path)->required();
  bench->add_option("--manifest", manifest)->required();
  bench->add_option("--task", task_name)->capture_default_str();
  bench->add_option("--batch-size", batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  add_decode_flags(bench, dcfg, greedy);

  // average
  std::vector<std::string> inputs;
  std::string ckpt_dir, output;
  std::size_t last_k = 0;
  auto* avg = sub("average", "average checkpoints");
  avg->add_option("--inputs", inputs, "checkpoint files");
  avg->add_option("--dir", ckpt_dir, "directory of checkpoint_<step>.ckpt files");
  avg->add_option("--last", last_k, "average the last K checkpoints of --dir");
  avg->add_option("--output", output, "result path (default <out>/average.ckpt)");

  // probe-forgetting
  std::string valid_path;
  std::vector<double> lrs;
  double probe_lr = 1e-3, probe_p = 0.5;
  std::uint64_t probe_steps = 500, eval_interval = 50;
  auto* probe = sub("probe-forgetting", "stage-2 runs at lr L and 10L, tracking validation perplexity");
  probe->add_option("--checkpoint", ckpt_path, "stage-1 checkpoint")->required();
  probe->add_option("--manifest", manifest, "stage-2 training manifest")->required();
  probe->add_option("--valid", valid_path, "validation manifest")->required();
  probe->add_option("--lr", probe_lr, "L")->capture_default_str();
  probe->add_option("--lrs", lrs, "explicit learning rates (overrides --lr)");
  probe->add_option("--p-asr", probe_p)->capture_default_str();
  probe->add_option("--steps", probe_steps)->capture_default_str();
  probe->add_option("--eval-interval", eval_interval)->capture_default_str()->check(CLI::PositiveNumber);
  probe->add_option("--config", config_path, "stage config JSON");
  probe->add_option("--batch-tokens", batch_tokens);
  probe->add_flag("--no-spec-augment", no_aug);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    auto* failing = &app;
    for (auto* s : app.get_subcommands()) failing = s;
    std::cerr << failing->help() << "error: " << e.what() << '\n';
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  CLI::App* used = app.get_subcommands().front();
  const std::string cmd = used->get_name();
  Provenance& pv = prov[cmd];
  const fs::path out = common.out;

  try {
    json outputs = json::object();
    auto begin = [&](std::vector<fs::path> in) {
      for (const auto& p : in) require_file(p);
      pv.inputs = std::move(in);
      fs::create_directories(out);
    };

    if (cmd == "synth-data") {
      if (spec.min_tokens > spec.max_tokens) throw ValueError("--min-tokens exceeds --max-tokens");
      begin({});
      spec.seed = common.seed;
      spec.inventory = audio::TokenInventory::standard(inventory);
      auto corpus = audio::synth_corpus(spec);
      const auto n_out = static_cast<std::size_t>(std::llround(outlier_fraction * static_cast<double>(corpus.size())));
      if (n_out > 0) {
        // Evenly spaced entries whose translation is repeated three times.
        for (std::size_t k = 0; k < n_out; ++k) {
          auto& e = corpus[k * corpus.size() / n_out].entry;
          const std::string t = *e.translation;
          e.translation = t + " " + t + " " + t;
          e.extra["outlier"] = true;
        }
      }
      const auto path = audio::write_corpus(corpus, out);
      outputs["manifest"] = path.string();
      outputs["utterances"] = corpus.size();
      outputs["outliers"] = n_out;
      std::printf("wrote %zu utterances to %s\n", corpus.size(), path.string().c_str());
    } else if (cmd == "filter") {
      bounds.src = parse_lang(src_lang);
      bounds.tgt = parse_lang(tgt_lang);
      bounds.validate();
      begin({manifest});
      const auto entries = text::load_manifest(manifest);
      const auto res = text::ratio_filter(entries, bounds);
      text::save_manifest(res.kept, out / "filtered.jsonl");
      text::save_manifest(res.removed, out / "removed.jsonl");
      const auto& r = res.report;
      json rj{{"total", r.total},
              {"kept", r.kept},
              {"removed", r.removed},
              {"zero_length", r.zero_length},
              {"other_direction", r.other_direction},
              {"removed_fraction", r.removed_fraction},
              {"removed_percent", 100.0 * r.removed_fraction}};
      write_json(out / "filter_report.json", rj);
      outputs = {{"kept", (out / "filtered.jsonl").string()},
                 {"removed", (out / "removed.jsonl").string()},
                 {"report", (out / "filter_report.json").string()}};
      std::printf("removed %zu of %zu (%s%%)\n", r.removed, r.total, fmt("%.1f", 100.0 * r.removed_fraction).c_str());
    } else if (cmd == "prepare") {
      begin({manifest});
      const auto entries = text::load_manifest(manifest);
      if (entries.empty()) throw ValueError(manifest + ": empty manifest");
      double seconds = 0.0;
      std::size_t translated = 0;
      std::vector<std::string> texts;
      for (const auto& e : entries) {
        const auto wav = text::resolve_audio(manifest, e);
        require_file(wav);
        const auto samples = audio::read_wav(wav);
        const double dur = static_cast<double>(samples.size()) / audio::kSampleRate;
        if (std::abs(dur - e.duration_s) > 0.05) {
          warn(text::utterance_id(e) + ": manifest duration " + fmt("%.3f", e.duration_s) + " s, audio " +
               fmt("%.3f", dur) + " s");
        }
        seconds += dur;
        texts.push_back(e.transcript);
        if (e.translation) {
          ++translated;
          texts.push_back(*e.translation);
        }
      }
      const auto vocab = text::Vocabulary::build(texts);
      write_json(out / "vocab.json", json(vocab.tokens()));
      json rj{{"utterances", entries.size()},
              {"translated", translated},
              {"audio_seconds", seconds},
              {"vocab_size", vocab.size()}};
      write_json(out / "prepare_report.json", rj);
      outputs = {{"vocab", (out / "vocab.json").string()}, {"report", (out / "prepare_report.json").string()}};
      std::printf("%zu utterances, %.1f s of audio, vocabulary of %zu\n", entries.size(), seconds, vocab.size());
    } else if (cmd == "segment") {
      begin({audio_path});
      const auto wav = audio::read_wav(audio_path);
      const auto segs = audio::segment_audio(wav, target_len, vad);
      std::ofstream list(out / "segments.jsonl");
      for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::string name = fmt("seg_%04.0f.wav", static_cast<double>(i));
        audio::write_wav(out / name, segs[i].samples);
        list << json{{"audio", name}, {"start_s", segs[i].start_s}, {"end_s", segs[i].end_s}}.dump() << '\n';
      }
      outputs = {{"segments", (out / "segments.jsonl").string()}, {"count", segs.size()}};
      std::printf("%zu segments\n", segs.size());
    } else if (cmd == "train") {
      auto cfg = config_path.empty() ? train::StageConfig::defaults(stage) : train::StageConfig::load(config_path);
      if (trn->count("--stage") > 0 && cfg.stage != stage) {
        throw ValueError("--stage " + std::to_string(stage) + " contradicts the config file");
      }
      cfg.seed = common.seed;
      if (steps) cfg.max_steps = *steps;
      if (lr) (cfg.stage == 1 ? cfg.lr_peak : cfg.lr_const) = *lr;
      if (warmup) cfg.warmup_steps = *warmup;
      if (p_asr) cfg.p_asr = *p_asr;
      if (batch_tokens) cfg.batch_tokens = *batch_tokens;
      if (accum) cfg.accum = *accum;
      if (interval) cfg.checkpoint_interval = *interval;
      if (no_aug) cfg.spec_augment = false;
      cfg.validate();
      if (cfg.stage == 2 && init_path.empty()) throw ValueError("stage 2 needs --init <stage-1 checkpoint>");
      std::vector<fs::path> in{manifest};
      if (!config_path.empty()) in.push_back(config_path);
      if (!vocab_path.empty()) in.push_back(vocab_path);
      if (!init_path.empty()) in.push_back(init_path);
      begin(in);
      const auto data = train::load_dataset(manifest);
      std::optional<model::FamaModel> model;
      std::optional<text::Vocabulary> vocab;
      if (!init_path.empty()) {
        const auto ck = model::load_checkpoint(init_path);
        vocab = model::vocabulary_from_checkpoint(ck);
        model.emplace(model::model_from_checkpoint(ck));
      } else {
        vocab = vocab_path.empty() ? text::Vocabulary::build(train::corpus_texts(data)) : load_vocab(vocab_path);
        auto mc = model::ModelConfig::named(model_name, vocab->size());
        mc.seed = common.seed;
        model.emplace(mc);
      }
      write_json(out / "stage_config.json", cfg.to_json());
      const auto summary = train::train_stage(data, *model, *vocab, cfg, out, [&](const train::StepResult& r) {
        if (r.step % 100 == 0 || r.step == cfg.max_steps) {
          std::printf("step %llu lr %.3g loss %.4f\n", static_cast<unsigned long long>(r.step), r.lr, r.loss.total);
          std::fflush(stdout);
        }
        return true;
      });
      outputs = {{"final_checkpoint", summary.final_checkpoint.string()},
                 {"metrics", summary.metrics_log.string()},
                 {"steps", summary.steps},
                 {"skipped", summary.skipped}};
      std::printf("trained %llu steps (%llu skipped); final checkpoint %s\n",
                  static_cast<unsigned long long>(summary.steps), static_cast<unsigned long long>(summary.skipped),
                  summary.final_checkpoint.string().c_str());
    } else if (cmd == "decode" || cmd == "evaluate" || cmd == "bench") {
      const Task task = parse_task(task_name);
      const auto cfg = effective(dcfg, greedy);
      std::vector<fs::path> in{ckpt_path, manifest};
      if (!decodes_path.empty()) in.push_back(decodes_path);
      begin(in);
      const auto ck = model::load_checkpoint(ckpt_path);
      const auto vocab = model::vocabulary_from_checkpoint(ck);
      auto model = model::model_from_checkpoint(ck);
      outputs["decode_config"] = cfg.to_json();

      if (cmd == "bench") {
        const auto entries = text::load_manifest(manifest);
        if (entries.empty()) throw ValueError(manifest + ": empty manifest");
        std::vector<eval::BenchInput> bi;
        for (const auto& e : entries) {
          Lang lang = e.src_lang;
          if (task == Task::kSt) {
            if (!e.tgt_lang) throw ValueError("utterance " + text::utterance_id(e) + " has no target language");
            lang = *e.tgt_lang;
          }
          bi.push_back({text::utterance_id(e), audio::read_wav(text::resolve_audio(manifest, e)), lang});
        }
        eval::EvalReport rep;
        rep.bench = eval::xrtf_bench(model, bi, vocab, batch_size, cfg);
        write_json(out / "bench_report.json", rep.to_json());
        outputs["report"] = (out / "bench_report.json").string();
        std::fputs(rep.table().c_str(), stdout);
      } else {
        const auto data = train::load_dataset(manifest);
        if (data.empty()) throw ValueError(manifest + ": empty manifest");
        std::vector<std::string> hyps;
        if (cmd == "evaluate" && !decodes_path.empty()) {
          std::map<std::string, std::string> by_id;
          std::ifstream din(decodes_path);
          std::string line;
          while (std::getline(din, line)) {
            if (line.empty()) continue;
            const auto j = json::parse(line);
            by_id[j.at("utt_id").get<std::string>()] = j.at("text").get<std::string>();
          }
          for (const auto& u : data.utts) {
            const auto it = by_id.find(u.id);
            if (it == by_id.end()) throw ValueError(decodes_path + ": no decode for utterance " + u.id);
            hyps.push_back(it->second);
          }
        } else {
          const auto decodes = decode::decode_dataset(model, data, task, vocab, cfg, batch_size);
          decode::write_decodes(decodes, out / "decodes.jsonl");
          outputs["decodes"] = (out / "decodes.jsonl").string();
          for (const auto& d : decodes) hyps.push_back(d.text);
          if (cmd == "decode") std::printf("decoded %zu utterances to %s\n", decodes.size(), (out / "decodes.jsonl").string().c_str());
        }
        if (cmd == "evaluate") {
          eval::EvalReport rep;
          rep.wer = eval::wer(references(data, task), hyps);
          rep.ppl_asr = eval::perplexity(model, data, Task::kAsr, vocab).ppl;
          if (all_translated(data)) rep.ppl_st = eval::perplexity(model, data, Task::kSt, vocab).ppl;
          auto j = rep.to_json();
          j["task"] = task_name;
          write_json(out / "eval_report.json", j);
          outputs["report"] = (out / "eval_report.json").string();
          std::fputs(rep.table().c_str(), stdout);
        }
      }
    } else if (cmd == "average") {
      std::vector<fs::path> paths(inputs.begin(), inputs.end());
      if (!ckpt_dir.empty()) {
        if (!fs::is_directory(ckpt_dir)) throw IoError("input directory not found: " + ckpt_dir);
        if (last_k == 0) throw ValueError("--dir needs --last K");
        const auto found = train::last_checkpoints(ckpt_dir, last_k);
        paths.insert(paths.end(), found.begin(), found.end());
      }
      if (paths.empty()) throw ValueError("nothing to average: pass --inputs or --dir with --last");
      begin(paths);
      const auto avg = train::average_checkpoints(std::span<const fs::path>(paths));
      const fs::path dst = output.empty() ? out / "average.ckpt" : fs::path(output);
      model::save_checkpoint(avg, dst);
      outputs = {{"checkpoint", dst.string()}, {"averaged", paths.size()}};
      std::printf("averaged %zu checkpoints into %s\n", paths.size(), dst.string().c_str());
    } else if (cmd == "probe-forgetting") {
      train::ProbeConfig pc;
      pc.steps = probe_steps;
      pc.eval_interval = eval_interval;
      pc.stage = config_path.empty() ? train::StageConfig::defaults(2) : train::StageConfig::load(config_path);
      pc.stage.seed = common.seed;
      if (batch_tokens) pc.stage.batch_tokens = *batch_tokens;
      if (no_aug) pc.stage.spec_augment = false;
      if (lrs.empty()) lrs = {probe_lr, 10.0 * probe_lr};
      for (double l : lrs) pc.variants.push_back({l, probe_p});
      std::vector<fs::path> in{ckpt_path, manifest, valid_path};
      if (!config_path.empty()) in.push_back(config_path);
      begin(in);
      const auto ck = model::load_checkpoint(ckpt_path);
      const auto tr = train::load_dataset(manifest);
      const auto va = train::load_dataset(valid_path);
      const auto rep = train::forgetting_probe(ck, tr, va, pc);
      write_json(out / "probe.json", rep.to_json());
      std::ofstream(out / "probe.tsv") << rep.series();
      outputs = {{"report", (out / "probe.json").string()}, {"series", (out / "probe.tsv").string()}};
      std::fputs(rep.table().c_str(), stdout);
    }
    pv.write(out, outputs, args);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "error: " << msg << '\n';
    return 1;
  }
  return 0;
}
