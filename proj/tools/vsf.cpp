// vsf: synthetic data generation, training, evaluation, cost accounting
// and report plotting for the vision-state fusion benchmark.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vsf/augment.hpp"
#include "vsf/config.hpp"
#include "vsf/errors.hpp"
#include "vsf/experiment.hpp"
#include "vsf/model_io.hpp"
#include "vsf/report.hpp"
#include "vsf/scenegen.hpp"
#include "vsf/train.hpp"
#include "vsf/wilcoxon.hpp"

namespace fs = std::filesystem;
using namespace vsf;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void apply_overrides(ExperimentConfig& cfg, const std::string& config_file,
                     const std::vector<std::string>& sets) {
  if (!config_file.empty()) cfg.load_file(config_file);
  for (const auto& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw UsageError("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
}

void echo_config(const ExperimentConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  cfg.echo((fs::path(out_dir) / "config.txt").string());
}

std::vector<FusionVariant> parse_variants(const std::string& spec) {
  std::vector<FusionVariant> out;
  if (spec == "all") {
    for (int v = 0; v <= 4; ++v) out.push_back(FusionVariant(v));
    return out;
  }
  std::size_t at = 0;
  while (at <= spec.size()) {
    const std::size_t comma = spec.find(',', at);
    const std::string name =
        spec.substr(at, comma == std::string::npos ? comma : comma - at);
    out.push_back(variant_by_name(name));  // throws invalid_argument
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  if (out.empty()) throw UsageError("no variants given");
  return out;
}

void write_history_csv(const std::string& path, const TrainHistory& hist) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  f << "epoch,train_loss,val_loss\n";
  f.precision(10);
  for (std::size_t e = 0; e < hist.train_loss.size(); ++e)
    f << e << ',' << hist.train_loss[e] << ',' << hist.val_loss[e] << '\n';
}

void write_eval_csv(const std::string& path, const EvalReport& rep) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  f << "output,r2,mse,mae,dummy_mse\n";
  const auto names = output_names(int(rep.outputs.size()));
  f.precision(10);
  for (std::size_t o = 0; o < rep.outputs.size(); ++o) {
    const auto& m = rep.outputs[o];
    f << names[o] << ',' << m.r2 << ',' << m.mse << ',' << m.mae << ','
      << m.dummy_mse << '\n';
  }
  if (rep.has_rotation)
    f << "rotation_deg," << rep.rotation_error_deg << ",,,\n";
}

int cmd_gen(const std::string& out_dir, int n, const ExperimentConfig& cfg) {
  if (n <= 0) throw UsageError("--n must be positive");
  echo_config(cfg, out_dir);
  GenerateStats stats;
  Dataset ds = generate_dataset(cfg.scene_config(), cfg.intrinsics(),
                                std::uint32_t(n), &stats);
  write_dataset((fs::path(out_dir) / "dataset.vsf").string(), ds);
  std::printf("wrote %u samples (%u discarded draws) to %s/dataset.vsf\n",
              ds.header.n_samples, stats.discarded, out_dir.c_str());
  return 0;
}

int cmd_augment(const std::string& in, const std::string& out_dir,
                const ExperimentConfig& cfg) {
  Dataset ds = read_dataset(in);
  if (ds.header.state_dim < 1)
    throw FormatError(FormatError::Kind::Inconsistent,
                      "dataset has no pitch state channel; pitch warp "
                      "augmentation needs one");
  echo_config(cfg, out_dir);
  std::uint32_t discarded = 0;
  Dataset aug =
      augment_dataset(ds, cfg.augment_config(), cfg.intrinsics(), &discarded);
  write_dataset((fs::path(out_dir) / "dataset.vsf").string(), aug);
  std::printf("wrote %u augmented samples (%u copies discarded) to "
              "%s/dataset.vsf\n",
              aug.header.n_samples, discarded, out_dir.c_str());
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& val_path,
              const std::string& variant_name_s, const std::string& arch_name,
              bool qat, const std::string& out_dir,
              const ExperimentConfig& cfg) {
  const FusionVariant variant = variant_by_name(variant_name_s);
  const ArchSpec arch = arch_by_name(arch_name);
  BatchData train_data = BatchData::from_dataset(read_dataset(data_path));
  BatchData val_data = BatchData::from_dataset(read_dataset(val_path));
  echo_config(cfg, out_dir);
  const TrainConfig tc = cfg.train_config();
  Model<float> model(arch, variant, train_data.state_dim, tc.seed);
  TrainHistory hist = train(model, train_data, val_data, tc);
  save_model((fs::path(out_dir) / "model.vsfm").string(), model);
  write_history_csv((fs::path(out_dir) / "history.csv").string(), hist);
  std::printf("trained %s/%s: %zu epochs, best epoch %d, val loss %.6f\n",
              arch_name.c_str(), variant_name(variant), hist.val_loss.size(),
              hist.best_epoch, hist.val_loss[hist.best_epoch]);
  if (qat) {
    auto [qm, qhist] = qat_finetune(model, train_data, val_data, tc);
    save_quant_model((fs::path(out_dir) / "model_qat.vsfm").string(), qm);
    write_history_csv((fs::path(out_dir) / "history_qat.csv").string(), qhist);
    std::printf("qat fine-tune: quant val loss %.6f\n",
                quant_val_loss(qm, val_data));
  }
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& out_dir) {
  ModelFile mf = load_model(model_path);
  BatchData data = BatchData::from_dataset(read_dataset(data_path));
  const int want = mf.is_quant() ? mf.qmodel->folded.state_dim()
                                 : mf.model->state_dim();
  if (want != data.state_dim)
    throw FormatError(FormatError::Kind::Inconsistent,
                      "model expects state_dim " + std::to_string(want) +
                          ", dataset has " + std::to_string(data.state_dim));
  EvalReport rep =
      mf.is_quant() ? evaluate(*mf.qmodel, data) : evaluate(*mf.model, data);
  fs::create_directories(out_dir);
  write_eval_csv((fs::path(out_dir) / "eval.csv").string(), rep);
  const auto names = output_names(int(rep.outputs.size()));
  for (std::size_t o = 0; o < rep.outputs.size(); ++o)
    std::printf("%-4s r2 %+.4f  mse %.5f  mae %.5f\n", names[o].c_str(),
                rep.outputs[o].r2, rep.outputs[o].mse, rep.outputs[o].mae);
  if (rep.has_rotation)
    std::printf("rotation error %.3f deg\n", rep.rotation_error_deg);
  return 0;
}

int cmd_costs(const std::string& arch_name, const std::string& variant_spec,
              int state_dim, const std::string& out_csv) {
  const ArchSpec arch = arch_by_name(arch_name);
  const auto variants = parse_variants(variant_spec);

  // published frontnet deltas: bytes, MACs, exact flag
  struct Published {
    long long bytes, macs;
    bool exact;
  };
  auto published = [](FusionVariant v) -> Published {
    switch (v) {
      case FusionVariant::SingleNeuron: return {4, 4, true};
      case FusionVariant::FullyConnected: return {54000, 54000, false};
      case FusionVariant::DoubleInput: return {800, 3072000, true};
      case FusionVariant::MlpBranch: return {120, 104, true};
      default: return {0, 0, true};
    }
  };

  std::ofstream csv;
  if (!out_csv.empty()) {
    csv.open(out_csv, std::ios::trunc);
    if (!csv)
      throw FormatError(FormatError::Kind::Io, "cannot open " + out_csv);
    csv << "arch,variant,param_bytes,macs,delta_bytes,delta_macs\n";
  }

  std::printf("%-16s %14s %14s %12s %12s", "variant", "param_bytes", "macs",
              "d_bytes", "d_macs");
  const bool compare = arch_name == "frontnet_sym";
  if (compare) std::printf("  %s", "vs published");
  std::printf("\n");
  for (FusionVariant v : variants) {
    const CostReport total = count_costs(arch, v, state_dim);
    const CostReport delta = cost_delta(arch, v, state_dim);
    std::printf("%-16s %14lld %14lld %+12lld %+12lld", variant_name(v),
                total.param_bytes, total.macs, delta.param_bytes, delta.macs);
    if (compare && v != FusionVariant::Stateless) {
      const Published p = published(v);
      if (p.exact && delta.param_bytes == p.bytes && delta.macs == p.macs) {
        std::printf("  MATCH (+%lld B, +%lld MAC)", p.bytes, p.macs);
      } else if (!p.exact) {
        std::printf("  DISCREPANCY (ours +%lld B/+%lld MAC, published "
                    "~+%lld B/+%lld MAC rounded)",
                    delta.param_bytes, delta.macs, p.bytes, p.macs);
      } else {
        std::printf("  DISCREPANCY (published +%lld B/+%lld MAC)", p.bytes,
                    p.macs);
      }
    }
    std::printf("\n");
    if (csv.is_open())
      csv << arch_name << ',' << variant_name(v) << ',' << total.param_bytes
          << ',' << total.macs << ',' << delta.param_bytes << ','
          << delta.macs << '\n';
  }
  return 0;
}

int cmd_crossval(const std::string& data_path, const std::string& val_path,
                 const std::string& test_path, const std::string& mode,
                 const std::string& variant_spec, const std::string& arch_name,
                 const std::string& out_dir, const ExperimentConfig& cfg) {
  const ArchSpec arch = arch_by_name(arch_name);
  auto variants = parse_variants(variant_spec);
  echo_config(cfg, out_dir);
  const TrainConfig tc = cfg.train_config();

  ExperimentResult result;
  if (mode.rfind("seeds:", 0) == 0) {
    const int n_seeds = std::stoi(mode.substr(6));
    if (n_seeds <= 0) throw UsageError("seeds count must be positive");
    if (val_path.empty() || test_path.empty())
      throw UsageError("seeds mode needs --val and --test datasets");
    BatchData train_data = BatchData::from_dataset(read_dataset(data_path));
    BatchData val_data = BatchData::from_dataset(read_dataset(val_path));
    BatchData test_data = BatchData::from_dataset(read_dataset(test_path));
    result = run_seeds_experiment(train_data, val_data, test_data, arch,
                                  variants, n_seeds, tc);
  } else if (mode == "loo") {
    Dataset ds = read_dataset(data_path);
    const int n_groups = ds.header.n_groups;
    result = run_loo_crossval(BatchData::from_dataset(ds), n_groups, arch,
                              variants, tc);
  } else {
    throw UsageError("mode must be seeds:<n> or loo");
  }

  write_experiment_csv((fs::path(out_dir) / "rows.csv").string(), result);
  const auto names = output_names(result.label_dim);
  bool have_stateless = false;
  for (FusionVariant v : variants)
    if (v == FusionVariant::Stateless) have_stateless = true;
  if (have_stateless) {
    for (FusionVariant v : variants) {
      if (v == FusionVariant::Stateless) continue;
      const PairedStats st = compare_variants(result, "stateless",
                                              variant_name(v));
      write_summary_csv(
          (fs::path(out_dir) / ("summary_" + std::string(variant_name(v)) +
                                ".csv")).string(),
          st, result.label_dim);
      for (std::size_t o = 0; o < st.delta_median.size(); ++o)
        std::printf("%s vs stateless  %-4s d_median %+.4f  p_greater %.4f  "
                    "p_two_sided %.4f\n",
                    variant_name(v), names[o].c_str(), st.delta_median[o],
                    st.p_greater[o], st.p_two_sided[o]);
    }
  }
  std::printf("wrote %zu result rows to %s/rows.csv\n", result.rows.size(),
              out_dir.c_str());
  return 0;
}

int cmd_report(const std::string& in_csv, const std::string& out_svg,
               const std::string& pair) {
  const std::size_t comma = pair.find(',');
  if (comma == std::string::npos)
    throw UsageError("--pair expects a,b variant names");
  const std::string a = pair.substr(0, comma), b = pair.substr(comma + 1);
  ExperimentResult result = read_experiment_csv(in_csv);
  if (result.rows.empty())
    throw UsageError("empty experiment csv: " + in_csv);
  write_report_svg(out_svg, result, a, b);
  std::printf("wrote %s\n", out_svg.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vision-state fusion benchmark kit"};
  app.require_subcommand(1);

  std::string config_file, out_dir = ".";
  std::vector<std::string> sets;
  auto add_config_opts = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "key = value config file");
    sub->add_option("--set", sets, "override, key=value (repeatable)");
  };

  int n = 0;
  std::uint64_t seed = 1;
  int groups = 1;
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--n", n, "sample count")->required();
  gen->add_option("--seed", seed, "scene seed");
  gen->add_option("--groups", groups, "pattern group count");
  add_config_opts(gen);

  std::string in_path, data_path, val_path, test_path, model_path;
  int copies = -1;
  auto* aug = app.add_subcommand("augment", "augment a dataset offline");
  aug->add_option("--in", in_path, "input dataset")->required();
  aug->add_option("--out", out_dir, "output directory")->required();
  aug->add_option("--copies", copies, "copies per sample");
  aug->add_option("--seed", seed, "augmentation seed");
  add_config_opts(aug);

  std::string variant_s = "stateless", arch_s = "desknet";
  bool qat = false;
  auto* tr = app.add_subcommand("train", "train one model");
  tr->add_option("--data", data_path, "training dataset")->required();
  tr->add_option("--val", val_path, "validation dataset")->required();
  tr->add_option("--variant", variant_s, "fusion variant");
  tr->add_option("--arch", arch_s, "architecture");
  tr->add_option("--out", out_dir, "output directory")->required();
  tr->add_flag("--qat", qat, "also quantization-aware fine-tune");
  add_config_opts(tr);

  auto* ev = app.add_subcommand("eval", "evaluate a model on a dataset");
  ev->add_option("--model", model_path, "model file")->required();
  ev->add_option("--data", data_path, "dataset")->required();
  ev->add_option("--out", out_dir, "output directory")->required();

  std::string out_csv;
  int state_dim = 1;
  auto* co = app.add_subcommand("costs", "parameter and MAC accounting");
  co->add_option("--arch", arch_s, "desknet or frontnet_sym")->required();
  co->add_option("--variant", variant_s, "variant name or all")->required();
  co->add_option("--state-dim", state_dim, "state vector width");
  co->add_option("--csv", out_csv, "also write a CSV table");

  std::string mode = "seeds:5";
  auto* cv = app.add_subcommand("crossval", "paired multi-variant experiment");
  cv->add_option("--data", data_path, "training (seeds) or full (loo) dataset")
      ->required();
  cv->add_option("--val", val_path, "validation dataset (seeds mode)");
  cv->add_option("--test", test_path, "test dataset (seeds mode)");
  cv->add_option("--mode", mode, "seeds:<n> or loo");
  cv->add_option("--variants", variant_s, "comma list or all");
  cv->add_option("--arch", arch_s, "architecture");
  cv->add_option("--out", out_dir, "output directory")->required();
  add_config_opts(cv);

  std::string pair = "stateless,mlp_branch", out_svg;
  auto* rp = app.add_subcommand("report", "render SVG plots from rows.csv");
  rp->add_option("--in", in_path, "experiment rows CSV")->required();
  rp->add_option("--out", out_svg, "output SVG path")->required();
  rp->add_option("--pair", pair, "variant pair a,b");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    ExperimentConfig cfg;
    apply_overrides(cfg, config_file, sets);
    if (*gen) {
      if (gen->count("--seed")) cfg.set("scene.seed", std::to_string(seed));
      if (gen->count("--groups"))
        cfg.set("scene.groups", std::to_string(groups));
      return cmd_gen(out_dir, n, cfg);
    }
    if (*aug) {
      if (aug->count("--seed")) cfg.set("augment.seed", std::to_string(seed));
      if (aug->count("--copies"))
        cfg.set("augment.copies", std::to_string(copies));
      return cmd_augment(in_path, out_dir, cfg);
    }
    if (*tr)
      return cmd_train(data_path, val_path, variant_s, arch_s, qat, out_dir,
                       cfg);
    if (*ev) return cmd_eval(model_path, data_path, out_dir);
    if (*co) return cmd_costs(arch_s, variant_s, state_dim, out_csv);
    if (*cv)
      return cmd_crossval(data_path, val_path, test_path, mode, variant_s,
                          arch_s, out_dir, cfg);
    if (*rp) return cmd_report(in_path, out_svg, pair);
    return 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
