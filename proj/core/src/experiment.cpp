#include "vsf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "vsf/errors.hpp"
#include "vsf/wilcoxon.hpp"

namespace vsf {

namespace {

EvalReport report_from_preds(const std::vector<float>& preds,
                             const BatchData& test) {
  EvalReport rep;
  rep.n_samples = test.n;
  const int ld = test.label_dim;
  for (int o = 0; o < ld; ++o) {
    std::vector<double> y(test.n), yhat(test.n);
    for (int i = 0; i < test.n; ++i) {
      y[i] = test.labels[std::size_t(i) * ld + o];
      yhat[i] = preds[std::size_t(i) * ld + o];
    }
    OutputMetrics m;
    m.r2 = r2_score(y, yhat);
    m.mse = mse(y, yhat);
    m.mae = mae(y, yhat);
    m.dummy_mse = dummy_mse(y);
    rep.outputs.push_back(m);
  }
  if (ld == 7) {
    std::vector<Quaternion> truth(test.n), pred(test.n);
    for (int i = 0; i < test.n; ++i) {
      const float* yl = test.labels.data() + std::size_t(i) * ld + 3;
      const float* yp = preds.data() + std::size_t(i) * ld + 3;
      truth[i] = Quaternion{yl[0], yl[1], yl[2], yl[3]};
      pred[i] = Quaternion{yp[0], yp[1], yp[2], yp[3]};
    }
    rep.has_rotation = true;
    rep.rotation_error_deg = mean_rotation_error_deg(truth, pred);
  }
  return rep;
}

template <typename ForwardFn>
std::vector<float> batched_forward(const BatchData& d, int label_dim,
                                   ForwardFn&& fn) {
  const std::size_t plane = std::size_t(d.height) * d.width;
  std::vector<float> preds;
  preds.reserve(std::size_t(d.n) * label_dim);
  constexpr int kBatch = 256;
  for (int at = 0; at < d.n; at += kBatch) {
    const int bn = std::min(kBatch, d.n - at);
    std::vector<float> images(d.images.begin() + std::size_t(at) * plane,
                              d.images.begin() + std::size_t(at + bn) * plane);
    std::vector<float> states(
        d.states.begin() + std::size_t(at) * d.state_dim,
        d.states.begin() + std::size_t(at + bn) * d.state_dim);
    auto out = fn(images, states, bn);
    preds.insert(preds.end(), out.begin(), out.end());
  }
  return preds;
}

}  // namespace

EvalReport evaluate(Model<float>& model, const BatchData& test) {
  if (test.n == 0) throw std::invalid_argument("evaluate: empty test set");
  auto preds = batched_forward(
      test, test.label_dim,
      [&](const std::vector<float>& im, const std::vector<float>& st, int bn) {
        return model.forward(im, st, bn, RunMode::Eval);
      });
  return report_from_preds(preds, test);
}

EvalReport evaluate(const QuantModel& qm, const BatchData& test) {
  if (test.n == 0) throw std::invalid_argument("evaluate: empty test set");
  auto preds = batched_forward(
      test, test.label_dim,
      [&](const std::vector<float>& im, const std::vector<float>& st, int bn) {
        return q_forward(qm, im, st, bn);
      });
  return report_from_preds(preds, test);
}

std::vector<std::string> output_names(int label_dim) {
  if (label_dim == 4) return {"x", "y", "z", "phi"};
  if (label_dim == 7) return {"x", "y", "z", "qx", "qy", "qz", "qw"};
  std::vector<std::string> names;
  for (int i = 0; i < label_dim; ++i) names.push_back("y" + std::to_string(i));
  return names;
}

BatchData subset(const BatchData& d, const std::vector<int>& rows) {
  BatchData out;
  out.n = int(rows.size());
  out.height = d.height;
  out.width = d.width;
  out.state_dim = d.state_dim;
  out.label_dim = d.label_dim;
  const std::size_t plane = std::size_t(d.height) * d.width;
  out.images.resize(rows.size() * plane);
  out.states.resize(rows.size() * d.state_dim);
  out.labels.resize(rows.size() * d.label_dim);
  out.group_ids.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t s = std::size_t(rows[i]);
    std::copy_n(d.images.begin() + s * plane, plane,
                out.images.begin() + i * plane);
    std::copy_n(d.states.begin() + s * d.state_dim, d.state_dim,
                out.states.begin() + i * d.state_dim);
    std::copy_n(d.labels.begin() + s * d.label_dim, d.label_dim,
                out.labels.begin() + i * d.label_dim);
    out.group_ids[i] = d.group_ids[s];
  }
  return out;
}

ExperimentResult run_seeds_experiment(
    const BatchData& train_data, const BatchData& val_data,
    const BatchData& test_data, const ArchSpec& arch,
    const std::vector<FusionVariant>& variants, int n_seeds,
    const TrainConfig& config) {
  if (n_seeds < 2)
    throw std::invalid_argument("run_seeds_experiment: need at least 2 seeds");
  ExperimentResult result;
  result.label_dim = test_data.label_dim;
  for (int s = 0; s < n_seeds; ++s) {
    TrainConfig cfg = config;
    cfg.seed = config.seed + std::uint64_t(s);
    for (FusionVariant v : variants) {
      Model<float> model(arch, v, train_data.state_dim, cfg.seed);
      train(model, train_data, val_data, cfg);
      result.rows.push_back(
          {variant_name(v), "seed" + std::to_string(s), evaluate(model, test_data)});
    }
  }
  return result;
}

ExperimentResult run_loo_crossval(const BatchData& all, int n_groups,
                                  const ArchSpec& arch,
                                  const std::vector<FusionVariant>& variants,
                                  const TrainConfig& config) {
  if (n_groups < 3)
    throw std::invalid_argument("loo_crossval: need at least 3 groups");
  ExperimentResult result;
  result.label_dim = all.label_dim;
  for (int g = 0; g < n_groups; ++g) {
    std::vector<int> test_rows, rest;
    for (int i = 0; i < all.n; ++i)
      (all.group_ids[i] == g ? test_rows : rest).push_back(i);
    if (test_rows.empty())
      throw std::invalid_argument("loo_crossval: empty group " +
                                  std::to_string(g));
    // 90/10 train/validation split of the remainder by sample index
    const int n_val = std::max(1, int(rest.size()) / 10);
    const int n_train = int(rest.size()) - n_val;
    std::vector<int> train_rows(rest.begin(), rest.begin() + n_train);
    std::vector<int> val_rows(rest.begin() + n_train, rest.end());
    BatchData tr = subset(all, train_rows);
    BatchData va = subset(all, val_rows);
    BatchData te = subset(all, test_rows);
    TrainConfig cfg = config;
    cfg.seed = config.seed + std::uint64_t(g);
    for (FusionVariant v : variants) {
      Model<float> model(arch, v, all.state_dim, cfg.seed);
      train(model, tr, va, cfg);
      result.rows.push_back(
          {variant_name(v), "group" + std::to_string(g), evaluate(model, te)});
    }
  }
  return result;
}

PairedStats compare_variants(const ExperimentResult& result,
                             const std::string& variant_a,
                             const std::string& variant_b) {
  PairedStats st;
  st.variant_a = variant_a;
  st.variant_b = variant_b;
  std::map<std::string, const EvalReport*> by_key_a, by_key_b;
  std::vector<std::string> key_order;
  for (const auto& row : result.rows) {
    // independent checks so that a degenerate self-comparison still pairs
    if (row.variant == variant_a) {
      if (!by_key_a.count(row.key)) key_order.push_back(row.key);
      by_key_a[row.key] = &row.report;
    }
    if (row.variant == variant_b) by_key_b[row.key] = &row.report;
  }
  for (const auto& k : key_order)
    if (by_key_b.count(k)) st.keys.push_back(k);
  if (st.keys.empty())
    throw std::invalid_argument("compare_variants: no shared repetitions for " +
                                variant_a + " vs " + variant_b);

  const int n_out = int(by_key_a[st.keys[0]]->outputs.size());
  st.scores_a.assign(n_out, {});
  st.scores_b.assign(n_out, {});
  for (const auto& k : st.keys) {
    for (int o = 0; o < n_out; ++o) {
      st.scores_a[o].push_back(by_key_a[k]->outputs[o].r2);
      st.scores_b[o].push_back(by_key_b[k]->outputs[o].r2);
    }
  }
  for (int o = 0; o < n_out; ++o) {
    st.median_a.push_back(median(st.scores_a[o]));
    st.median_b.push_back(median(st.scores_b[o]));
    st.delta_median.push_back(st.median_b[o] - st.median_a[o]);
    std::vector<double> diffs(st.keys.size());
    for (std::size_t i = 0; i < st.keys.size(); ++i)
      diffs[i] = st.scores_b[o][i] - st.scores_a[o][i];
    try {
      st.p_greater.push_back(wilcoxon_exact(diffs, Alternative::Greater));
      st.p_two_sided.push_back(wilcoxon_exact(diffs, Alternative::TwoSided));
    } catch (const NumericError&) {
      // all-zero differences: no evidence either way
      st.p_greater.push_back(1.0);
      st.p_two_sided.push_back(1.0);
    }
  }
  return st;
}

void write_experiment_csv(const std::string& path,
                          const ExperimentResult& result) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  f << "variant,key,output,r2,mse,mae,dummy_mse,rotation_error_deg\n";
  const auto names = output_names(result.label_dim);
  f.precision(10);
  for (const auto& row : result.rows) {
    for (std::size_t o = 0; o < row.report.outputs.size(); ++o) {
      const auto& m = row.report.outputs[o];
      f << row.variant << ',' << row.key << ',' << names[o] << ',' << m.r2
        << ',' << m.mse << ',' << m.mae << ',' << m.dummy_mse << ',';
      if (row.report.has_rotation) f << row.report.rotation_error_deg;
      f << '\n';
    }
  }
  if (!f) throw FormatError(FormatError::Kind::Io, "write failed: " + path);
}

ExperimentResult read_experiment_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  std::string line;
  if (!std::getline(f, line) ||
      line.rfind("variant,key,output,", 0) != 0)
    throw FormatError(FormatError::Kind::Inconsistent,
                      "bad experiment csv header");
  ExperimentResult result;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string variant, key, output, field;
    std::vector<double> vals;
    if (!std::getline(ss, variant, ',') || !std::getline(ss, key, ',') ||
        !std::getline(ss, output, ','))
      throw FormatError(FormatError::Kind::Inconsistent,
                        "bad experiment csv row: " + line);
    while (std::getline(ss, field, ',')) {
      if (field.empty()) continue;
      vals.push_back(std::stod(field));
    }
    auto it = index.find({variant, key});
    if (it == index.end()) {
      index[{variant, key}] = result.rows.size();
      result.rows.push_back({variant, key, {}});
      it = index.find({variant, key});
    }
    ExperimentRow& row = result.rows[it->second];
    if (vals.size() < 4)
      throw FormatError(FormatError::Kind::Inconsistent,
                        "bad experiment csv row: " + line);
    row.report.outputs.push_back({vals[0], vals[1], vals[2], vals[3]});
    if (vals.size() >= 5) {
      row.report.has_rotation = true;
      row.report.rotation_error_deg = vals[4];
    }
  }
  for (const auto& row : result.rows)
    result.label_dim =
        std::max(result.label_dim, int(row.report.outputs.size()));
  return result;
}

void write_summary_csv(const std::string& path, const PairedStats& stats,
                       int label_dim) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  f << "output,median_" << stats.variant_a << ",median_" << stats.variant_b
    << ",delta_median,p_greater,p_two_sided\n";
  const auto names = output_names(label_dim);
  f.precision(10);
  for (std::size_t o = 0; o < stats.median_a.size(); ++o)
    f << names[o] << ',' << stats.median_a[o] << ',' << stats.median_b[o]
      << ',' << stats.delta_median[o] << ',' << stats.p_greater[o] << ','
      << stats.p_two_sided[o] << '\n';
  if (!f) throw FormatError(FormatError::Kind::Io, "write failed: " + path);
}

}  // namespace vsf
