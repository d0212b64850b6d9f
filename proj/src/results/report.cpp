// Copyright 2026 The sslhar Authors.
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

#include "sslhar/results/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <Eigen/Dense>

#include "sslhar/errors.hpp"
#include "sslhar/eval/metrics.hpp"

namespace sslhar::results {

namespace {

const std::vector<std::string> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) { row(header); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << csv_field(cells[i]);
    out_ << "\n";
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

class Svg {
 public:
  Svg(double w, double h) : w_(w), h_(h) {}
  void rect(double x, double y, double w, double h, const std::string& fill) {
    body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(std::max(w, 0.0)) << "\" height=\""
          << fmt(std::max(h, 0.0)) << "\" fill=\"" << fill << "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#000", double width = 1) {
    body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2) << "\" y2=\"" << fmt(y2)
          << "\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width) << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, double size = 11, const std::string& anchor = "start") {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << fmt(size)
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << xml(s) << "</text>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) body_ << fmt(x) << "," << fmt(y) << " ";
    body_ << "\"/>\n";
  }
  std::string str() const {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w_) << "\" height=\"" << fmt(h_)
       << "\" viewBox=\"0 0 " << fmt(w_) << " " << fmt(h_) << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n"
       << body_.str() << "</svg>\n";
    return os.str();
  }

 private:
  double w_, h_;
  std::ostringstream body_;
};

struct Bar {
  std::string label;
  double mean = 0.0;
  double std = 0.0;
};

std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars, double lo,
                      double hi) {
  const double left = 60, top = 30, plot_h = 240, bar_w = 28, gap = 14;
  const double plot_w = std::max(200.0, static_cast<double>(bars.size()) * (bar_w + gap) + gap);
  Svg svg(left + plot_w + 20, top + plot_h + 130);
  svg.text(left, 18, title, 13);
  auto y_of = [&](double v) { return top + plot_h * (1.0 - (std::clamp(v, lo, hi) - lo) / (hi - lo)); };
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    svg.line(left - 4, y_of(v), left + plot_w, y_of(v), "#ddd");
    svg.text(left - 6, y_of(v) + 4, fmt(v), 10, "end");
  }
  svg.line(left, top, left, top + plot_h);
  svg.line(left, y_of(std::max(lo, 0.0)), left + plot_w, y_of(std::max(lo, 0.0)));
  svg.text(14, top + plot_h / 2, y_label, 11, "middle");
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double x = left + gap + static_cast<double>(i) * (bar_w + gap);
    const double base = y_of(std::max(lo, 0.0));
    const double yv = y_of(bars[i].mean);
    svg.rect(x, std::min(base, yv), bar_w, std::abs(base - yv), kPalette[i % kPalette.size()]);
    svg.line(x + bar_w / 2, y_of(bars[i].mean - bars[i].std), x + bar_w / 2, y_of(bars[i].mean + bars[i].std));
    svg.text(x + bar_w / 2, top + plot_h + 14, bars[i].label, 9, "middle");
  }
  return svg.str();
}

struct Series {
  std::string name;
  std::vector<double> x, y, err;
};

std::string line_chart(const std::string& title, const std::string& x_label, const std::vector<Series>& series,
                       bool log_x) {
  const double left = 60, top = 30, plot_w = 420, plot_h = 240;
  Svg svg(left + plot_w + 180, top + plot_h + 60);
  svg.text(left, 18, title, 13);
  double x_lo = INFINITY, x_hi = -INFINITY;
  for (const auto& s : series) {
    for (double x : s.x) {
      const double v = log_x ? std::log10(std::max(x, 1e-12)) : x;
      x_lo = std::min(x_lo, v);
      x_hi = std::max(x_hi, v);
    }
  }
  if (!std::isfinite(x_lo)) {
    x_lo = 0;
    x_hi = 1;
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1;
  auto px = [&](double x) {
    const double v = log_x ? std::log10(std::max(x, 1e-12)) : x;
    return left + plot_w * (v - x_lo) / (x_hi - x_lo);
  };
  auto py = [&](double y) { return top + plot_h * (1.0 - std::clamp(y, 0.0, 1.0)); };
  for (int t = 0; t <= 4; ++t) {
    svg.line(left, py(t / 4.0), left + plot_w, py(t / 4.0), "#ddd");
    svg.text(left - 6, py(t / 4.0) + 4, fmt(t / 4.0), 10, "end");
  }
  svg.line(left, top, left, top + plot_h);
  svg.line(left, top + plot_h, left + plot_w, top + plot_h);
  svg.text(left + plot_w / 2, top + plot_h + 36, x_label + (log_x ? " (log scale)" : ""), 11, "middle");
  std::set<double> ticks;
  for (const auto& s : series) ticks.insert(s.x.begin(), s.x.end());
  for (double t : ticks) svg.text(px(t), top + plot_h + 16, fmt(t), 9, "middle");
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string color = kPalette[k % kPalette.size()];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      pts.emplace_back(px(s.x[i]), py(s.y[i]));
      if (i < s.err.size()) svg.line(px(s.x[i]), py(s.y[i] - s.err[i]), px(s.x[i]), py(s.y[i] + s.err[i]), color);
    }
    svg.polyline(pts, color);
    svg.rect(left + plot_w + 16, top + 14.0 * static_cast<double>(k), 10, 10, color);
    svg.text(left + plot_w + 30, top + 9 + 14.0 * static_cast<double>(k), s.name, 10);
  }
  return svg.str();
}

struct Heat {
  std::string title;
  Eigen::MatrixXd values;
  std::vector<std::string> rows, cols;
};

std::string heatmaps(const std::vector<Heat>& maps) {
  const double cell = 36, pad = 90;
  double width = 300, height = 40;
  for (const auto& m : maps) {
    width = std::max(width, pad + cell * static_cast<double>(m.values.cols()) + 20);
    height += pad + cell * static_cast<double>(m.values.rows()) + 20;
  }
  Svg svg(width, height);
  svg.text(10, 18, "Layerwise linear CKA", 13);
  double y0 = 40;
  for (const auto& m : maps) {
    svg.text(10, y0 + 12, m.title, 12);
    const double gy = y0 + pad;
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
      svg.text(pad - 6, gy + cell * static_cast<double>(i) + cell / 2 + 4, m.rows[static_cast<std::size_t>(i)], 9, "end");
      for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
        const int shade = static_cast<int>(std::lround(255.0 * (1.0 - std::clamp(m.values(i, j), 0.0, 1.0))));
        std::ostringstream color;
        color << "rgb(" << shade << "," << shade << ",255)";
        svg.rect(pad + cell * static_cast<double>(j), gy + cell * static_cast<double>(i), cell, cell, color.str());
        svg.text(pad + cell * (static_cast<double>(j) + 0.5), gy + cell * static_cast<double>(i) + cell / 2 + 4,
                 fmt(std::round(m.values(i, j) * 100) / 100), 9, "middle");
      }
    }
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      svg.text(pad + cell * (static_cast<double>(j) + 0.5), gy - 6, m.cols[static_cast<std::size_t>(j)], 9, "middle");
    }
    y0 = gy + cell * static_cast<double>(m.values.rows()) + 20;
  }
  return svg.str();
}

Json protocol_tags(const RunRecord& r) {
  Json t = r.tags.is_object() ? r.tags : Json::object();
  t.erase("stage");
  t.erase("combo_index");
  t.erase("final_seeds");
  return t;
}

/// Records of the re-run combo of each (method, dataset, criterion, protocol)
/// group: the combo run with the most seeds, ties going to the higher mean F1.
/// Final-stage records name their seeds; search runs of other seeds are dropped.
std::vector<RunRecord> final_records(const std::vector<RunRecord>& records) {
  std::map<std::string, std::map<std::string, std::vector<const RunRecord*>>> groups;
  for (const auto& r : records) {
    if (r.status != "ok" || !r.metrics.contains("macro_f1")) continue;
    const std::string g = Json{r.method, r.dataset_id, r.criterion, protocol_tags(r)}.dump();
    groups[g][r.combo.key()].push_back(&r);
  }
  std::vector<RunRecord> out;
  for (const auto& [g, combos] : groups) {
    const std::vector<const RunRecord*>* best = nullptr;
    std::size_t best_seeds = 0;
    double best_mean = -1.0;
    for (const auto& [key, rs] : combos) {
      std::set<std::uint64_t> seeds;
      double sum = 0.0;
      for (const auto* r : rs) {
        seeds.insert(r->seed);
        sum += r->metrics["macro_f1"].get<double>();
      }
      const double mean = sum / static_cast<double>(rs.size());
      if (!best || seeds.size() > best_seeds || (seeds.size() == best_seeds && mean > best_mean)) {
        best = &rs;
        best_seeds = seeds.size();
        best_mean = mean;
      }
    }
    std::set<std::uint64_t> final_seeds;
    for (const auto* r : *best) {
      if (r->tags.contains("final_seeds")) {
        for (const auto& s : r->tags["final_seeds"]) final_seeds.insert(s.get<std::uint64_t>());
      }
    }
    for (const auto* r : *best) {
      if (final_seeds.empty() || final_seeds.count(r->seed)) out.push_back(*r);
    }
  }
  return out;
}

double f1_of(const RunRecord& r) { return r.metrics.value("macro_f1", NAN); }

/// Mean over seeds of each seed's fold-mean value.
eval::MeanStd seed_aggregate(const std::vector<const RunRecord*>& rs, double (*value)(const RunRecord&)) {
  std::map<std::uint64_t, std::vector<double>> by_seed;
  for (const auto* r : rs) {
    const double v = value(*r);
    if (std::isfinite(v)) by_seed[r->seed].push_back(v);
  }
  std::vector<double> means;
  for (const auto& [seed, vals] : by_seed) {
    double s = 0;
    for (double v : vals) s += v;
    means.push_back(s / static_cast<double>(vals.size()));
  }
  if (means.empty()) return {NAN, NAN};
  return eval::mean_std(means);
}

struct Output {
  std::string csv;
  std::string svg;
};

Output transfer_table(const std::vector<RunRecord>& stored) {
  const auto records = final_records(stored);
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) groups[{r.method, r.dataset_id, r.criterion}].push_back(&r);
  Csv csv({"method", "dataset_id", "criterion", "mean_f1", "std_f1", "seeds", "runs"});
  std::vector<Bar> bars;
  for (const auto& [key, rs] : groups) {
    const auto [method, dataset, criterion] = key;
    const auto ms = seed_aggregate(rs, f1_of);
    std::set<std::uint64_t> seeds;
    for (const auto* r : rs) seeds.insert(r->seed);
    csv.row({method, dataset, criterion, fmt(ms.mean), fmt(ms.std), std::to_string(seeds.size()),
             std::to_string(rs.size())});
    bars.push_back({method + "/" + dataset, ms.mean, ms.std});
  }
  return {csv.str(), bar_chart("Test macro F1 (mean +/- std over seeds)", "macro F1", bars, 0.0, 1.0)};
}

Output sweep_curves(const std::vector<RunRecord>& stored) {
  const auto records = final_records(stored);
  const std::map<std::string, std::string> axis{
      {"user_quantity", "pct"}, {"window_quantity", "pct"}, {"limited_labels", "n_per_class"}};
  std::map<std::tuple<std::string, std::string, std::string, double>, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    auto it = axis.find(r.criterion);
    if (it == axis.end() || !r.tags.contains(it->second)) continue;
    groups[{r.criterion, r.method, r.dataset_id, r.tags[it->second].get<double>()}].push_back(&r);
  }
  Csv csv({"criterion", "method", "dataset_id", "x", "mean_f1", "std_f1"});
  std::map<std::string, Series> series;
  for (const auto& [key, rs] : groups) {
    const auto& [criterion, method, dataset, x] = key;
    const auto ms = seed_aggregate(rs, f1_of);
    csv.row({criterion, method, dataset, fmt(x), fmt(ms.mean), fmt(ms.std)});
    auto& s = series[criterion + ": " + method + "/" + dataset];
    s.name = criterion + ": " + method + "/" + dataset;
    s.x.push_back(x);
    s.y.push_back(ms.mean);
    s.err.push_back(ms.std);
  }
  std::vector<Series> all;
  for (auto& [k, s] : series) all.push_back(std::move(s));
  return {csv.str(), line_chart("Macro F1 against data quantity", "percentage or labels per class", all, true)};
}

Output imbalance_bars(const std::vector<RunRecord>& stored) {
  const auto records = final_records(stored);
  std::map<std::tuple<std::string, std::string, double, std::string>, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    if (r.criterion != "source_imbalance" || !r.tags.contains("rho")) continue;
    groups[{r.method, r.dataset_id, r.tags["rho"].get<double>(), r.tags.value("subset", std::string("imbalanced"))}]
        .push_back(&r);
  }
  Csv csv({"method", "dataset_id", "rho", "subset", "mean_f1", "std_f1"});
  std::vector<Bar> bars;
  for (const auto& [key, rs] : groups) {
    const auto& [method, dataset, rho, subset] = key;
    const auto ms = seed_aggregate(rs, f1_of);
    csv.row({method, dataset, fmt(rho), subset, fmt(ms.mean), fmt(ms.std)});
    bars.push_back({method + " " + subset + " " + fmt(rho), ms.mean, ms.std});
  }
  return {csv.str(), bar_chart("Macro F1 by source imbalance", "macro F1", bars, 0.0, 1.0)};
}

Output similarity_heatmap(const std::vector<RunRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    if (r.status == "ok" && r.metrics.contains("cka")) groups[{r.method, r.dataset_id}].push_back(&r);
  }
  Csv csv({"method", "dataset_id", "layer_a", "layer_b", "cka", "runs"});
  std::vector<Heat> maps;
  for (const auto& [key, rs] : groups) {
    const Json& first = rs.front()->metrics["cka"];
    Heat h{key.first + "/" + key.second, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(first["values"].size()),
                                                               static_cast<Eigen::Index>(first["layer_names_b"].size())),
           first["layer_names_a"].get<std::vector<std::string>>(), first["layer_names_b"].get<std::vector<std::string>>()};
    int n = 0;
    for (const auto* r : rs) {
      const Json& v = r->metrics["cka"]["values"];
      if (v.size() != static_cast<std::size_t>(h.values.rows())) continue;
      for (Eigen::Index i = 0; i < h.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < h.values.cols(); ++j) {
          h.values(i, j) += v[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
        }
      }
      ++n;
    }
    h.values /= n;
    for (Eigen::Index i = 0; i < h.values.rows(); ++i) {
      for (Eigen::Index j = 0; j < h.values.cols(); ++j) {
        csv.row({key.first, key.second, h.rows[static_cast<std::size_t>(i)], h.cols[static_cast<std::size_t>(j)],
                 fmt(h.values(i, j)), std::to_string(n)});
      }
    }
    maps.push_back(std::move(h));
  }
  return {csv.str(), heatmaps(maps)};
}

Output variance_curves(const std::vector<RunRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<std::vector<double>>> groups;
  for (const auto& r : records) {
    if (r.status == "ok" && r.metrics.contains("variance_curve")) {
      groups[{r.method, r.dataset_id}].push_back(r.metrics["variance_curve"].get<std::vector<double>>());
    }
  }
  Csv csv({"method", "dataset_id", "component", "cumulative_variance", "std"});
  std::vector<Series> all;
  for (const auto& [key, curves] : groups) {
    std::size_t len = curves.front().size();
    for (const auto& c : curves) len = std::min(len, c.size());
    Series s;
    s.name = key.first + "/" + key.second;
    for (std::size_t i = 0; i < len; ++i) {
      std::vector<double> at;
      for (const auto& c : curves) at.push_back(c[i]);
      const auto ms = eval::mean_std(at);
      csv.row({key.first, key.second, std::to_string(i + 1), fmt(ms.mean), fmt(ms.std)});
      s.x.push_back(static_cast<double>(i + 1));
      s.y.push_back(ms.mean);
      s.err.push_back(ms.std);
    }
    all.push_back(std::move(s));
  }
  return {csv.str(), line_chart("Cumulative fraction of total variance", "principal component", all, false)};
}

Output separability_bars(const std::vector<RunRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    if (r.status == "ok" && r.metrics.contains("separability")) groups[{r.method, r.dataset_id}].push_back(&r);
  }
  Csv csv({"method", "dataset_id", "mean_gap", "std_gap", "mean_true_f1", "mean_random_f1", "runs"});
  std::vector<Bar> bars;
  for (const auto& [key, rs] : groups) {
    std::vector<double> gap, tf, rf;
    for (const auto* r : rs) {
      const Json& s = r->metrics["separability"];
      gap.push_back(s.at("gap").get<double>());
      tf.push_back(s.at("true_f1").get<double>());
      rf.push_back(s.at("random_f1").get<double>());
    }
    const auto g = eval::mean_std(gap);
    csv.row({key.first, key.second, fmt(g.mean), fmt(g.std), fmt(eval::mean_std(tf).mean),
             fmt(eval::mean_std(rf).mean), std::to_string(rs.size())});
    bars.push_back({key.first + "/" + key.second, g.mean, g.std});
  }
  return {csv.str(), bar_chart("Train F1 gap, true minus random labels", "F1 gap", bars, -0.2, 1.0)};
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + p.string());
  f << content;
  if (!f) throw Error("failed writing " + p.string());
}

}  // namespace

std::string to_string(ReportView v) {
  switch (v) {
    case ReportView::transfer_table: return "transfer_table";
    case ReportView::sweep_curves: return "sweep_curves";
    case ReportView::imbalance_bars: return "imbalance_bars";
    case ReportView::similarity_heatmap: return "similarity_heatmap";
    case ReportView::variance_curves: return "variance_curves";
    case ReportView::separability_bars: return "separability_bars";
  }
  return "";
}

ReportView parse_view(const std::string& s) {
  for (ReportView v : kAllViews) {
    if (to_string(v) == s) return v;
  }
  throw ValidationError("unknown report view '" + s + "'");
}

std::vector<std::filesystem::path> report(const std::vector<RunRecord>& records, ReportView view,
                                          const std::filesystem::path& out_dir) {
  Output out;
  switch (view) {
    case ReportView::transfer_table: out = transfer_table(records); break;
    case ReportView::sweep_curves: out = sweep_curves(records); break;
    case ReportView::imbalance_bars: out = imbalance_bars(records); break;
    case ReportView::similarity_heatmap: out = similarity_heatmap(records); break;
    case ReportView::variance_curves: out = variance_curves(records); break;
    case ReportView::separability_bars: out = separability_bars(records); break;
  }
  std::filesystem::create_directories(out_dir);
  const auto csv = out_dir / (to_string(view) + ".csv");
  const auto svg = out_dir / (to_string(view) + ".svg");
  write_file(csv, out.csv);
  write_file(svg, out.svg);
  return {csv, svg};
}

std::vector<std::filesystem::path> report(const std::filesystem::path& store_path, ReportView view,
                                          const std::filesystem::path& out_dir) {
  return report(read_store(store_path).records, view, out_dir);
}

}  // namespace sslhar::results
