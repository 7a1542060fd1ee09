#include "hierlab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hierlab/error.hpp"

namespace hierlab {
namespace {

constexpr const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
                                    "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd"};

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string fmt(double v, int digits = 2) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s == "-0.00" || s == "-0.000" || s == "-0") s.erase(0, 1);
  return s;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  return out + "\"";
}

class Svg {
 public:
  Svg(double w, double h) : w_(w), h_(h) {}

  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& extra = "") {
    os_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
        << "\" fill=\"" << fill << "\"" << extra << "/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0) {
    os_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2) << "\" y2=\"" << fmt(y2)
        << "\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width, 1) << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, const std::string& anchor = "start", int size = 12) {
    os_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-family=\"sans-serif\" font-size=\"" << size
        << "\" text-anchor=\"" << anchor << "\">" << esc(s) << "</text>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width = 2.0) {
    os_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width, 1) << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) os_ << (i ? " " : "") << fmt(pts[i].first) << "," << fmt(pts[i].second);
    os_ << "\"/>\n";
  }
  void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill, double opacity) {
    os_ << "<polygon fill=\"" << fill << "\" fill-opacity=\"" << fmt(opacity) << "\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) os_ << (i ? " " : "") << fmt(pts[i].first) << "," << fmt(pts[i].second);
    os_ << "\"/>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w_, 0) << "\" height=\"" << fmt(h_, 0)
        << "\" viewBox=\"0 0 " << fmt(w_, 0) << " " << fmt(h_, 0) << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << fmt(w_, 0) << "\" height=\"" << fmt(h_, 0) << "\" fill=\"white\"/>\n"
        << os_.str() << "</svg>\n";
    return out.str();
  }

 private:
  double w_, h_;
  std::ostringstream os_;
};

/// Plot area with linear axes.
struct Frame {
  double x0, y0, w, h;
  double xmin, xmax, ymin, ymax;

  double px(double x) const { return x0 + (xmax > xmin ? (x - xmin) / (xmax - xmin) : 0.5) * w; }
  double py(double y) const { return y0 + h - (ymax > ymin ? (y - ymin) / (ymax - ymin) : 0.5) * h; }

  void draw(Svg& svg, const std::string& title, const std::string& xlabel, const std::string& ylabel) const {
    svg.line(x0, y0 + h, x0 + w, y0 + h, "black");
    svg.line(x0, y0, x0, y0 + h, "black");
    for (int i = 0; i <= 4; ++i) {
      const double fx = xmin + (xmax - xmin) * i / 4.0;
      const double fy = ymin + (ymax - ymin) * i / 4.0;
      svg.line(px(fx), y0 + h, px(fx), y0 + h + 4, "black");
      svg.text(px(fx), y0 + h + 16, std::abs(xmax - xmin) >= 100 ? fmt(fx, 0) : fmt(fx, 2), "middle", 10);
      svg.line(x0 - 4, py(fy), x0, py(fy), "black");
      svg.line(x0, py(fy), x0 + w, py(fy), "#e5e5e5", 0.5);
      svg.text(x0 - 6, py(fy) + 3, fmt(fy, 2), "end", 10);
    }
    svg.text(x0 + w / 2, y0 - 8, title, "middle", 13);
    svg.text(x0 + w / 2, y0 + h + 32, xlabel, "middle", 11);
    svg.text(x0 - 44, y0 + h / 2, ylabel, "middle", 11);
  }
};

void legend(Svg& svg, double x, double y, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    svg.rect(x, y + 16.0 * i - 9, 12, 10, color(i));
    svg.text(x + 18, y + 16.0 * i, names[i], "start", 11);
  }
}

std::vector<std::string> variants_of(const std::vector<RunRecord>& records) {
  std::vector<std::string> v;
  for (const auto& r : records)
    if (std::find(v.begin(), v.end(), r.variant) == v.end()) v.push_back(r.variant);
  std::sort(v.begin(), v.end());
  return v;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << s;
}

struct Rendered {
  std::string svg;
  std::string csv;
};

Rendered learning_curve(const std::vector<RunRecord>& records, const PlotOptions& o) {
  const bool success = o.protocol == Protocol::kBestSuccess;
  // task -> variant -> runs
  std::map<std::string, std::map<std::string, std::vector<const RunRecord*>>> groups;
  for (const auto& r : records) {
    if (r.series.empty()) throw InputError("learning_curve: run '" + r.variant + "' seed " + std::to_string(r.seed) +
                                           " has no evaluation series");
    groups[r.task][r.variant].push_back(&r);
  }
  const auto variants = variants_of(records);
  const double panel_h = 300, width = 760;
  Svg svg(width, 40 + panel_h * static_cast<double>(groups.size()));
  std::ostringstream csv;
  csv << "task,variant,t,mean,ci_lo,ci_hi,n_runs\n";
  BootstrapOptions bo;
  bo.n_resamples = o.n_resamples;

  double top = 30;
  for (const auto& [task, by_variant] : groups) {
    struct Curve {
      std::size_t color_index;
      std::vector<double> t, mean, lo, hi;
    };
    std::vector<Curve> curves;
    double tmax = 0, ymin = success ? 0.0 : 0.0, ymax = success ? 1.0 : 0.0;
    for (const auto& [variant, runs] : by_variant) {
      Curve c;
      c.color_index = static_cast<std::size_t>(std::find(variants.begin(), variants.end(), variant) - variants.begin());
      const auto& ref = runs.front()->series;
      for (const RunRecord* r : runs)
        if (r->series.size() != ref.size())
          throw InputError("learning_curve: runs of '" + variant + "' on " + task + " have different eval schedules");
      for (std::size_t k = 0; k < ref.size(); ++k) {
        std::vector<double> ys;
        for (const RunRecord* r : runs) {
          if (r->series[k].t != ref[k].t)
            throw InputError("learning_curve: runs of '" + variant + "' on " + task + " have different eval schedules");
          ys.push_back(success ? r->series[k].success_rate : r->series[k].mean_return);
        }
        const double m = aggregate(ys, Metric::kMean);
        Interval ci{m, m};
        if (ys.size() > 1) {
          Rng rng(o.seed);
          ci = bootstrap_ci(ys, Metric::kMean, bo, rng);
        }
        c.t.push_back(static_cast<double>(ref[k].t));
        c.mean.push_back(m);
        c.lo.push_back(ci.lo);
        c.hi.push_back(ci.hi);
        csv << csv_field(task) << ',' << csv_field(variant) << ',' << ref[k].t << ',' << num(m) << ',' << num(ci.lo)
            << ',' << num(ci.hi) << ',' << ys.size() << '\n';
        tmax = std::max(tmax, c.t.back());
        ymin = std::min(ymin, ci.lo);
        ymax = std::max(ymax, ci.hi);
      }
      curves.push_back(std::move(c));
    }
    Frame f{70, top + 20, 460, panel_h - 90, 0, tmax, ymin, ymax};
    f.draw(svg, task, "environment steps", success ? "success rate" : "mean return");
    for (const auto& c : curves) {
      std::vector<std::pair<double, double>> band, mid;
      for (std::size_t k = 0; k < c.t.size(); ++k) {
        band.emplace_back(f.px(c.t[k]), f.py(c.hi[k]));
        mid.emplace_back(f.px(c.t[k]), f.py(c.mean[k]));
      }
      for (std::size_t k = c.t.size(); k-- > 0;) band.emplace_back(f.px(c.t[k]), f.py(c.lo[k]));
      svg.polygon(band, color(c.color_index), 0.2);
      svg.polyline(mid, color(c.color_index));
    }
    legend(svg, 550, top + 40, variants);
    top += panel_h;
  }
  return {svg.str(), csv.str()};
}

Rendered profile(const std::vector<RunRecord>& records, const PlotOptions& o) {
  const auto scores = collect_scores(records, o.protocol);
  const auto tau = default_tau_grid();
  std::vector<double> grid = tau;
  if (o.protocol == Protocol::kLastReturn) {
    // Returns are not in [0, 1]; span the observed range instead.
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& [v, set] : scores)
      for (const auto& [t, xs] : set)
        for (double x : xs) {
          lo = first ? x : std::min(lo, x);
          hi = first ? x : std::max(hi, x);
          first = false;
        }
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = lo + (hi - lo) * tau[i];
  }
  Svg svg(760, 360);
  Frame f{70, 40, 460, 260, grid.front(), grid.back(), 0.0, 1.0};
  f.draw(svg, "performance profile (run score)", o.protocol == Protocol::kBestSuccess ? "tau (best success)" : "tau (last return)",
         "fraction of runs > tau");
  std::ostringstream csv;
  csv << "variant,tau,fraction\n";
  std::vector<std::string> names;
  std::size_t i = 0;
  for (const auto& [variant, set] : scores) {
    const auto pts = performance_profile(set, grid, ProfileMode::kRunScore);
    std::vector<std::pair<double, double>> line;
    for (const auto& p : pts) {
      line.emplace_back(f.px(p.tau), f.py(p.fraction));
      csv << csv_field(variant) << ',' << num(p.tau) << ',' << num(p.fraction) << '\n';
    }
    svg.polyline(line, color(i++));
    names.push_back(variant);
  }
  legend(svg, 550, 60, names);
  return {svg.str(), csv.str()};
}

Rendered prob_improvement(const std::vector<RunRecord>& records, const PlotOptions& o) {
  const auto scores = collect_scores(records, o.protocol);
  if (scores.size() < 2) throw InputError("prob_improvement: need runs of at least two variants");
  struct Row {
    std::string x, y;
    double p;
  };
  std::vector<Row> rows;
  for (const auto& [x, sx] : scores)
    for (const auto& [y, sy] : scores)
      if (x != y) rows.push_back({x, y, probability_of_improvement(sx, sy)});
  Svg svg(760, 60 + 26.0 * static_cast<double>(rows.size()));
  const double x0 = 330, w = 380;
  svg.text(x0 + w / 2, 24, "probability of improvement P(X > Y)", "middle", 13);
  std::ostringstream csv;
  csv << "x_variant,y_variant,probability\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double y = 44 + 26.0 * static_cast<double>(i);
    svg.text(x0 - 8, y + 13, rows[i].x + " vs " + rows[i].y, "end", 11);
    svg.rect(x0, y, w * rows[i].p, 18, color(0));
    svg.text(x0 + w * rows[i].p + 4, y + 13, fmt(rows[i].p, 3), "start", 10);
    csv << csv_field(rows[i].x) << ',' << csv_field(rows[i].y) << ',' << num(rows[i].p) << '\n';
  }
  svg.line(x0 + w / 2, 36, x0 + w / 2, 44 + 26.0 * static_cast<double>(rows.size()), "#888888");
  return {svg.str(), csv.str()};
}

Rendered agg_bars(const std::vector<RunRecord>& records, const PlotOptions& o) {
  AggregateOptions ao;
  ao.protocol = o.protocol;
  ao.seed = o.seed;
  ao.bootstrap.n_resamples = o.n_resamples;
  const auto rows = aggregate_table(collect_scores(records, o.protocol), ao);
  const auto variants = variants_of(records);
  const std::vector<std::string> metrics = {"mean", "median", "iqm", "og"};
  double lo = 0.0, hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min({lo, r.ci_lo, r.value});
    hi = std::max({hi, r.ci_hi, r.value});
  }
  if (o.protocol == Protocol::kBestSuccess) hi = std::max(hi, 1.0);
  const double panel_w = 180;
  Svg svg(60 + panel_w * 4 + 40, 120 + 24.0 * static_cast<double>(variants.size()));
  std::ostringstream csv;
  write_aggregate_csv(rows, csv);
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    Frame f{60 + panel_w * static_cast<double>(m) + 10, 40, panel_w - 30, 24.0 * static_cast<double>(variants.size()),
            lo, hi, 0, 1};
    svg.text(f.x0 + f.w / 2, 28, metrics[m], "middle", 13);
    svg.line(f.x0, f.y0 + f.h, f.x0 + f.w, f.y0 + f.h, "black");
    svg.text(f.x0, f.y0 + f.h + 14, fmt(lo, 2), "middle", 10);
    svg.text(f.x0 + f.w, f.y0 + f.h + 14, fmt(hi, 2), "middle", 10);
    for (const auto& r : rows) {
      if (r.metric != metrics[m]) continue;
      const auto vi = static_cast<std::size_t>(std::find(variants.begin(), variants.end(), r.variant) - variants.begin());
      const double y = f.y0 + 24.0 * static_cast<double>(vi) + 4;
      svg.rect(f.px(r.ci_lo), y, std::max(1.0, f.px(r.ci_hi) - f.px(r.ci_lo)), 16, color(vi), " fill-opacity=\"0.5\"");
      svg.line(f.px(r.value), y, f.px(r.value), y + 16, "black", 2.0);
    }
  }
  legend(svg, 70, 70 + 24.0 * static_cast<double>(variants.size()), variants);
  return {svg.str(), csv.str()};
}

}  // namespace

std::string to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::kLearningCurve: return "learning_curve";
    case PlotKind::kProfile: return "profile";
    case PlotKind::kProbImprovement: return "prob_improvement";
    case PlotKind::kAggBars: return "agg_bars";
  }
  return "?";
}

PlotKind parse_plot_kind(const std::string& name) {
  for (PlotKind k : {PlotKind::kLearningCurve, PlotKind::kProfile, PlotKind::kProbImprovement, PlotKind::kAggBars})
    if (to_string(k) == name) return k;
  throw InputError("unknown plot kind '" + name + "' (expected learning_curve, profile, prob_improvement or agg_bars)");
}

PlotFiles write_plot(const std::vector<RunRecord>& records, PlotKind kind, const std::filesystem::path& svg_path,
                     const PlotOptions& options) {
  if (records.empty()) throw InputError(to_string(kind) + ": no run records");
  Rendered r;
  switch (kind) {
    case PlotKind::kLearningCurve: r = learning_curve(records, options); break;
    case PlotKind::kProfile: r = profile(records, options); break;
    case PlotKind::kProbImprovement: r = prob_improvement(records, options); break;
    case PlotKind::kAggBars: r = agg_bars(records, options); break;
  }
  PlotFiles files{svg_path, svg_path};
  files.csv.replace_extension(".csv");
  write_text(files.svg, r.svg);
  write_text(files.csv, r.csv);
  return files;
}

}  // namespace hierlab
