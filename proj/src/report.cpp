#include "hiemp/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "hiemp/error.hpp"

namespace hiemp {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary);
  if (!out_) throw RuntimeAbort("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

CsvWriter& CsvWriter::operator<<(double v) { return *this << format_number(v); }

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  if (filled_ == columns_) throw InvalidInput("too many fields for " + path_.string());
  out_ << (filled_ ? "," : "") << v;
  ++filled_;
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) throw InvalidInput("short row for " + path_.string());
  out_ << '\n';
  filled_ = 0;
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw RuntimeAbort("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const std::string& cell = rows.at(row).at(column(name));
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw RuntimeAbort("CSV cell '" + cell + "' in column '" + name + "' is not a number");
  }
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeAbort("cannot read " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  };
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw RuntimeAbort(path.string() + " is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size()) throw RuntimeAbort(path.string() + " has a ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<std::string> phase1_header(int goal_dim) {
  std::vector<std::string> h{"epoch", "level", "halfwidth_mean", "gc_reward_mean", "gs_reward_mean"};
  for (int i = 0; i < goal_dim; ++i) h.push_back("center_" + std::to_string(i));
  for (int i = 0; i < goal_dim; ++i) h.push_back("log_halfwidth_" + std::to_string(i));
  return h;
}

void write_phase1_row(CsvWriter& out, const EpochMetrics& m, const Vec& origin) {
  out << std::to_string(m.epoch) << std::to_string(m.level) << m.halfwidth_mean << m.gc_reward_mean
      << m.gs_reward_mean;
  for (Eigen::Index i = 0; i < m.box.center.size(); ++i) out << origin(i) + m.box.center(i);
  for (Eigen::Index i = 0; i < m.box.log_halfwidth.size(); ++i) out << m.box.log_halfwidth(i);
  out.end_row();
}

std::vector<std::string> phase2_header() { return {"episode", "gc_reward_mean", "min_dist_mean"}; }

void write_phase2_row(CsvWriter& out, const Phase2Metrics& m) {
  out << std::to_string(m.episode) << m.gc_reward_mean << m.min_dist_mean;
  out.end_row();
}

void write_eval_csv(const std::filesystem::path& path, const EvalReport& report, int goal_dim) {
  std::vector<std::string> header{"seed", "episode", "goal_x"};
  if (goal_dim > 1) header.push_back("goal_y");
  if (goal_dim > 2) throw InvalidInput("evaluation CSV supports at most 2 goal dimensions");
  header.push_back("min_dist");
  CsvWriter out(path, header);
  for (const auto& row : report.rows) {
    out << std::to_string(row.seed) << std::to_string(row.episode);
    for (int i = 0; i < goal_dim; ++i) out << row.goal(i);
    out << row.min_dist;
    out.end_row();
  }
}

void write_eval_summary(const std::filesystem::path& path, const EvalReport& report, int episodes) {
  CsvWriter out(path, {"seeds", "episodes", "mean", "std"});
  out << std::to_string(report.seeds.size()) << std::to_string(episodes) << report.mean << report.std;
  out.end_row();
}

void write_reachable_csv(const std::filesystem::path& points, const std::filesystem::path& bbox,
                         const ReachableSet& set) {
  const auto d = set.lo().size();
  std::vector<std::string> header{"x"};
  if (d > 1) header.push_back("y");
  if (d > 2) header.push_back("z");
  CsvWriter pts(points, header);
  for (const auto& p : set.points()) {
    for (Eigen::Index i = 0; i < d; ++i) pts << p(i);
    pts.end_row();
  }
  CsvWriter box(bbox, {"dim", "lo", "hi"});
  for (Eigen::Index i = 0; i < d; ++i) {
    box << std::to_string(i) << set.lo()(i) << set.hi()(i);
    box.end_row();
  }
}

namespace {

struct Rect {
  int level = 0;
  int epoch = 0;
  std::string kind;  // "first", "last" or "oracle"
  double x0, x1, y0, y1;
};

const char* kLevelColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string svg_open(double width, double height) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  return os.str();
}

}  // namespace

void plot_goal_spaces(const std::filesystem::path& metrics_csv, const std::filesystem::path& oracle_bbox,
                      const std::filesystem::path& svg) {
  const CsvTable t = read_csv(metrics_csv);
  if (t.rows.empty()) throw RuntimeAbort(metrics_csv.string() + " has no rows");
  const bool two_d = std::find(t.header.begin(), t.header.end(), "center_1") != t.header.end();

  int max_level = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) max_level = std::max(max_level, static_cast<int>(t.number(r, "level")));

  std::vector<Rect> rects;
  for (int level = 0; level <= max_level; ++level) {
    std::size_t first = t.rows.size();
    std::size_t last = t.rows.size();
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (static_cast<int>(t.number(r, "level")) != level) continue;
      if (first == t.rows.size()) first = r;
      last = r;
    }
    if (first == t.rows.size()) continue;
    for (auto [row, kind] : {std::pair{first, "first"}, std::pair{last, "last"}}) {
      Rect rc;
      rc.level = level;
      rc.epoch = static_cast<int>(t.number(row, "epoch"));
      rc.kind = kind;
      const double cx = t.number(row, "center_0");
      const double wx = std::exp(t.number(row, "log_halfwidth_0"));
      rc.x0 = cx - wx;
      rc.x1 = cx + wx;
      if (two_d) {
        const double cy = t.number(row, "center_1");
        const double wy = std::exp(t.number(row, "log_halfwidth_1"));
        rc.y0 = cy - wy;
        rc.y1 = cy + wy;
      } else {
        rc.y0 = level - 0.3;
        rc.y1 = level + 0.3;
      }
      rects.push_back(rc);
    }
  }
  if (std::filesystem::exists(oracle_bbox)) {
    const CsvTable o = read_csv(oracle_bbox);
    if (o.rows.empty()) throw RuntimeAbort(oracle_bbox.string() + " has no rows");
    Rect rc{-1, 0, "oracle", o.number(0, "lo"), o.number(0, "hi"), -0.5, max_level + 0.5};
    if (two_d) {
      if (o.rows.size() < 2) throw RuntimeAbort(oracle_bbox.string() + " lacks a second dimension");
      rc.y0 = o.number(1, "lo");
      rc.y1 = o.number(1, "hi");
    }
    rects.push_back(rc);
  }

  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  for (const auto& r : rects) {
    lo_x = std::min(lo_x, r.x0);
    hi_x = std::max(hi_x, r.x1);
    lo_y = std::min(lo_y, r.y0);
    hi_y = std::max(hi_y, r.y1);
  }
  const double pad = 0.05 * std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
  lo_x -= pad;
  hi_x += pad;
  lo_y -= pad;
  hi_y += pad;
  const double size = 600.0;
  const double scale = size / std::max(hi_x - lo_x, hi_y - lo_y);
  const double width = (hi_x - lo_x) * scale;
  const double height = (hi_y - lo_y) * scale;
  auto px = [&](double x) { return (x - lo_x) * scale; };
  auto py = [&](double y) { return (hi_y - y) * scale; };

  std::ofstream out(svg, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write " + svg.string());
  out << svg_open(width, height);
  for (const auto& r : rects) {
    const bool oracle = r.kind == "oracle";
    const char* color = oracle ? "#000000" : kLevelColors[std::min(r.level, 3)];
    out << "<rect class=\"" << (oracle ? "oracle" : "goal-space " + r.kind) << "\"";
    if (!oracle) out << " data-level=\"" << r.level << "\" data-epoch=\"" << r.epoch << "\"";
    out << " data-x0=\"" << format_number(r.x0) << "\" data-x1=\"" << format_number(r.x1) << "\"";
    if (two_d || oracle) out << " data-y0=\"" << format_number(r.y0) << "\" data-y1=\"" << format_number(r.y1) << "\"";
    out << " x=\"" << px(r.x0) << "\" y=\"" << py(r.y1) << "\" width=\"" << (r.x1 - r.x0) * scale << "\" height=\""
        << (r.y1 - r.y0) * scale << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
        << (r.kind == "last" ? 2.5 : 1.0) << "\"" << (r.kind == "first" || oracle ? " stroke-dasharray=\"4 3\"" : "")
        << "/>\n";
  }
  out << "<text x=\"8\" y=\"16\" font-size=\"12\" font-family=\"sans-serif\">goal spaces: dashed = first epoch, "
         "solid = last epoch, black = reachable bounding box</text>\n";
  out << "</svg>\n";
}

void plot_phase2_curve(const std::filesystem::path& metrics_csv, const std::filesystem::path& svg) {
  const CsvTable t = read_csv(metrics_csv);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double d = t.number(r, "min_dist_mean");
    if (!std::isnan(d)) pts.emplace_back(t.number(r, "episode"), d);
  }
  if (pts.empty()) throw RuntimeAbort(metrics_csv.string() + " has no evaluated rows");
  double max_x = 1.0, max_y = 1e-9;
  for (const auto& [x, y] : pts) {
    max_x = std::max(max_x, x);
    max_y = std::max(max_y, y);
  }
  const double w = 640, h = 400, m = 50;
  auto px = [&](double x) { return m + (w - 2 * m) * x / max_x; };
  auto py = [&](double y) { return h - m - (h - 2 * m) * y / (1.1 * max_y); };

  std::ofstream out(svg, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write " + svg.string());
  out << svg_open(w, h);
  out << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m
      << "\" stroke=\"black\"/>\n<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << h - m
      << "\" stroke=\"black\"/>\n";
  out << "<polyline class=\"min-distance\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) out << (i ? " " : "") << px(pts[i].first) << ',' << py(pts[i].second);
  out << "\"/>\n";
  for (const auto& [x, y] : pts) {
    out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.5\" fill=\"#1f77b4\" data-episode=\""
        << format_number(x) << "\" data-min-dist=\"" << format_number(y) << "\"/>\n";
  }
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" font-size=\"12\" font-family=\"sans-serif\" "
      << "text-anchor=\"middle\">phase-2 training episodes</text>\n";
  out << "<text x=\"14\" y=\"" << h / 2 << "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 14 " << h / 2 << ")\">mean minimum distance to goal</text>\n";
  out << "<text x=\"" << m << "\" y=\"" << h - m + 16 << "\" font-size=\"10\" font-family=\"sans-serif\">0</text>\n";
  out << "<text x=\"" << w - m << "\" y=\"" << h - m + 16 << "\" font-size=\"10\" font-family=\"sans-serif\" "
      << "text-anchor=\"end\">" << format_number(max_x) << "</text>\n";
  out << "</svg>\n";
}

}  // namespace hiemp
