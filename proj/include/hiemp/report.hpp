#pragma once

// CSV logs and SVG figures. Numbers are written with 17 significant digits;
// every CSV starts with a header row.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hiemp/hierarchy.hpp"
#include "hiemp/oracle.hpp"
#include "hiemp/phase2.hpp"

namespace hiemp {

std::string format_number(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(const std::string& v);
  void end_row();
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws RuntimeAbort when absent.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

/// Throws RuntimeAbort when the file is missing or ragged.
CsvTable read_csv(const std::filesystem::path& path);

/// epoch,level,halfwidth_mean,gc_reward_mean,gs_reward_mean, then center_i and
/// log_halfwidth_i per goal dimension. Centers are absolute (h(s0) + offset).
std::vector<std::string> phase1_header(int goal_dim);
void write_phase1_row(CsvWriter& out, const EpochMetrics& m, const Vec& origin);

/// episode,gc_reward_mean,min_dist_mean
std::vector<std::string> phase2_header();
void write_phase2_row(CsvWriter& out, const Phase2Metrics& m);

/// seed,episode,goal_x[,goal_y],min_dist
void write_eval_csv(const std::filesystem::path& path, const EvalReport& report, int goal_dim);
/// seeds,episodes,mean,std
void write_eval_summary(const std::filesystem::path& path, const EvalReport& report, int episodes);

/// x[,y] point cloud and dim,lo,hi bounding box.
void write_reachable_csv(const std::filesystem::path& points, const std::filesystem::path& bbox, const ReachableSet& set);

/// Goal-space rectangles for the first and last logged epoch of every level,
/// with an oracle bounding-box overlay when `oracle_bbox` exists.
void plot_goal_spaces(const std::filesystem::path& metrics_csv, const std::filesystem::path& oracle_bbox,
                      const std::filesystem::path& svg);

/// Min-distance learning curve from metrics_phase2.csv.
void plot_phase2_curve(const std::filesystem::path& metrics_csv, const std::filesystem::path& svg);

}  // namespace hiemp
