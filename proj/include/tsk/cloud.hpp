#pragma once

#include "tsk/errors.hpp"
#include "tsk/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tsk {

struct PointCloud {
  std::vector<Vec3> points;
  std::optional<std::vector<int>> labels;  // per-point part id, >= 0

  std::size_t size() const { return points.size(); }
  Vec3 centroid() const;
};

/// Loads an ASCII PLY (subset: float x/y/z plus optional int "part") or a
/// whitespace-separated XYZ text file. '#' starts a comment in XYZ files.
PointCloud load_cloud(const std::string& path);

void save_cloud_xyz(const PointCloud& cloud, const std::string& path);
void save_cloud_ply(const PointCloud& cloud, const std::string& path);

/// Principal frame of a cloud: translation = centroid, rotation columns =
/// principal axes by descending variance. Each of the first two axes is
/// flipped so its largest-magnitude loading is positive; the third is the
/// cross product of the first two.
Pose pca_frame(const PointCloud& cloud);

struct SegmentationConfig {
  int bins = 32;
  double jump_factor = 1.5;
  int min_part_points = 10;
};

/// Splits a tool cloud into parts. Labeled clouds are split by label.
/// Unlabeled clouds are split at most once, at the largest jump of the
/// smoothed radius profile along the first principal axis.
std::vector<PointCloud> segment_tool(const PointCloud& cloud, const SegmentationConfig& cfg = {});

}  // namespace tsk
