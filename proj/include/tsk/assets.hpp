#pragma once

#include "tsk/cloud.hpp"

#include <string>
#include <vector>

namespace tsk::assets {

/// Synthetic two-part tool clouds, pre-positioned at their start pose above
/// the table (labels: 0 = handle, 1 = action part). Names: spatula,
/// knife_small, knife_large, spoon, scraper, fork.
PointCloud tool_cloud(const std::string& name);

/// Synthetic container clouds sitting on the table at (0.40, 0, 0). Names:
/// bowl_small, bowl_medium, bowl_large, pan, dish.
PointCloud container_cloud(const std::string& name);

std::vector<std::string> tool_names();
std::vector<std::string> container_names();

/// Writes the whole evaluation suite under out_dir: clouds/, configs/ for
/// the three demos and the scrape matrix. dsl_dir must hold tasks/ and
/// phases/ (the repo's assets directory).
void write_demo_suite(const std::string& out_dir, const std::string& dsl_dir);

}  // namespace tsk::assets
