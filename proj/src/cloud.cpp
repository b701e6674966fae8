#include "tsk/cloud.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tsk {

Vec3 PointCloud::centroid() const {
  Vec3 c = Vec3::Zero();
  for (const auto& p : points) c += p;
  return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_double_field(const std::string& tok, int line_no) {
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError("non-numeric field '" + tok + "'", line_no);
  return value;
}

int parse_int_field(const std::string& tok, int line_no) {
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  int value = 0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError("non-integer field '" + tok + "'", line_no);
  return value;
}

PointCloud load_ply(std::istream& in) {
  std::string line;
  int line_no = 1;  // the "ply" magic line was already consumed
  bool header_done = false;
  long vertex_count = -1;
  std::vector<std::string> properties;  // in declaration order

  while (std::getline(in, line)) {
    ++line_no;
    auto toks = split_ws(line);
    if (toks.empty() || toks[0] == "comment") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2 || toks[1] != "ascii")
        throw ParseError("binary PLY is not supported (ascii 1.0 only)", line_no);
    } else if (toks[0] == "element") {
      if (toks.size() != 3 || toks[1] != "vertex")
        throw ParseError("unsupported element (only 'element vertex N')", line_no);
      vertex_count = parse_int_field(toks[2], line_no);
    } else if (toks[0] == "property") {
      if (toks.size() != 3) throw ParseError("malformed property line", line_no);
      const std::string& type = toks[1];
      const std::string& name = toks[2];
      if (name == "x" || name == "y" || name == "z") {
        if (type != "float" && type != "double")
          throw ParseError("coordinate property must be float", line_no);
      } else if (name == "part") {
        if (type != "int") throw ParseError("part property must be int", line_no);
      } else {
        throw ParseError("unsupported property '" + name + "'", line_no);
      }
      properties.push_back(name);
    } else if (toks[0] == "end_header") {
      header_done = true;
      break;
    } else {
      throw ParseError("unexpected header line '" + toks[0] + "'", line_no);
    }
  }
  if (!header_done) throw ParseError("missing end_header", line_no);
  if (vertex_count < 0) throw ParseError("missing 'element vertex' declaration", line_no);

  int ix = -1, iy = -1, iz = -1, ipart = -1;
  for (std::size_t i = 0; i < properties.size(); ++i) {
    if (properties[i] == "x") ix = static_cast<int>(i);
    if (properties[i] == "y") iy = static_cast<int>(i);
    if (properties[i] == "z") iz = static_cast<int>(i);
    if (properties[i] == "part") ipart = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0)
    throw ParseError("header must declare x, y and z properties", line_no);

  PointCloud cloud;
  if (ipart >= 0) cloud.labels.emplace();
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (static_cast<long>(cloud.points.size()) >= vertex_count)
      throw ParseError("more vertex rows than declared", line_no);
    if (toks.size() != properties.size())
      throw ParseError("expected " + std::to_string(properties.size()) + " fields, got " +
                           std::to_string(toks.size()),
                       line_no);
    Vec3 p(parse_double_field(toks[ix], line_no), parse_double_field(toks[iy], line_no),
           parse_double_field(toks[iz], line_no));
    cloud.points.push_back(p);
    if (ipart >= 0) {
      int part = parse_int_field(toks[ipart], line_no);
      if (part < 0) throw ParseError("part id must be >= 0", line_no);
      cloud.labels->push_back(part);
    }
  }
  if (static_cast<long>(cloud.points.size()) != vertex_count)
    throw ParseError("declared " + std::to_string(vertex_count) + " vertices, found " +
                         std::to_string(cloud.points.size()),
                     line_no);
  if (cloud.points.empty()) throw ParseError("empty cloud", line_no);
  return cloud;
}

PointCloud load_xyz(std::istream& in, const std::string& first_line) {
  PointCloud cloud;
  int line_no = 0;
  std::string line = first_line;
  bool have_line = true;
  while (have_line) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto toks = split_ws(line);
    if (!toks.empty()) {
      if (toks.size() != 3)
        throw ParseError("expected 3 fields, got " + std::to_string(toks.size()), line_no);
      cloud.points.emplace_back(parse_double_field(toks[0], line_no),
                                parse_double_field(toks[1], line_no),
                                parse_double_field(toks[2], line_no));
    }
    have_line = static_cast<bool>(std::getline(in, line));
  }
  if (cloud.points.empty()) throw ParseError("no points in file", line_no);
  return cloud;
}

}  // namespace

PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string first;
  if (!std::getline(in, first)) throw ParseError("empty file", 1);
  // Strip a UTF-8 BOM / carriage return if present.
  if (first.size() >= 3 && first.compare(0, 3, "\xEF\xBB\xBF") == 0) first.erase(0, 3);
  if (!first.empty() && first.back() == '\r') first.pop_back();
  if (first == "ply") return load_ply(in);
  return load_xyz(in, first);
}

void save_cloud_xyz(const PointCloud& cloud, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write '" + path + "'");
  for (const auto& p : cloud.points)
    std::fprintf(f, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
  std::fclose(f);
}

void save_cloud_ply(const PointCloud& cloud, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write '" + path + "'");
  const bool parts = cloud.labels.has_value();
  std::fprintf(f, "ply\nformat ascii 1.0\nelement vertex %zu\n", cloud.points.size());
  std::fprintf(f, "property float x\nproperty float y\nproperty float z\n");
  if (parts) std::fprintf(f, "property int part\n");
  std::fprintf(f, "end_header\n");
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    if (parts)
      std::fprintf(f, "%.17g %.17g %.17g %d\n", p.x(), p.y(), p.z(), (*cloud.labels)[i]);
    else
      std::fprintf(f, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
  }
  std::fclose(f);
}

Pose pca_frame(const PointCloud& cloud) {
  const auto n = cloud.points.size();
  if (n < 3) throw DegeneracyError("pca_frame needs at least 3 points");
  const Vec3 c = cloud.centroid();
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : cloud.points) {
    const Vec3 d = p - c;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  // Eigenvalues come in ascending order; we want descending variance.
  Eigen::Vector3d evals = es.eigenvalues().reverse();
  Eigen::Matrix3d axes;
  axes.col(0) = es.eigenvectors().col(2);
  axes.col(1) = es.eigenvectors().col(1);
  axes.col(2) = es.eigenvectors().col(0);

  if (evals(0) <= 1e-18 || evals(1) <= 1e-12 * evals(0))
    throw DegeneracyError("degenerate covariance (rank < 2)");

  for (int k = 0; k < 2; ++k) {
    int imax = 0;
    axes.col(k).cwiseAbs().maxCoeff(&imax);
    if (axes(imax, k) < 0.0) axes.col(k) = -axes.col(k);
  }
  axes.col(2) = axes.col(0).cross(axes.col(1));

  Pose frame;
  frame.rotation = Eigen::Quaterniond(axes).normalized();
  frame.translation = c;
  return frame;
}

std::vector<PointCloud> segment_tool(const PointCloud& cloud, const SegmentationConfig& cfg) {
  if (cloud.size() < 20) throw Error("segment_tool needs at least 20 points");

  if (cloud.labels) {
    std::vector<int> ids = *cloud.labels;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<PointCloud> parts;
    for (int id : ids) {
      PointCloud part;
      part.labels.emplace();
      for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        if ((*cloud.labels)[i] == id) {
          part.points.push_back(cloud.points[i]);
          part.labels->push_back(id);
        }
      }
      parts.push_back(std::move(part));
    }
    return parts;
  }

  const Pose frame = pca_frame(cloud);
  const Vec3 axis = frame.rotation * Vec3::UnitX();
  const Vec3 c = frame.translation;

  std::vector<double> s(cloud.size()), radial(cloud.size());
  double smin = std::numeric_limits<double>::infinity();
  double smax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 d = cloud.points[i] - c;
    s[i] = d.dot(axis);
    radial[i] = (d - s[i] * axis).norm();
    smin = std::min(smin, s[i]);
    smax = std::max(smax, s[i]);
  }
  const int nbins = cfg.bins;
  const double width = (smax - smin) / nbins;
  if (width <= 0.0) return {cloud};

  std::vector<double> bin_radius(nbins, -1.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    int b = static_cast<int>((s[i] - smin) / width);
    b = std::clamp(b, 0, nbins - 1);
    bin_radius[b] = std::max(bin_radius[b], radial[i]);
  }
  // Empty bins inherit the nearest occupied radius so sampling gaps do not
  // masquerade as geometry jumps.
  double carry = -1.0;
  for (int b = 0; b < nbins; ++b) {
    if (bin_radius[b] < 0.0)
      bin_radius[b] = carry;
    else
      carry = bin_radius[b];
  }
  carry = -1.0;
  for (int b = nbins - 1; b >= 0; --b) {
    if (bin_radius[b] < 0.0)
      bin_radius[b] = carry;
    else
      carry = bin_radius[b];
  }

  // 3-bin moving average, window clipped at the ends.
  std::vector<double> smooth(nbins, 0.0);
  for (int b = 0; b < nbins; ++b) {
    double sum = 0.0;
    int cnt = 0;
    for (int k = std::max(0, b - 1); k <= std::min(nbins - 1, b + 1); ++k) {
      sum += bin_radius[k];
      ++cnt;
    }
    smooth[b] = sum / cnt;
  }

  std::vector<double> jump(nbins - 1);
  int best = 0;
  for (int b = 0; b + 1 < nbins; ++b) {
    jump[b] = std::abs(smooth[b + 1] - smooth[b]);
    if (jump[b] > jump[best]) best = b;
  }
  const double med = percentile(jump, 50.0);
  if (jump[best] <= cfg.jump_factor * med || jump[best] <= 1e-9) return {cloud};

  const double boundary = smin + (best + 1) * width;
  PointCloud lo, hi;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    (s[i] < boundary ? lo : hi).points.push_back(cloud.points[i]);
  }
  if (lo.size() < static_cast<std::size_t>(cfg.min_part_points) ||
      hi.size() < static_cast<std::size_t>(cfg.min_part_points))
    return {cloud};
  return {std::move(lo), std::move(hi)};
}

}  // namespace tsk
