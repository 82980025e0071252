#pragma once

// Altitude-dependent camera model: noise variance curve and the
// multiresolution observation rows that map pixels onto grid cells.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ipp/grid_map.hpp"

namespace ipp {

struct SensorModel {
  double a = 0.2;                 ///< saturation variance
  double b = 0.05;                ///< growth rate per meter
  double fov_deg = 60.0;          ///< square footprint field of view
  double scale_altitude_m = 10.0; ///< above this altitude the image is downsampled
  double scale_factor = 0.5;      ///< resolution ratio s_f above scale_altitude_m
  double frequency_hz = 0.15;     ///< camera trigger rate

  void validate() const {
    if (!(a > 0.0)) throw std::invalid_argument("sensor: a must be positive");
    if (!(b > 0.0)) throw std::invalid_argument("sensor: b must be positive");
    if (!(scale_factor > 0.0 && scale_factor <= 1.0)) {
      throw std::invalid_argument("sensor: scale_factor must lie in (0, 1]");
    }
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw std::invalid_argument("sensor: fov_deg must lie in (0, 180)");
    if (!(frequency_hz > 0.0)) throw std::invalid_argument("sensor: frequency_hz must be positive");
    if (!(scale_altitude_m >= 0.0)) throw std::invalid_argument("sensor: scale_altitude_m must be non-negative");
  }

  /// Half side of the square ground footprint at altitude h.
  double footprint_half_side(double h) const {
    constexpr double kPi = 3.14159265358979323846;
    return h * std::tan(0.5 * fov_deg * kPi / 180.0);
  }

  /// Block side in cells at altitude h (1 at full resolution).
  Index block_side(double h) const {
    if (h <= scale_altitude_m) return 1;
    return std::max<Index>(1, static_cast<Index>(std::lround(1.0 / scale_factor)));
  }
};

/// Measurement noise variance a (1 - exp(-b h)).
inline double noise_variance(double h, const SensorModel& sm) {
  return sm.a * (1.0 - std::exp(-sm.b * h));
}

/// One pixel of a frame: a weighted average over grid cells.
struct ObservationRow {
  std::vector<Index> cells;
  std::vector<double> weights;
};

/// Observation structure of one frame (H without values), one shared noise level.
struct Observation {
  std::vector<ObservationRow> rows;
  double noise_var = 0.0;

  bool empty() const { return rows.empty(); }
  Index num_rows() const { return static_cast<Index>(rows.size()); }
};

/// Row weights for a footprint seen from altitude h.
///
/// At full resolution each cell is its own row. Above the scale altitude the
/// footprint is split into square blocks of side round(1/s_f) cells, anchored
/// at the footprint's lower-left cell, and each block becomes one row that
/// averages its member cells. Edge blocks average whatever cells they hold.
inline std::vector<ObservationRow> build_observation(const GridGeometry& geometry,
                                                     const std::vector<Index>& footprint_cells, double h,
                                                     const SensorModel& sm) {
  if (footprint_cells.empty()) {
    throw std::invalid_argument("build_observation: empty footprint");
  }
  for (Index c : footprint_cells) {
    if (c < 0 || c >= geometry.size()) throw std::out_of_range("build_observation: cell outside grid");
  }
  std::vector<ObservationRow> rows;
  const Index side = sm.block_side(h);
  if (side == 1) {
    rows.reserve(footprint_cells.size());
    for (Index c : footprint_cells) rows.push_back({{c}, {1.0}});
    return rows;
  }

  Index min_ix = geometry.num_x, min_iy = geometry.num_y;
  for (Index c : footprint_cells) {
    min_ix = std::min(min_ix, geometry.ix(c));
    min_iy = std::min(min_iy, geometry.iy(c));
  }
  // Ordered by (block row, block column) so rows come out row-major.
  std::map<std::pair<Index, Index>, std::vector<Index>> blocks;
  for (Index c : footprint_cells) {
    const Index bx = (geometry.ix(c) - min_ix) / side;
    const Index by = (geometry.iy(c) - min_iy) / side;
    blocks[{by, bx}].push_back(c);
  }
  rows.reserve(blocks.size());
  for (auto& [key, cells] : blocks) {
    std::sort(cells.begin(), cells.end());
    const double w = 1.0 / static_cast<double>(cells.size());
    rows.push_back({cells, std::vector<double>(cells.size(), w)});
  }
  return rows;
}

}  // namespace ipp
