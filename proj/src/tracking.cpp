#include "occkit/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "occkit/error.hpp"

namespace occkit {

double AssignmentResult::total_cost() const {
  double total = 0.0;
  for (const auto& m : matches) total += m.cost;
  return total;
}

Propagation propagate(std::span<const VoxelIndex> voxels, const FlowField& flow) {
  Propagation out;
  out.positions.reserve(voxels.size());
  for (const auto& v : voxels) {
    const std::size_t i = flow.spec.linear(v);
    if (!flow.valid(i)) {
      ++out.skipped;
      continue;
    }
    out.positions.push_back(voxel_to_ego(flow.spec, v) + flow.at(i));
  }
  if (out.positions.empty()) throw Error(ErrorCode::EmptyAfterFiltering, "no voxel of the object has valid flow");
  return out;
}

Vec3 centroid(std::span<const Vec3> positions) {
  if (positions.empty()) throw Error(ErrorCode::EmptyInput, "centroid of an empty set");
  Vec3 sum = Vec3::Zero();
  for (const auto& p : positions) sum += p;
  return sum / static_cast<double>(positions.size());
}

Vec3 voxel_centroid(std::span<const VoxelIndex> voxels, const GridSpec& spec) {
  if (voxels.empty()) throw Error(ErrorCode::EmptyInput, "centroid of an empty set");
  Vec3 sum = Vec3::Zero();
  for (const auto& v : voxels) sum += voxel_to_ego(spec, v);
  return sum / static_cast<double>(voxels.size());
}

std::vector<int> solve_assignment(std::span<const double> cost, int rows, int cols) {
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  if (rows > cols) {
    std::vector<double> t(cost.size());
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) t[static_cast<std::size_t>(c) * rows + r] = cost[static_cast<std::size_t>(r) * cols + c];
    }
    const std::vector<int> col_to_row = solve_assignment(t, cols, rows);
    std::vector<int> out(rows, -1);
    for (int c = 0; c < cols; ++c) {
      if (col_to_row[c] >= 0) out[col_to_row[c]] = c;
    }
    return out;
  }

  // Shortest augmenting path Hungarian method with potentials, rows <= cols.
  const int n = rows;
  const int m = cols;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto a = [&](int i, int j) { return cost[static_cast<std::size_t>(i - 1) * m + (j - 1)]; };
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) out[p[j] - 1] = j - 1;
  }
  return out;
}

AssignmentResult associate(std::span<const Vec3> pred, std::span<const Vec3> obs, double max_dist) {
  const int n = static_cast<int>(pred.size());
  const int m = static_cast<int>(obs.size());
  for (const auto& p : pred) {
    if (!p.allFinite()) throw Error(ErrorCode::InvariantViolation, "non-finite predicted centroid");
  }
  for (const auto& o : obs) {
    if (!o.allFinite()) throw Error(ErrorCode::InvariantViolation, "non-finite observed centroid");
  }

  AssignmentResult res;
  res.rows = n;
  res.cols = m;
  res.matrix.assign(static_cast<std::size_t>(n) * m, 0);
  std::vector<double> dist(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) dist[static_cast<std::size_t>(i) * m + j] = (pred[i] - obs[j]).norm();
  }

  std::vector<int> row_to_col;
  if (!std::isfinite(max_dist)) {
    row_to_col = solve_assignment(dist, n, m);
  } else if (n > 0 && m > 0) {
    // Square (n+m) problem: every real row/column may instead take a dummy
    // partner at max_dist/2, so a real pair is only worth taking when its
    // distance beats the gate. Pairs beyond the gate are priced out.
    const int s = n + m;
    const double half = 0.5 * max_dist;
    const double forbidden = 4.0 * (max_dist + 1.0) * s;
    std::vector<double> c(static_cast<std::size_t>(s) * s, 0.0);
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) {
        double& cell = c[static_cast<std::size_t>(i) * s + j];
        if (i < n && j < m) {
          const double d = dist[static_cast<std::size_t>(i) * m + j];
          cell = d <= max_dist ? d : forbidden;
        } else if (i < n || j < m) {
          cell = half;
        }
      }
    }
    const std::vector<int> full = solve_assignment(c, s, s);
    row_to_col.assign(n, -1);
    for (int i = 0; i < n; ++i) {
      const int j = full[i];
      if (j >= 0 && j < m && dist[static_cast<std::size_t>(i) * m + j] <= max_dist) row_to_col[i] = j;
    }
  } else {
    row_to_col.assign(n, -1);
  }

  std::vector<char> col_used(m, 0);
  for (int i = 0; i < n; ++i) {
    const int j = row_to_col[i];
    if (j < 0) {
      res.unmatched_t.push_back(i);
      continue;
    }
    res.matches.push_back({i, j, dist[static_cast<std::size_t>(i) * m + j]});
    res.matrix[static_cast<std::size_t>(i) * m + j] = 1;
    col_used[j] = 1;
  }
  for (int j = 0; j < m; ++j) {
    if (!col_used[j]) res.unmatched_t1.push_back(j);
  }
  return res;
}

std::vector<Track> track_sequence(std::span<const TrackingFrame> frames, const GridSpec& spec,
                                  const TrackerOptions& options) {
  std::vector<Track> tracks;
  for (std::size_t f = 1; f < frames.size(); ++f) {
    if (frames[f].timestamp <= frames[f - 1].timestamp) {
      throw Error(ErrorCode::InvariantViolation, "tracking frames must have increasing timestamps");
    }
  }
  if (frames.empty()) return tracks;

  auto start_track = [&](const TrackingFrame& fr, std::size_t k) {
    const ObjectInstance& inst = fr.instances[k];
    Track t;
    t.track_id = static_cast<std::int64_t>(tracks.size()) + 1;
    t.category = inst.category;
    t.frames.push_back({fr.timestamp, inst.object_id, voxel_centroid(inst.voxels, spec), inst.box});
    tracks.push_back(std::move(t));
    return tracks.size() - 1;
  };

  // Track index of each instance in the current frame.
  std::vector<std::size_t> current;
  for (std::size_t k = 0; k < frames[0].instances.size(); ++k) current.push_back(start_track(frames[0], k));

  for (std::size_t f = 0; f + 1 < frames.size(); ++f) {
    const TrackingFrame& now = frames[f];
    const TrackingFrame& next = frames[f + 1];
    std::vector<std::size_t> following(next.instances.size(), 0);
    std::vector<char> assigned(next.instances.size(), 0);

    std::set<ClassId> categories;
    for (const auto& inst : now.instances) categories.insert(inst.category);
    for (const auto& inst : next.instances) categories.insert(inst.category);

    for (ClassId cat : categories) {
      std::vector<Vec3> pred;
      std::vector<std::size_t> pred_src;
      for (std::size_t k = 0; k < now.instances.size(); ++k) {
        const ObjectInstance& inst = now.instances[k];
        if (inst.category != cat) continue;
        if (now.flow == nullptr) {
          pred.push_back(voxel_centroid(inst.voxels, spec));
          pred_src.push_back(k);
          continue;
        }
        try {
          const Propagation prop = propagate(inst.voxels, *now.flow);
          pred.push_back(centroid(prop.positions));
          pred_src.push_back(k);
        } catch (const Error& e) {
          // No valid flow: the object has no successor and its track ends here.
          if (e.code() != ErrorCode::EmptyAfterFiltering) throw;
        }
      }
      std::vector<Vec3> obs;
      std::vector<std::size_t> obs_src;
      for (std::size_t k = 0; k < next.instances.size(); ++k) {
        if (next.instances[k].category != cat) continue;
        obs.push_back(voxel_centroid(next.instances[k].voxels, spec));
        obs_src.push_back(k);
      }
      const AssignmentResult res = associate(pred, obs, options.max_dist);
      for (const auto& m : res.matches) {
        const std::size_t dst = obs_src[m.obs];
        const std::size_t track = current[pred_src[m.pred]];
        const ObjectInstance& inst = next.instances[dst];
        tracks[track].frames.push_back({next.timestamp, inst.object_id, obs[m.obs], inst.box});
        following[dst] = track;
        assigned[dst] = 1;
      }
    }
    for (std::size_t k = 0; k < next.instances.size(); ++k) {
      if (!assigned[k]) following[k] = start_track(next, k);
    }
    current = std::move(following);
  }
  return tracks;
}

}  // namespace occkit
