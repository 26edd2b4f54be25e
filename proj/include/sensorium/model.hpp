#pragma once

// Object models: sparse clouds of surface points in a per-object reference
// frame, each point carrying the local frame rotation and features sensed
// there.  Models are built under supervision (the object's true rotation is
// known while learning) and queried during inference.
//
// Frame bookkeeping: with the object posed by rotation P (and no
// translation), a body-frame observation at b maps to the model frame as
// inverse(P) * b - anchor.  The anchor is fixed at the first observation
// ever stored, which puts that point at the model origin; every later
// episode reuses it, so all episodes agree about where the surface lies.

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensorium/cmp.hpp"
#include "sensorium/geom.hpp"
#include "sensorium/kdtree.hpp"

namespace sensorium {

struct ModelPoint {
  Location location;    // model frame
  Rotation rotation;    // local surface frame, model frame
  FeatureVector features;
};

// A new observation is stored only if no existing point within `location`
// meters already matches its features (rotation and hue thresholds).
struct InsertThresholds {
  double location = 0.005;
  double rotation_deg = 10.0;
  double hue = 0.05;
};

class ObjectModel {
 public:
  std::string id;
  InsertThresholds thresholds;

  bool anchored() const { return anchored_; }
  const Vec3& anchor() const { return anchor_; }
  const std::vector<ModelPoint>& points() const { return points_; }
  const ModelPoint& point(int i) const { return points_[i]; }
  int size() const { return static_cast<int>(points_.size()); }

  // Supervised learning step; returns true if the observation was novel
  // enough to store.
  bool learn(const CMPMessage& msg, const Rotation& true_rotation) {
    const Rotation inv = inverse(true_rotation);
    Location x = rotate(inv, msg.location);
    if (!anchored_) {
      anchor_ = x;
      anchored_ = true;
    }
    x = x - anchor_;
    const Rotation r = compose(inv, msg.local_rotation);

    for (int idx : neighbors_within(x, thresholds.location)) {
      const ModelPoint& p = points_[idx];
      const bool same_rot = geodesic_distance(p.rotation, r) <=
                            deg_to_rad(thresholds.rotation_deg);
      const bool same_hue =
          hue_distance(p.features.hue, msg.features.hue) <= thresholds.hue;
      if (same_rot && same_hue) return false;
    }
    points_.push_back(ModelPoint{x, r, msg.features});
    return true;
  }

  // Rebuild the spatial index over everything stored so far.  Cheap enough
  // to call once per episode; queries between calls still see new points
  // through a linear sweep of the unindexed tail.
  void finish_episode() {
    tree_ = KdTree();
    for (const ModelPoint& p : points_) {
      tree_.add(p.location.x, p.location.y, p.location.z);
    }
    if (!points_.empty()) tree_.build();
    indexed_ = points_.size();
  }

  std::vector<int> neighbors_within(const Location& x, double r) const {
    std::vector<int> out;
    if (indexed_ > 0) {
      for (std::size_t i : tree_.radius(x.x, x.y, x.z, r)) {
        out.push_back(static_cast<int>(i));
      }
    }
    const double r2 = r * r;
    for (size_t i = indexed_; i < points_.size(); ++i) {
      if (norm2(points_[i].location - x) < r2) {
        out.push_back(static_cast<int>(i));
      }
    }
    return out;
  }

  std::optional<int> nearest(const Location& x) const {
    std::optional<int> best;
    double best_d2 = 0;
    if (indexed_ > 0) {
      const KdTree::Hit h = tree_.nearest(x.x, x.y, x.z);
      best = h.index;
      best_d2 = h.dist2;
    }
    for (size_t i = indexed_; i < points_.size(); ++i) {
      const double d2 = norm2(points_[i].location - x);
      if (!best || d2 < best_d2) {
        best = static_cast<int>(i);
        best_d2 = d2;
      }
    }
    return best;
  }

  // Restore a point cloud verbatim (deserialization path).
  void restore(const Vec3& anchor, bool anchored,
               std::vector<ModelPoint> pts) {
    anchor_ = anchor;
    anchored_ = anchored;
    points_ = std::move(pts);
    finish_episode();
  }

 private:
  Vec3 anchor_;
  bool anchored_ = false;
  std::vector<ModelPoint> points_;
  KdTree tree_;
  size_t indexed_ = 0;
};

struct ModelStats {
  int points = 0;
  double extent = 0;  // max distance of any point from the model origin
};

inline ModelStats model_stats(const ObjectModel& m) {
  ModelStats s;
  s.points = m.size();
  for (const ModelPoint& p : m.points()) {
    s.extent = std::max(s.extent, norm(p.location));
  }
  return s;
}

// --- store and persistence -----------------------------------------------
//
// Text format, one block per model, concatenated in id order:
//
//   refmodel v1
//   id <object id>
//   thresholds <location> <rotation_deg> <hue>
//   anchor <x> <y> <z>            (or: anchor none)
//   points <count>
//   <x y z qw qx qy qz hue sat val k1 k2 pose_defined> ... one per line
//   end
//
// Floats are written with %.17g, so serialize / deserialize / serialize
// reproduces the file byte for byte.

class ModelParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelStore {
 public:
  ObjectModel& get_or_create(const std::string& id) {
    ObjectModel& m = models_[id];
    m.id = id;
    return m;
  }

  const ObjectModel* find(const std::string& id) const {
    auto it = models_.find(id);
    return it == models_.end() ? nullptr : &it->second;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& [id, m] : models_) out.push_back(id);
    return out;
  }

  int size() const { return static_cast<int>(models_.size()); }

  std::string serialize() const {
    std::string out;
    for (const auto& [id, m] : models_) {
      out += "refmodel v1\nid " + id + "\nthresholds";
      for (double v : {m.thresholds.location, m.thresholds.rotation_deg,
                       m.thresholds.hue}) {
        out += ' ';
        detail::append_g17(out, v);
      }
      out += "\nanchor";
      if (m.anchored()) {
        for (double v : {m.anchor().x, m.anchor().y, m.anchor().z}) {
          out += ' ';
          detail::append_g17(out, v);
        }
      } else {
        out += " none";
      }
      out += "\npoints " + std::to_string(m.size()) + "\n";
      for (const ModelPoint& p : m.points()) {
        bool first = true;
        for (double v :
             {p.location.x, p.location.y, p.location.z, p.rotation.w,
              p.rotation.x, p.rotation.y, p.rotation.z, p.features.hue,
              p.features.sat, p.features.val, p.features.k1, p.features.k2}) {
          if (!first) out += ' ';
          first = false;
          detail::append_g17(out, v);
        }
        out += p.features.pose_fully_defined ? " 1\n" : " 0\n";
      }
      out += "end\n";
    }
    return out;
  }

  static ModelStore deserialize(std::istream& in) {
    ModelStore store;
    std::string line;
    int lineno = 0;
    auto fail = [&lineno](const std::string& msg) {
      throw ModelParseError("model line " + std::to_string(lineno) + ": " +
                            msg);
    };
    auto next_line = [&in, &line, &lineno]() {
      if (!std::getline(in, line)) return false;
      ++lineno;
      return true;
    };

    while (next_line()) {
      if (line.empty()) continue;
      if (line != "refmodel v1") fail("expected 'refmodel v1' header");

      if (!next_line() || line.rfind("id ", 0) != 0) fail("expected id line");
      const std::string id = line.substr(3);
      if (id.empty()) fail("empty id");
      if (store.find(id) != nullptr) fail("duplicate id '" + id + "'");
      ObjectModel& m = store.get_or_create(id);

      if (!next_line()) fail("expected thresholds line");
      {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag != "thresholds" ||
            !(ls >> m.thresholds.location >> m.thresholds.rotation_deg >>
              m.thresholds.hue)) {
          fail("bad thresholds line");
        }
      }

      if (!next_line()) fail("expected anchor line");
      Vec3 anchor;
      bool anchored = false;
      {
        std::istringstream ls(line);
        std::string tag, rest;
        if (!(ls >> tag) || tag != "anchor") fail("bad anchor line");
        if (ls >> rest && rest == "none") {
          anchored = false;
        } else {
          std::istringstream again(line);
          if (!(again >> tag >> anchor.x >> anchor.y >> anchor.z)) {
            fail("bad anchor line");
          }
          anchored = true;
        }
      }

      if (!next_line()) fail("expected points line");
      int count = -1;
      {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag != "points" || !(ls >> count) || count < 0) {
          fail("bad points line");
        }
      }

      std::vector<ModelPoint> pts;
      pts.reserve(count);
      for (int i = 0; i < count; ++i) {
        if (!next_line()) fail("truncated point list");
        std::istringstream ls(line);
        ModelPoint p;
        double hue, sat, val, k1, k2;
        int defined;
        if (!(ls >> p.location.x >> p.location.y >> p.location.z >>
              p.rotation.w >> p.rotation.x >> p.rotation.y >> p.rotation.z >>
              hue >> sat >> val >> k1 >> k2 >> defined)) {
          fail("bad point record");
        }
        const double n2 = p.rotation.w * p.rotation.w +
                          p.rotation.x * p.rotation.x +
                          p.rotation.y * p.rotation.y +
                          p.rotation.z * p.rotation.z;
        if (std::abs(n2 - 1.0) > 1e-6) fail("rotation is not unit length");
        // Components are restored verbatim (no renormalization) so the
        // round trip is exact.
        p.features = FeatureVector::make(hue, sat, val, k1, k2, defined != 0);
        pts.push_back(p);
      }
      if (!anchored && count > 0) fail("points without an anchor");

      if (!next_line() || line != "end") fail("expected end line");
      m.restore(anchor, anchored, std::move(pts));
    }
    return store;
  }

 private:
  std::map<std::string, ObjectModel> models_;
};

}  // namespace sensorium
