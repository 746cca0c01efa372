#include "lomap/synth.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace lomap {

void AnalyticScene::validate() const {
  if (primitives.empty()) throw Error("AnalyticScene: no primitives");
  for (const Primitive& p : primitives) {
    switch (p.kind) {
      case Primitive::Kind::kPlane:
        if (std::abs(p.normal.norm() - 1.0) > 1e-9) {
          throw Error("AnalyticScene: plane normal not unit length");
        }
        break;
      case Primitive::Kind::kBox:
        if (!(p.bmin.x() < p.bmax.x() && p.bmin.y() < p.bmax.y() && p.bmin.z() < p.bmax.z())) {
          throw Error("AnalyticScene: box min must be < max componentwise");
        }
        break;
      case Primitive::Kind::kSphere:
        if (p.radius <= 0) throw Error("AnalyticScene: sphere radius must be > 0");
        break;
    }
  }
}

AnalyticScene AnalyticScene::static_only() const {
  AnalyticScene out;
  for (const Primitive& p : primitives) {
    if (p.label != PrimLabel::kTransient) out.primitives.push_back(p);
  }
  return out;
}

std::optional<double> ray_primitive_distance(const Primitive& prim, const Vec3& origin,
                                             const Vec3& dir) {
  constexpr double kEps = 1e-12;
  switch (prim.kind) {
    case Primitive::Kind::kPlane: {
      const double denom = dir.dot(prim.normal);
      if (std::abs(denom) < kEps) return std::nullopt;
      const double t = (prim.point - origin).dot(prim.normal) / denom;
      if (t <= kEps) return std::nullopt;
      return t;
    }
    case Primitive::Kind::kBox: {
      double t_enter = -std::numeric_limits<double>::infinity();
      double t_exit = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        if (std::abs(dir[a]) < kEps) {
          if (origin[a] < prim.bmin[a] || origin[a] > prim.bmax[a]) return std::nullopt;
          continue;
        }
        double t0 = (prim.bmin[a] - origin[a]) / dir[a];
        double t1 = (prim.bmax[a] - origin[a]) / dir[a];
        if (t0 > t1) std::swap(t0, t1);
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
      }
      if (t_enter > t_exit) return std::nullopt;
      if (t_enter > kEps) return t_enter;
      if (t_exit > kEps) return t_exit;
      return std::nullopt;
    }
    case Primitive::Kind::kSphere: {
      const Vec3 oc = origin - prim.center;
      const double b = oc.dot(dir);
      const double c = oc.squaredNorm() - prim.radius * prim.radius;
      const double disc = b * b - c;
      if (disc < 0) return std::nullopt;
      const double sq = std::sqrt(disc);
      const double t0 = -b - sq;
      if (t0 > kEps) return t0;
      const double t1 = -b + sq;
      if (t1 > kEps) return t1;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

namespace {
uint64_t mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

SynthScan synth_scan(const AnalyticScene& scene, const PoseSE3& pose, const BeamConfig& beams,
                     int scan_index, uint64_t seed) {
  scene.validate();
  if (beams.max_range <= 0) throw Error("BeamConfig: max_range must be > 0");
  if (beams.noise_sigma < 0) throw Error("BeamConfig: noise_sigma must be >= 0");

  const int azi_steps = static_cast<int>(std::floor(2.0 * M_PI / beams.horizontal_resolution));
  SynthScan out;
  out.scan.index = scan_index;
  std::mt19937_64 rng(mix(seed ^ (0x51D5EEDULL + static_cast<uint64_t>(scan_index))));
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (double va : beams.vertical_angles) {
    const double cv = std::cos(va), sv = std::sin(va);
    for (int k = 0; k < azi_steps; ++k) {
      const double az = k * beams.horizontal_resolution;
      const Vec3 dir_sensor(cv * std::cos(az), cv * std::sin(az), sv);
      const Vec3 dir_world = pose.rotation * dir_sensor;

      double best = std::numeric_limits<double>::infinity();
      int best_prim = -1;
      for (size_t pi = 0; pi < scene.primitives.size(); ++pi) {
        const Primitive& prim = scene.primitives[pi];
        if (prim.label == PrimLabel::kTransient && !prim.active_scans.count(scan_index)) {
          continue;
        }
        const auto t = ray_primitive_distance(prim, pose.translation, dir_world);
        if (t && *t < best) {
          best = *t;
          best_prim = static_cast<int>(pi);
        }
      }
      // noise draw kept unconditional so the stream does not depend on scene content
      const double noise = beams.noise_sigma > 0 ? beams.noise_sigma * gauss(rng) : 0.0;
      if (best_prim < 0 || best > beams.max_range) continue;
      const double range = std::max(best + noise, 1e-3);
      out.scan.points.push_back(dir_sensor * range);
      out.gt_range.push_back(best);
      out.prim_index.push_back(best_prim);
    }
  }
  return out;
}

std::vector<PoseSE3> make_trajectory(const TrajectorySpec& spec) {
  if (spec.scans < 1) throw Error("TrajectorySpec: scans must be >= 1");
  std::vector<PoseSE3> poses;
  poses.reserve(spec.scans);
  auto yaw_pose = [](const Vec3& pos, double yaw) {
    PoseSE3 pose;
    pose.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
    pose.translation = pos;
    return pose;
  };
  if (spec.kind == TrajectorySpec::Kind::kLine) {
    const Vec3 d = spec.end - spec.start;
    const double yaw = std::atan2(d.y(), d.x());
    for (int i = 0; i < spec.scans; ++i) {
      const double s = spec.scans == 1 ? 0.0 : static_cast<double>(i) / (spec.scans - 1);
      poses.push_back(yaw_pose(spec.start + s * d, yaw));
    }
  } else {
    for (int i = 0; i < spec.scans; ++i) {
      const double s = spec.scans == 1 ? 0.0 : static_cast<double>(i) / (spec.scans - 1);
      const double a = spec.arc_angle0 + s * (spec.arc_angle1 - spec.arc_angle0);
      const Vec3 pos(spec.arc_center.x() + spec.arc_radius * std::cos(a),
                     spec.arc_center.y() + spec.arc_radius * std::sin(a), spec.arc_center.z());
      const double dir_sign = spec.arc_angle1 >= spec.arc_angle0 ? 1.0 : -1.0;
      poses.push_back(yaw_pose(pos, a + dir_sign * M_PI_2));
    }
  }
  return poses;
}

BeamConfig linear_beams(int count, double min_angle, double max_angle, double hres,
                        double max_range, double noise_sigma) {
  BeamConfig cfg;
  cfg.horizontal_resolution = hres;
  cfg.max_range = max_range;
  cfg.noise_sigma = noise_sigma;
  for (int i = 0; i < count; ++i) {
    const double s = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
    cfg.vertical_angles.push_back(min_angle + s * (max_angle - min_angle));
  }
  return cfg;
}

SceneFile parse_scene_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("parse_scene_file: cannot open " + path);
  SceneFile out;
  out.beams.horizontal_resolution = 1.0 * M_PI / 180.0;
  out.beams.max_range = 50.0;
  bool have_traj = false;
  int scans = 0;
  std::string line;
  size_t line_no = 0;
  const double deg = M_PI / 180.0;

  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    auto fail = [&](const std::string& what) {
      throw Error("parse_scene_file: " + what + " at line " + std::to_string(line_no) + " of " +
                  path);
    };
    if (tok == "beams_linear") {
      int n;
      double lo, hi;
      if (!(ss >> n >> lo >> hi)) fail("beams_linear needs: count min_deg max_deg");
      const BeamConfig lin = linear_beams(n, lo * deg, hi * deg, out.beams.horizontal_resolution,
                                          out.beams.max_range, out.beams.noise_sigma);
      out.beams.vertical_angles = lin.vertical_angles;
    } else if (tok == "beams") {
      out.beams.vertical_angles.clear();
      double a;
      while (ss >> a) out.beams.vertical_angles.push_back(a * deg);
      if (out.beams.vertical_angles.empty()) fail("beams needs at least one angle");
    } else if (tok == "hres_deg") {
      if (!(ss >> out.beams.horizontal_resolution)) fail("hres_deg needs a value");
      out.beams.horizontal_resolution *= deg;
    } else if (tok == "max_range") {
      if (!(ss >> out.beams.max_range)) fail("max_range needs a value");
    } else if (tok == "noise_sigma") {
      if (!(ss >> out.beams.noise_sigma)) fail("noise_sigma needs a value");
    } else if (tok == "plane") {
      Primitive p;
      p.kind = Primitive::Kind::kPlane;
      if (!(ss >> p.point.x() >> p.point.y() >> p.point.z() >> p.normal.x() >> p.normal.y() >>
            p.normal.z())) {
        fail("plane needs: px py pz nx ny nz");
      }
      p.normal.normalize();
      std::string label;
      if (ss >> label && label == "ground") p.label = PrimLabel::kGround;
      out.scene.primitives.push_back(p);
    } else if (tok == "box") {
      Primitive p;
      p.kind = Primitive::Kind::kBox;
      if (!(ss >> p.bmin.x() >> p.bmin.y() >> p.bmin.z() >> p.bmax.x() >> p.bmax.y() >>
            p.bmax.z())) {
        fail("box needs: minx miny minz maxx maxy maxz");
      }
      std::string label;
      if (ss >> label && label == "transient") {
        p.label = PrimLabel::kTransient;
        int s;
        while (ss >> s) p.active_scans.insert(s);
        if (p.active_scans.empty()) fail("transient box needs active scan indices");
      }
      out.scene.primitives.push_back(p);
    } else if (tok == "sphere") {
      Primitive p;
      p.kind = Primitive::Kind::kSphere;
      if (!(ss >> p.center.x() >> p.center.y() >> p.center.z() >> p.radius)) {
        fail("sphere needs: cx cy cz r");
      }
      out.scene.primitives.push_back(p);
    } else if (tok == "traj_line") {
      out.traj.kind = TrajectorySpec::Kind::kLine;
      if (!(ss >> out.traj.start.x() >> out.traj.start.y() >> out.traj.start.z() >>
            out.traj.end.x() >> out.traj.end.y() >> out.traj.end.z())) {
        fail("traj_line needs: x0 y0 z0 x1 y1 z1");
      }
      have_traj = true;
    } else if (tok == "traj_arc") {
      out.traj.kind = TrajectorySpec::Kind::kArc;
      double a0, a1;
      if (!(ss >> out.traj.arc_center.x() >> out.traj.arc_center.y() >> out.traj.arc_radius >>
            a0 >> a1 >> out.traj.arc_center.z())) {
        fail("traj_arc needs: cx cy radius a0_deg a1_deg z");
      }
      out.traj.arc_angle0 = a0 * deg;
      out.traj.arc_angle1 = a1 * deg;
      have_traj = true;
    } else if (tok == "scans") {
      if (!(ss >> scans)) fail("scans needs a count");
    } else {
      fail("unknown directive '" + tok + "'");
    }
  }
  if (out.beams.vertical_angles.empty()) {
    out.beams.vertical_angles =
        linear_beams(32, -25 * deg, 5 * deg, 0, 1, 0).vertical_angles;
  }
  if (!have_traj) throw Error("parse_scene_file: no trajectory in " + path);
  if (scans < 1) throw Error("parse_scene_file: missing 'scans' count in " + path);
  out.traj.scans = scans;
  out.scene.validate();
  return out;
}

}  // namespace lomap
