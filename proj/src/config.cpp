#include "lomap/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace lomap {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct FieldVisitor {
  // getter mode
  std::ostringstream* out = nullptr;
  // setter mode
  const std::string* key = nullptr;
  const std::string* value = nullptr;
  bool matched = false;

  void operator()(const char* name, double& v) { handle(name, v); }
  void operator()(const char* name, int& v) { handle(name, v); }
  void operator()(const char* name, int64_t& v) { handle(name, v); }
  void operator()(const char* name, uint64_t& v) { handle(name, v); }
  void operator()(const char* name, bool& v) { handle(name, v); }
  void operator()(const char* name, std::string& v) { handle(name, v); }

 private:
  template <typename T>
  void handle(const char* name, T& v) {
    if (out) {
      *out << name << " = " << to_string(v) << "\n";
      return;
    }
    if (key && *key == name) {
      parse(name, *value, v);
      matched = true;
    }
  }

  static std::string to_string(double v) { return format_double(v); }
  static std::string to_string(int v) { return std::to_string(v); }
  static std::string to_string(int64_t v) { return std::to_string(v); }
  static std::string to_string(uint64_t v) { return std::to_string(v); }
  static std::string to_string(bool v) { return v ? "true" : "false"; }
  static std::string to_string(const std::string& v) { return v; }

  static void parse(const char* name, const std::string& s, double& v) {
    size_t pos = 0;
    v = std::stod(s, &pos);
    if (pos != s.size()) throw Error(std::string("config: bad number for ") + name + ": " + s);
  }
  static void parse(const char* name, const std::string& s, int& v) {
    size_t pos = 0;
    v = std::stoi(s, &pos);
    if (pos != s.size()) throw Error(std::string("config: bad integer for ") + name + ": " + s);
  }
  static void parse(const char* name, const std::string& s, int64_t& v) {
    size_t pos = 0;
    v = std::stoll(s, &pos);
    if (pos != s.size()) throw Error(std::string("config: bad integer for ") + name + ": " + s);
  }
  static void parse(const char* name, const std::string& s, uint64_t& v) {
    size_t pos = 0;
    v = std::stoull(s, &pos);
    if (pos != s.size()) throw Error(std::string("config: bad integer for ") + name + ": " + s);
  }
  static void parse(const char* name, const std::string& s, bool& v) {
    if (s == "true" || s == "1" || s == "on") {
      v = true;
    } else if (s == "false" || s == "0" || s == "off") {
      v = false;
    } else {
      throw Error(std::string("config: bad boolean for ") + name + ": " + s);
    }
  }
  static void parse(const char*, const std::string& s, std::string& v) { v = s; }
};

template <class V>
void visit_fields(Config& c, V&& v) {
  v("voxel_size", c.voxel_size);
  v("emb_dim", c.emb_dim);
  v("emb_init", c.emb_init);
  v("emb_init_scale", c.emb_init_scale);
  v("origin_offset_voxels", c.origin_offset_voxels);
  v("lookup_mem_gb", c.lookup_mem_gb);
  v("hit_count_mode", c.hit_count_mode);
  v("decoder_hidden", c.decoder_hidden);
  v("truncation", c.truncation);
  v("loss_w_sdf", c.loss_w_sdf);
  v("loss_w_free", c.loss_w_free);
  v("loss_w_eik", c.loss_w_eik);
  v("eik_delta_ratio", c.eik_delta_ratio);
  v("eik_every", c.eik_every);
  v("rays_odom", c.rays_odom);
  v("rays_map", c.rays_map);
  v("step_ratio_odom", c.step_ratio_odom);
  v("step_ratio_map", c.step_ratio_map);
  v("min_hits", c.min_hits);
  v("jitter", c.jitter);
  v("max_batch_samples", c.max_batch_samples);
  v("odom_iterations", c.odom_iterations);
  v("odom_lr_trans", c.odom_lr_trans);
  v("odom_lr_rot", c.odom_lr_rot);
  v("odom_clip_trans", c.odom_clip_trans);
  v("odom_clip_rot", c.odom_clip_rot);
  v("odom_momentum", c.odom_momentum);
  v("odom_lr_decay_floor", c.odom_lr_decay_floor);
  v("odom_early_stop_delta", c.odom_early_stop_delta);
  v("odom_early_stop_window", c.odom_early_stop_window);
  v("odom_divergence_factor", c.odom_divergence_factor);
  v("odom_divergence_patience", c.odom_divergence_patience);
  v("abort_on_divergence", c.abort_on_divergence);
  v("map_iterations", c.map_iterations);
  v("lr_embeddings", c.lr_embeddings);
  v("lr_decoder", c.lr_decoder);
  v("map_pose_lr_scale", c.map_pose_lr_scale);
  v("freeze_after", c.freeze_after);
  v("keyscan_nv_threshold", c.keyscan_nv_threshold);
  v("keyscan_dist", c.keyscan_dist);
  v("refine_trunc", c.refine_trunc);
  v("refine_enabled", c.refine_enabled);
  v("refine_epochs", c.refine_epochs);
  v("refine_iters", c.refine_iters);
  v("ground_enabled", c.ground_enabled);
  v("ground_rings", c.ground_rings);
  v("ground_sectors", c.ground_sectors);
  v("ground_dist_threshold", c.ground_dist_threshold);
  v("ground_cone_deg", c.ground_cone_deg);
  v("ground_seed_height", c.ground_seed_height);
  v("seed", c.seed);
  v("mode", c.mode);
  v("parallel_kernels", c.parallel_kernels);
}

void set_field(Config& c, const std::string& key, const std::string& value,
               const std::string& where) {
  FieldVisitor v;
  v.key = &key;
  v.value = &value;
  visit_fields(c, v);
  if (!v.matched) throw Error("config: unknown key '" + key + "' (" + where + ")");
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("config: cannot open " + path);
  Config cfg;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error("config: missing '=' at line " + std::to_string(line_no) + " of " + path);
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    set_field(cfg, key, value, path + ":" + std::to_string(line_no));
  }
  cfg.apply_env_overrides();
  cfg.validate();
  return cfg;
}

void Config::apply_env_overrides() {
  Config& c = *this;
  auto apply = [&c](const char* name, auto& /*field*/) {
    std::string env_name = "LOMAP_";
    for (const char* p = name; *p; ++p) env_name += static_cast<char>(std::toupper(*p));
    if (const char* env = std::getenv(env_name.c_str())) {
      set_field(c, name, env, "environment " + env_name);
    }
  };
  visit_fields(c, apply);
}

std::string Config::serialize() const {
  std::ostringstream os;
  FieldVisitor v;
  v.out = &os;
  visit_fields(const_cast<Config&>(*this), v);
  return os.str();
}

void Config::validate() const {
  auto positive = [](const char* name, double v) {
    if (!(v > 0)) {
      throw Error(std::string("config: ") + name + " must be > 0, got " + format_double(v));
    }
  };
  auto positive_int = [](const char* name, int v) {
    if (v <= 0) {
      throw Error(std::string("config: ") + name + " must be >= 1, got " + std::to_string(v));
    }
  };
  positive("voxel_size", voxel_size);
  positive_int("emb_dim", emb_dim);
  if (emb_init != "zero" && emb_init != "uniform") {
    throw Error("config: emb_init must be 'zero' or 'uniform', got '" + emb_init + "'");
  }
  if (origin_offset_voxels < 0 || origin_offset_voxels > (1ll << kMortonBitsPerAxis)) {
    throw Error("config: origin_offset_voxels out of the Morton bit budget");
  }
  positive("lookup_mem_gb", lookup_mem_gb);
  if (hit_count_mode != "points" && hit_count_mode != "scans") {
    throw Error("config: hit_count_mode must be 'points' or 'scans', got '" + hit_count_mode +
                "'");
  }
  positive_int("decoder_hidden", decoder_hidden);
  positive("truncation", truncation);
  if (loss_w_sdf < 0 || loss_w_free < 0 || loss_w_eik < 0) {
    throw Error("config: loss weights must be >= 0");
  }
  positive("eik_delta_ratio", eik_delta_ratio);
  positive_int("eik_every", eik_every);
  if (max_batch_samples < 0) throw Error("config: max_batch_samples must be >= 0");
  positive_int("rays_odom", rays_odom);
  positive_int("rays_map", rays_map);
  positive("step_ratio_odom", step_ratio_odom);
  positive("step_ratio_map", step_ratio_map);
  positive_int("min_hits", min_hits);
  positive_int("odom_iterations", odom_iterations);
  positive("odom_lr_rot", odom_lr_rot);
  positive("odom_lr_trans", odom_lr_trans);
  positive("odom_clip_trans", odom_clip_trans);
  positive("odom_clip_rot", odom_clip_rot);
  if (odom_momentum < 0 || odom_momentum >= 1) {
    throw Error("config: odom_momentum must be in [0, 1)");
  }
  if (odom_lr_decay_floor <= 0 || odom_lr_decay_floor > 1) {
    throw Error("config: odom_lr_decay_floor must be in (0, 1]");
  }
  positive_int("map_iterations", map_iterations);
  positive("lr_embeddings", lr_embeddings);
  positive("lr_decoder", lr_decoder);
  if (map_pose_lr_scale < 0) throw Error("config: map_pose_lr_scale must be >= 0");
  if (freeze_after < 0) throw Error("config: freeze_after must be >= 0");
  positive_int("keyscan_nv_threshold", keyscan_nv_threshold);
  positive("keyscan_dist", keyscan_dist);
  positive("refine_trunc", refine_trunc);
  positive_int("refine_epochs", refine_epochs);
  positive_int("refine_iters", refine_iters);
  positive_int("ground_rings", ground_rings);
  positive_int("ground_sectors", ground_sectors);
  positive("ground_dist_threshold", ground_dist_threshold);
  positive("ground_cone_deg", ground_cone_deg);
  positive("ground_seed_height", ground_seed_height);
  if (mode != "sequential" && mode != "pipelined") {
    throw Error("config: mode must be 'sequential' or 'pipelined', got '" + mode + "'");
  }
}

VoxelMap::Params Config::map_params() const {
  VoxelMap::Params p;
  p.voxel_size = voxel_size;
  p.emb_dim = emb_dim;
  p.origin_offset = origin_offset_voxels;
  p.lookup_mem_bytes = static_cast<uint64_t>(lookup_mem_gb * (1ull << 30));
  p.init = emb_init == "zero" ? EmbedInit::kZero : EmbedInit::kUniform;
  p.init_scale = emb_init_scale;
  p.hit_mode = hit_count_mode == "points" ? HitCountMode::kPoints : HitCountMode::kScans;
  p.seed = seed;
  return p;
}

LossParams Config::loss_params() const {
  LossParams p;
  p.w_sdf = loss_w_sdf;
  p.w_free = loss_w_free;
  p.w_eik = loss_w_eik;
  p.truncation = truncation;
  p.eik_delta = eik_delta_ratio * voxel_size;
  p.eik_every = eik_every;
  return p;
}

OdometryConfig Config::odometry_config() const {
  OdometryConfig c;
  c.iterations = odom_iterations;
  c.lr_trans = odom_lr_trans;
  c.lr_rot = odom_lr_rot;
  c.clip_trans = odom_clip_trans;
  c.clip_rot = odom_clip_rot;
  c.momentum = odom_momentum;
  c.lr_decay_floor = odom_lr_decay_floor;
  c.rays = rays_odom;
  c.min_hits = min_hits;
  c.step_ratio = step_ratio_odom;
  c.jitter = jitter;
  c.max_samples = static_cast<size_t>(max_batch_samples);
  c.early_stop_delta = odom_early_stop_delta;
  c.early_stop_window = odom_early_stop_window;
  c.divergence_factor = odom_divergence_factor;
  c.divergence_patience = odom_divergence_patience;
  return c;
}

MappingConfig Config::mapping_config() const {
  MappingConfig c;
  c.iterations = map_iterations;
  c.lr_emb = lr_embeddings;
  c.lr_dec = lr_decoder;
  c.pose_lr_scale = map_pose_lr_scale;
  c.rays = rays_map;
  c.min_hits = min_hits;
  c.step_ratio = step_ratio_map;
  c.jitter = jitter;
  c.max_samples = static_cast<size_t>(max_batch_samples);
  c.keyscan_nv_threshold = keyscan_nv_threshold;
  c.keyscan_dist = keyscan_dist;
  c.refine_trunc = refine_trunc;
  c.refine_epochs = refine_epochs;
  c.refine_iters = refine_iters;
  return c;
}

GroundParams Config::ground_params() const {
  GroundParams p;
  p.rings = ground_rings;
  p.sectors = ground_sectors;
  p.dist_threshold = ground_dist_threshold;
  p.max_cone_deg = ground_cone_deg;
  p.seed_height = ground_seed_height;
  return p;
}

}  // namespace lomap
