#include "urbanseg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <Eigen/Geometry>
#include <json.hpp>

#include "urbanseg/errors.hpp"
#include "urbanseg/rng.hpp"

namespace urbanseg {

namespace {

// Draw streams are salted per transform so one seed drives all of them
// independently.
enum Salt : std::uint64_t { kRotation = 1, kFlip = 2, kContrast = 3, kJitter = 4, kHueSat = 5 };

CounterRng rng_for(const AugmentationConfig& cfg, std::uint64_t stream, Salt salt) {
  return CounterRng(cfg.seed, stream * 8 + salt);
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

void AugmentationConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::Validation, std::string(name) + " must lie in [0,1]");
  };
  prob(flip_prob, "flip_prob");
  prob(autocontrast_prob, "autocontrast_prob");
  if (!(max_rotation_deg >= 0.0 && max_rotation_deg <= 180.0)) {
    fail(ErrorKind::Validation, "max_rotation_deg must lie in [0,180]");
  }
  if (flip_z) fail(ErrorKind::Validation, "flipping the z axis is not allowed (ground orientation)");
  if (!(jitter_std >= 0.0)) fail(ErrorKind::Validation, "jitter_std must be non-negative");
  if (!(hue_shift_max >= 0.0 && hue_shift_max <= 1.0)) {
    fail(ErrorKind::Validation, "hue_shift_max must lie in [0,1]");
  }
  if (!(sat_scale_range[0] >= 0.0 && sat_scale_range[0] <= sat_scale_range[1])) {
    fail(ErrorKind::Validation, "sat_scale_range must be a non-negative interval");
  }
}

AugmentationConfig load_augmentation_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  AugmentationConfig cfg;
  try {
    const auto j = nlohmann::json::parse(in);
    cfg.max_rotation_deg = j.value("max_rotation_deg", cfg.max_rotation_deg);
    if (j.contains("flip_axes")) {
      cfg.flip_x = cfg.flip_y = false;
      for (const auto& a : j.at("flip_axes")) {
        const auto axis = a.get<std::string>();
        if (axis == "x") cfg.flip_x = true;
        else if (axis == "y") cfg.flip_y = true;
        else if (axis == "z") cfg.flip_z = true;
        else fail(ErrorKind::Validation, "unknown flip axis '" + axis + "'");
      }
    }
    cfg.flip_prob = j.value("flip_prob", cfg.flip_prob);
    cfg.jitter_std = j.value("jitter_std", cfg.jitter_std);
    cfg.autocontrast_prob = j.value("autocontrast_prob", cfg.autocontrast_prob);
    cfg.hue_shift_max = j.value("hue_shift_max", cfg.hue_shift_max);
    cfg.sat_scale_range = j.value("sat_scale_range", cfg.sat_scale_range);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

Coords coords_of(const PointCloud& cloud) {
  Coords out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out[i] = Vec3(cloud.x[i], cloud.y[i], cloud.z[i]);
  return out;
}

void set_coords(PointCloud& cloud, const Coords& coords) {
  if (coords.size() != cloud.size()) fail(ErrorKind::Alignment, "coordinate count differs from cloud size");
  for (std::size_t i = 0; i < coords.size(); ++i) {
    cloud.x[i] = coords[i].x();
    cloud.y[i] = coords[i].y();
    cloud.z[i] = coords[i].z();
  }
}

Colors colors_of(const PointCloud& cloud) {
  Colors out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    out[i] = Vec3(cloud.r[i], cloud.g[i], cloud.b[i]) / 65535.0;
  }
  return out;
}

void set_colors(PointCloud& cloud, const Colors& colors) {
  if (colors.size() != cloud.size()) fail(ErrorKind::Alignment, "color count differs from cloud size");
  auto q = [](double v) { return static_cast<std::uint16_t>(std::lround(clamp01(v) * 65535.0)); };
  for (std::size_t i = 0; i < colors.size(); ++i) {
    cloud.r[i] = q(colors[i].x());
    cloud.g[i] = q(colors[i].y());
    cloud.b[i] = q(colors[i].z());
  }
}

Coords Normalization::apply(const Coords& coords) const {
  Coords out(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) out[i] = (coords[i] - centroid) / scale;
  return out;
}

Coords Normalization::invert(const Coords& normalized) const {
  Coords out(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) out[i] = normalized[i] * scale + centroid;
  return out;
}

std::pair<Coords, Normalization> recenter_normalize(const Coords& coords) {
  if (coords.empty()) fail(ErrorKind::Argument, "cannot normalize an empty point set");
  Normalization n;
  // Shift by the first point before averaging so large georeferenced
  // coordinates keep their precision.
  const Vec3 anchor = coords.front();
  Vec3 sum = Vec3::Zero();
  for (const auto& p : coords) sum += p - anchor;
  n.centroid = anchor + sum / static_cast<double>(coords.size());
  double max_norm = 0.0;
  for (const auto& p : coords) max_norm = std::max(max_norm, (p - n.centroid).norm());
  n.scale = max_norm > 0.0 ? max_norm : 1.0;
  return {n.apply(coords), n};
}

Eigen::Matrix3d rotation_xyz(double ax_deg, double ay_deg, double az_deg) {
  const Eigen::Matrix3d rx = Eigen::AngleAxisd(deg2rad(ax_deg), Vec3::UnitX()).toRotationMatrix();
  const Eigen::Matrix3d ry = Eigen::AngleAxisd(deg2rad(ay_deg), Vec3::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d rz = Eigen::AngleAxisd(deg2rad(az_deg), Vec3::UnitZ()).toRotationMatrix();
  return rz * ry * rx;
}

Coords rotate(const Coords& coords, const Eigen::Matrix3d& rotation) {
  Coords out(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) out[i] = rotation * coords[i];
  return out;
}

RotationDraw draw_rotation(const AugmentationConfig& cfg, std::uint64_t stream) {
  const auto rng = rng_for(cfg, stream, kRotation);
  RotationDraw d;
  for (std::uint64_t a = 0; a < 3; ++a) {
    d.angles_deg[a] = (2.0 * rng.uniform(0, a) - 1.0) * cfg.max_rotation_deg;
  }
  return d;
}

FlipDraw draw_flip(const AugmentationConfig& cfg, std::uint64_t stream) {
  const auto rng = rng_for(cfg, stream, kFlip);
  FlipDraw d;
  d.x = cfg.flip_x && rng.uniform(0, 0) < cfg.flip_prob;
  d.y = cfg.flip_y && rng.uniform(0, 1) < cfg.flip_prob;
  return d;
}

AutoContrastDraw draw_auto_contrast(const AugmentationConfig& cfg, std::uint64_t stream) {
  const auto rng = rng_for(cfg, stream, kContrast);
  return {rng.uniform(0, 0) < cfg.autocontrast_prob, rng.uniform(0, 1)};
}

HueSatDraw draw_hue_saturation(const AugmentationConfig& cfg, std::uint64_t stream) {
  const auto rng = rng_for(cfg, stream, kHueSat);
  HueSatDraw d;
  d.hue_offset = (2.0 * rng.uniform(0, 0) - 1.0) * cfg.hue_shift_max;
  d.sat_scale = cfg.sat_scale_range[0] + (cfg.sat_scale_range[1] - cfg.sat_scale_range[0]) * rng.uniform(0, 1);
  return d;
}

Coords apply_rotation(const Coords& coords, const RotationDraw& draw) {
  return rotate(coords, rotation_xyz(draw.angles_deg[0], draw.angles_deg[1], draw.angles_deg[2]));
}

Coords random_rotation(const Coords& coords, const AugmentationConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  return apply_rotation(coords, draw_rotation(cfg, stream));
}

Coords apply_flip(const Coords& coords, const FlipDraw& draw) {
  if (coords.empty() || (!draw.x && !draw.y)) return coords;
  double cx = 0.0, cy = 0.0;
  for (const auto& p : coords) {
    cx += p.x();
    cy += p.y();
  }
  cx /= static_cast<double>(coords.size());
  cy /= static_cast<double>(coords.size());
  Coords out = coords;
  for (auto& p : out) {
    if (draw.x) p.x() = 2.0 * cx - p.x();
    if (draw.y) p.y() = 2.0 * cy - p.y();
  }
  return out;
}

Coords random_flip(const Coords& coords, const AugmentationConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  return apply_flip(coords, draw_flip(cfg, stream));
}

Colors apply_auto_contrast(const Colors& colors, double beta) {
  if (colors.empty()) return colors;
  Vec3 lo = colors.front(), hi = colors.front();
  for (const auto& c : colors) {
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  Colors out = colors;
  for (int ch = 0; ch < 3; ++ch) {
    const double range = hi[ch] - lo[ch];
    if (range <= 0.0) continue;
    for (auto& c : out) {
      const double stretched = (c[ch] - lo[ch]) / range;
      c[ch] = clamp01((1.0 - beta) * c[ch] + beta * stretched);
    }
  }
  return out;
}

Colors chromatic_auto_contrast(const Colors& colors, const AugmentationConfig& cfg, std::uint64_t stream) {
  const auto d = draw_auto_contrast(cfg, stream);
  return d.apply ? apply_auto_contrast(colors, d.beta) : colors;
}

Colors chromatic_jitter(const Colors& colors, const AugmentationConfig& cfg, std::uint64_t stream) {
  if (cfg.jitter_std == 0.0) return colors;
  const auto rng = rng_for(cfg, stream, kJitter);
  Colors out(colors.size());
  for (std::size_t i = 0; i < colors.size(); ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      out[i][ch] = clamp01(colors[i][ch] + cfg.jitter_std * rng.normal(i, static_cast<std::uint64_t>(ch)));
    }
  }
  return out;
}

Vec3 rgb_to_hsv(const Vec3& rgb) {
  const double r = rgb.x(), g = rgb.y(), b = rgb.z();
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r) {
      h = std::fmod((g - b) / delta, 6.0);
      if (h < 0.0) h += 6.0;
    } else if (mx == g) {
      h = (b - r) / delta + 2.0;
    } else {
      h = (r - g) / delta + 4.0;
    }
    h /= 6.0;
  }
  const double s = mx > 0.0 ? delta / mx : 0.0;
  return {h, s, mx};
}

Vec3 hsv_to_rgb(const Vec3& hsv) {
  const double h = hsv.x() - std::floor(hsv.x());
  const double s = hsv.y(), v = hsv.z();
  const double h6 = h * 6.0;
  const double sector = std::floor(h6);
  const double f = h6 - sector;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (static_cast<int>(sector) % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

Colors apply_hue_saturation(const Colors& colors, const HueSatDraw& draw) {
  Colors out(colors.size());
  for (std::size_t i = 0; i < colors.size(); ++i) {
    Vec3 hsv = rgb_to_hsv(colors[i]);
    hsv.x() = hsv.x() + draw.hue_offset;
    hsv.x() -= std::floor(hsv.x());
    hsv.y() = clamp01(hsv.y() * draw.sat_scale);
    const Vec3 rgb = hsv_to_rgb(hsv);
    out[i] = Vec3(clamp01(rgb.x()), clamp01(rgb.y()), clamp01(rgb.z()));
  }
  return out;
}

Colors hue_saturation_translation(const Colors& colors, const AugmentationConfig& cfg, std::uint64_t stream) {
  return apply_hue_saturation(colors, draw_hue_saturation(cfg, stream));
}

PointCloud augment_cloud(const PointCloud& cloud, const AugmentationConfig& cfg) {
  cfg.validate();
  PointCloud out = cloud;
  if (cloud.empty()) return out;
  const std::uint64_t stream = 0;
  auto [centered, norm] = recenter_normalize(coords_of(cloud));
  Normalization shift_only{norm.centroid, 1.0};
  Coords c = shift_only.apply(coords_of(cloud));
  c = random_rotation(c, cfg, stream);
  c = random_flip(c, cfg, stream);
  set_coords(out, shift_only.invert(c));

  Colors col = colors_of(cloud);
  col = chromatic_auto_contrast(col, cfg, stream);
  col = chromatic_jitter(col, cfg, stream);
  col = hue_saturation_translation(col, cfg, stream);
  set_colors(out, col);
  return out;
}

}  // namespace urbanseg
