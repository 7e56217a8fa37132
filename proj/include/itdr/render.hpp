#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "itdr/image.hpp"
#include "itdr/randomization.hpp"
#include "itdr/scene.hpp"

namespace itdr {
namespace render_detail {

struct Tri {
  Vec3 v0, v1, v2;
  int slot;
};

inline constexpr double kNearClip = 0.05;
inline constexpr int kCylinderSegments = 20;
// Lifts resting objects a hair above the surface below so coplanar faces
// cannot z-fight.
inline constexpr double kRestEpsilon = 5e-4;

inline void emit_quad(Vec3 a, Vec3 b, Vec3 c, Vec3 d, int slot, std::vector<Tri>& out) {
  out.push_back({a, b, c, slot});
  out.push_back({a, c, d, slot});
}

inline void emit_prism(double cx, double cy, double theta, double lx, double ly, double z0,
                       double z1, int slot, std::vector<Tri>& out) {
  const double co = std::cos(theta), si = std::sin(theta);
  auto corner = [&](double sx, double sy, double z) {
    const double px = sx * lx * 0.5, py = sy * ly * 0.5;
    return Vec3{cx + co * px - si * py, cy + si * px + co * py, z};
  };
  const Vec3 b0 = corner(-1, -1, z0), b1 = corner(1, -1, z0), b2 = corner(1, 1, z0),
             b3 = corner(-1, 1, z0);
  const Vec3 t0 = corner(-1, -1, z1), t1 = corner(1, -1, z1), t2 = corner(1, 1, z1),
             t3 = corner(-1, 1, z1);
  emit_quad(t0, t1, t2, t3, slot, out);  // top
  emit_quad(b3, b2, b1, b0, slot, out);  // bottom
  emit_quad(b0, b1, t1, t0, slot, out);
  emit_quad(b1, b2, t2, t1, slot, out);
  emit_quad(b2, b3, t3, t2, slot, out);
  emit_quad(b3, b0, t0, t3, slot, out);
}

inline void emit_cylinder(double cx, double cy, double radius, double z0, double z1, int slot,
                          std::vector<Tri>& out) {
  const int n = kCylinderSegments;
  const Vec3 top_center{cx, cy, z1}, bottom_center{cx, cy, z0};
  for (int i = 0; i < n; ++i) {
    const double a0 = kTwoPi * i / n, a1 = kTwoPi * (i + 1) / n;
    const Vec3 p0{cx + radius * std::cos(a0), cy + radius * std::sin(a0), z0};
    const Vec3 p1{cx + radius * std::cos(a1), cy + radius * std::sin(a1), z0};
    const Vec3 q0{p0.x, p0.y, z1}, q1{p1.x, p1.y, z1};
    emit_quad(p0, p1, q1, q0, slot, out);
    out.push_back({top_center, q0, q1, slot});
    out.push_back({bottom_center, p1, p0, slot});
  }
}

inline void emit_object(const SceneObject& obj, int slot, std::vector<Tri>& out) {
  const double z0 = obj.base_z + kRestEpsilon;
  switch (obj.shape.kind) {
    case ShapeKind::Prism:
      emit_prism(obj.pose.x, obj.pose.y, obj.pose.theta, obj.shape.a, obj.shape.b, z0,
                 z0 + obj.shape.c, slot, out);
      break;
    case ShapeKind::Peg: {
      // Main body plus a nub on top of the +x end; the nub is what makes the
      // peg's orientation observable.
      emit_prism(obj.pose.x, obj.pose.y, obj.pose.theta, obj.shape.a, obj.shape.b, z0,
                 z0 + obj.shape.c, slot, out);
      const double nub_l = 0.25 * obj.shape.a, nub_w = 0.75 * obj.shape.b,
                   nub_h = 0.6 * obj.shape.c;
      const double off = 0.5 * obj.shape.a - 0.5 * nub_l;  // flush with the +x end
      const double co = std::cos(obj.pose.theta), si = std::sin(obj.pose.theta);
      emit_prism(obj.pose.x + co * off, obj.pose.y + si * off, obj.pose.theta, nub_l, nub_w,
                 z0 + obj.shape.c, z0 + obj.shape.c + nub_h, slot, out);
      break;
    }
    case ShapeKind::Cylinder:
      emit_cylinder(obj.pose.x, obj.pose.y, obj.shape.a, z0, z0 + obj.shape.b, slot, out);
      break;
  }
}

inline std::vector<Tri> scene_triangles(const Scene& s, bool include_distractors) {
  std::vector<Tri> tris;
  tris.reserve(128);
  emit_prism(0.5 * s.table_x, 0.5 * s.table_y, 0.0, s.table_x, s.table_y, -0.04, 0.0, kSlotTable,
             tris);
  emit_object(s.target, kSlotTarget, tris);
  emit_object(s.reference, kSlotReference, tris);
  if (include_distractors) {
    for (std::size_t i = 0; i < s.distractors.size(); ++i)
      emit_object(s.distractors[i], kSlotDistractor0 + static_cast<int>(i), tris);
  }
  return tris;
}

struct CameraBasis {
  Vec3 eye, right, up, forward;
  double focal;  // pixels
};

inline CameraBasis make_basis(const CameraPose& cam, double fov_scale, Vec3 eye_offset,
                              int height) {
  CameraBasis b;
  b.eye = cam.eye + eye_offset;
  b.forward = normalized(cam.look_at - b.eye);
  b.right = normalized(cross(b.forward, cam.up));
  b.up = cross(b.right, b.forward);
  const double fov = cam.vertical_fov * fov_scale;
  b.focal = 0.5 * height / std::tan(0.5 * fov);
  return b;
}

struct CamVertex {
  double x, y, z;  // camera space
};

/// Clips a triangle against z >= kNearClip; writes 0..4 vertices.
inline int clip_near(const CamVertex in[3], CamVertex out[4]) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const CamVertex& a = in[i];
    const CamVertex& b = in[(i + 1) % 3];
    const bool a_in = a.z >= kNearClip, b_in = b.z >= kNearClip;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double t = (kNearClip - a.z) / (b.z - a.z);
      out[n++] = {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), kNearClip};
    }
  }
  return n;
}

/// Shared z-buffered rasterization core: fills per-pixel inverse depth and
/// winning slot; optionally the flat-shaded color of the winning triangle.
struct RasterBuffers {
  int width = 0, height = 0;
  std::vector<double> inv_z;
  std::vector<int> slot;
  std::vector<double> shade_rgb;  // 3 per pixel, meaningful where slot >= 0
};

inline void rasterize(const Scene& s, const RandomizationParams& params, int width, int height,
                      bool include_distractors, bool shaded, RasterBuffers& buf) {
  validate_scene(s);
  buf.width = width;
  buf.height = height;
  buf.inv_z.assign(static_cast<std::size_t>(width) * height, 0.0);
  buf.slot.assign(static_cast<std::size_t>(width) * height, -1);
  if (shaded) buf.shade_rgb.assign(static_cast<std::size_t>(3) * width * height, 0.0);

  const CameraBasis cam = make_basis(s.camera, params.fov_scale, params.eye_offset, height);
  const std::vector<Tri> tris = scene_triangles(s, include_distractors);

  for (const Tri& tri : tris) {
    double shade_r = 0, shade_g = 0, shade_b = 0;
    if (shaded) {
      Vec3 n = cross(tri.v1 - tri.v0, tri.v2 - tri.v0);
      const double len = n.norm();
      if (len < 1e-15) continue;
      n = (1.0 / len) * n;
      if (dot(n, cam.eye - tri.v0) < 0) n = -1.0 * n;  // shade the visible side
      const double diffuse = std::max(0.0, -dot(n, params.light_direction));
      const double shade = params.ambient + params.light_intensity * diffuse;
      const Rgb& base = params.color[tri.slot];
      shade_r = base.r * shade;
      shade_g = base.g * shade;
      shade_b = base.b * shade;
    }

    const Vec3 verts[3] = {tri.v0, tri.v1, tri.v2};
    CamVertex cv[3];
    for (int i = 0; i < 3; ++i) {
      const Vec3 d = verts[i] - cam.eye;
      cv[i] = {dot(d, cam.right), dot(d, cam.up), dot(d, cam.forward)};
    }
    CamVertex clipped[4];
    const int n_clipped = clip_near(cv, clipped);
    for (int fan = 0; fan < n_clipped - 2; ++fan) {
      const CamVertex tv[3] = {clipped[0], clipped[fan + 1], clipped[fan + 2]};
      double sx[3], sy[3], w[3];
      for (int i = 0; i < 3; ++i) {
        w[i] = 1.0 / tv[i].z;
        sx[i] = 0.5 * width + cam.focal * tv[i].x * w[i];
        sy[i] = 0.5 * height - cam.focal * tv[i].y * w[i];
      }
      const double area =
          (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sx[2] - sx[0]) * (sy[1] - sy[0]);
      if (std::abs(area) < 1e-12) continue;
      const double inv_area = 1.0 / area;
      const int x_lo = std::max(0, static_cast<int>(std::floor(std::min({sx[0], sx[1], sx[2]}))));
      const int x_hi =
          std::min(width - 1, static_cast<int>(std::ceil(std::max({sx[0], sx[1], sx[2]}))));
      const int y_lo = std::max(0, static_cast<int>(std::floor(std::min({sy[0], sy[1], sy[2]}))));
      const int y_hi =
          std::min(height - 1, static_cast<int>(std::ceil(std::max({sy[0], sy[1], sy[2]}))));
      for (int py = y_lo; py <= y_hi; ++py) {
        const double cy = py + 0.5;
        for (int px = x_lo; px <= x_hi; ++px) {
          const double cx = px + 0.5;
          // Barycentric weights; inside-test tolerates either winding.
          const double l0 = ((sx[1] - cx) * (sy[2] - cy) - (sx[2] - cx) * (sy[1] - cy)) * inv_area;
          const double l1 = ((sx[2] - cx) * (sy[0] - cy) - (sx[0] - cx) * (sy[2] - cy)) * inv_area;
          const double l2 = 1.0 - l0 - l1;
          if (l0 < 0 || l1 < 0 || l2 < 0) continue;
          // 1/z is affine in screen space, so this interpolation is exact.
          const double inv_z = l0 * w[0] + l1 * w[1] + l2 * w[2];
          const std::size_t idx = static_cast<std::size_t>(py) * width + px;
          if (inv_z > buf.inv_z[idx]) {
            buf.inv_z[idx] = inv_z;
            buf.slot[idx] = tri.slot;
            if (shaded) {
              buf.shade_rgb[3 * idx + 0] = shade_r;
              buf.shade_rgb[3 * idx + 1] = shade_g;
              buf.shade_rgb[3 * idx + 2] = shade_b;
            }
          }
        }
      }
    }
  }
}

inline std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace render_detail

/// Renders the scene with flat shading (ambient + one directional light),
/// per-object base color, and per-pixel value noise. Deterministic in
/// (scene, params, size).
inline Image render(const Scene& s, const RandomizationParams& params, int size = 64) {
  if (size <= 0) throw std::invalid_argument("render: image size must be positive");
  render_detail::RasterBuffers buf;
  render_detail::rasterize(s, params, size, size, /*include_distractors=*/true, /*shaded=*/true,
                           buf);
  Image img(size, size);
  for (int py = 0; py < size; ++py) {
    for (int px = 0; px < size; ++px) {
      const std::size_t idx = static_cast<std::size_t>(py) * size + px;
      std::uint8_t* out = img.at(px, py);
      const int slot = buf.slot[idx];
      if (slot < 0) {
        out[0] = render_detail::quantize(params.background.r);
        out[1] = render_detail::quantize(params.background.g);
        out[2] = render_detail::quantize(params.background.b);
        continue;
      }
      const double noise =
          (2.0 * hash_unit(params.pixel_noise_seed, px, py) - 1.0) * params.noise_amplitude[slot];
      out[0] = render_detail::quantize(buf.shade_rgb[3 * idx + 0] + noise);
      out[1] = render_detail::quantize(buf.shade_rgb[3 * idx + 1] + noise);
      out[2] = render_detail::quantize(buf.shade_rgb[3 * idx + 2] + noise);
    }
  }
  return img;
}

/// Number of pixels where the target is the front-most surface.
inline int target_pixel_count(const Scene& s, int size = 32, bool include_distractors = true) {
  render_detail::RasterBuffers buf;
  RandomizationParams neutral;  // geometry only; appearance fields unused
  render_detail::rasterize(s, neutral, size, size, include_distractors, /*shaded=*/false, buf);
  int count = 0;
  for (int v : buf.slot)
    if (v == kSlotTarget) ++count;
  return count;
}

/// Fraction of the target's distractor-free silhouette that stays visible
/// once distractors are present. Used by the sampler's visibility floor.
inline double target_visible_fraction(const Scene& s, int size = 32) {
  const int base = target_pixel_count(s, size, /*include_distractors=*/false);
  if (base == 0) return 1.0;  // nothing distractors could hide
  const int visible = target_pixel_count(s, size, /*include_distractors=*/true);
  return static_cast<double>(visible) / static_cast<double>(base);
}

}  // namespace itdr
