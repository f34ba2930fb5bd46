#include "poseverify/rendering.hpp"

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace pv {

namespace {

// Depth quantized to 1e-6 m so the tie rule (lower point index wins within
// 1e-6) is a transitive comparison; serial and parallel paths then agree
// bit-for-bit.
struct ZEntry {
  std::int64_t qdepth = std::numeric_limits<std::int64_t>::max();
  std::int64_t index = std::numeric_limits<std::int64_t>::max();

  bool beats(const ZEntry& other) const {
    return qdepth < other.qdepth ||
           (qdepth == other.qdepth && index < other.index);
  }
  bool written() const { return index != std::numeric_limits<std::int64_t>::max(); }
};

std::int64_t quantize_depth(double d) {
  return std::llround(d * 1e6);
}

struct CloudSpan {
  const PointCloud* cloud;
  std::int64_t index_offset;
};

void splat_range(const CloudSpan& span, size_t begin, size_t end,
                 const Pose& pose, const Intrinsics& k, int radius,
                 std::vector<ZEntry>& zbuf) {
  const PointCloud& cloud = *span.cloud;
  const bool cull = cloud.has_normals();
  for (size_t i = begin; i < end; ++i) {
    const Eigen::Vector3d xc = pose.apply(cloud.positions[i]);
    if (xc.z() <= 0.0) continue;
    if (cull) {
      const Eigen::Vector3d nc = pose.rotation * cloud.normals[i];
      if (nc.dot(xc) > 0.0) continue;  // back-facing
    }
    const double u = k.fx * xc.x() / xc.z() + k.cx;
    const double v = k.fy * xc.y() / xc.z() + k.cy;
    const int px = int(std::lround(u));
    const int py = int(std::lround(v));
    if (px + radius < 0 || px - radius >= k.width || py + radius < 0 ||
        py - radius >= k.height) {
      continue;
    }
    const ZEntry cand{quantize_depth(xc.z()),
                      span.index_offset + std::int64_t(i)};
    for (int dy = -radius; dy <= radius; ++dy) {
      const int y = py + dy;
      if (y < 0 || y >= k.height) continue;
      for (int dx = -radius; dx <= radius; ++dx) {
        const int x = px + dx;
        if (x < 0 || x >= k.width) continue;
        ZEntry& cur = zbuf[size_t(y) * k.width + x];
        if (cand.beats(cur)) cur = cand;
      }
    }
  }
}

RenderedView fill_outputs(const std::vector<CloudSpan>& spans,
                          const std::vector<ZEntry>& zbuf, const Pose& pose,
                          const Intrinsics& k) {
  RenderedView view;
  view.color = ColorImage(k.width, k.height, {0, 0, 0});
  view.depth = DepthMap(k.width, k.height, 0.0f);
  view.label = LabelMap(k.width, k.height, kInvalidLabel);
  view.normal = Grid<Vec3f>(k.width, k.height, {0, 0, 0});
  view.validity = MaskGrid(k.width, k.height, 0);
  view.has_normals = true;
  view.has_labels = true;
  for (const auto& s : spans) {
    view.has_normals = view.has_normals && s.cloud->has_normals();
    view.has_labels = view.has_labels && s.cloud->has_labels();
  }
  for (size_t pix = 0; pix < zbuf.size(); ++pix) {
    if (!zbuf[pix].written()) continue;
    std::int64_t gi = zbuf[pix].index;
    const CloudSpan* span = &spans.front();
    for (const auto& s : spans) {
      if (gi >= s.index_offset) span = &s;
    }
    const size_t i = size_t(gi - span->index_offset);
    const PointCloud& cloud = *span->cloud;
    const Eigen::Vector3d xc = pose.apply(cloud.positions[i]);
    view.depth.data[pix] = float(xc.z());
    view.validity.data[pix] = 1;
    if (!cloud.colors.empty()) view.color.data[pix] = cloud.colors[i];
    if (view.has_normals) {
      const Eigen::Vector3d nc = pose.rotation * cloud.normals[i];
      view.normal.data[pix] = {float(nc.x()), float(nc.y()), float(nc.z())};
    }
    if (view.has_labels) view.label.data[pix] = cloud.labels[i];
  }
  return view;
}

std::vector<CloudSpan> make_spans(std::span<const PointCloud* const> clouds) {
  std::vector<CloudSpan> spans;
  std::int64_t offset = 0;
  for (const PointCloud* c : clouds) {
    spans.push_back({c, offset});
    offset += std::int64_t(c->size());
  }
  return spans;
}

void check_nonempty(std::span<const PointCloud* const> clouds) {
  size_t total = 0;
  for (const PointCloud* c : clouds) total += c->size();
  if (total == 0) throw std::invalid_argument("render: empty cloud");
}

}  // namespace

RenderedView render_clouds(std::span<const PointCloud* const> clouds,
                           const Pose& pose, const Intrinsics& k,
                           int splat_radius_px) {
  check_nonempty(clouds);
  const auto spans = make_spans(clouds);
  const size_t npix = size_t(k.width) * k.height;
  std::vector<ZEntry> zbuf(npix);

  #pragma omp parallel
  {
    std::vector<ZEntry> local(npix);
    for (const auto& span : spans) {
      const std::int64_t n = std::int64_t(span.cloud->size());
      #pragma omp for schedule(static) nowait
      for (std::int64_t i = 0; i < n; ++i) {
        splat_range(span, size_t(i), size_t(i) + 1, pose, k, splat_radius_px,
                    local);
      }
    }
    #pragma omp critical
    {
      for (size_t pix = 0; pix < npix; ++pix) {
        if (local[pix].beats(zbuf[pix])) zbuf[pix] = local[pix];
      }
    }
  }
  return fill_outputs(spans, zbuf, pose, k);
}

RenderedView render_view(const PointCloud& cloud, const Pose& pose,
                         const Intrinsics& k, int splat_radius_px) {
  const PointCloud* ptr = &cloud;
  return render_clouds(std::span<const PointCloud* const>(&ptr, 1), pose, k,
                       splat_radius_px);
}

double invalid_pixel_ratio(const RenderedView& v) {
  size_t invalid = 0;
  for (std::uint8_t m : v.validity.data) invalid += (m == 0);
  return double(invalid) / double(v.validity.size());
}

namespace serial {

RenderedView render_clouds(std::span<const PointCloud* const> clouds,
                           const Pose& pose, const Intrinsics& k,
                           int splat_radius_px) {
  check_nonempty(clouds);
  const auto spans = make_spans(clouds);
  std::vector<ZEntry> zbuf(size_t(k.width) * k.height);
  for (const auto& span : spans) {
    splat_range(span, 0, span.cloud->size(), pose, k, splat_radius_px, zbuf);
  }
  return fill_outputs(spans, zbuf, pose, k);
}

RenderedView render_view(const PointCloud& cloud, const Pose& pose,
                         const Intrinsics& k, int splat_radius_px) {
  const PointCloud* ptr = &cloud;
  return serial::render_clouds(std::span<const PointCloud* const>(&ptr, 1),
                               pose, k, splat_radius_px);
}

}  // namespace serial

void apply_thread_cap_from_env() {
  const char* env = std::getenv("POSEVERIFY_THREADS");
  if (!env) return;
  const int n = std::atoi(env);
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace pv
