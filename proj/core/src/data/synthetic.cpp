#include "daml/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "daml/error.hpp"

namespace daml::data {
namespace {

using Color = std::array<double, 3>;

Rng keyed_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(c)};
  return Rng(seq);
}

enum Stream : std::uint64_t { kIdentity = 1, kCamera = 2, kDomain = 3, kSample = 4 };

struct IdentityLatent {
  std::vector<Color> blocks;  // grid_rows * grid_cols
};

IdentityLatent make_identity(const SyntheticConfig& cfg, int person_id) {
  Rng rng = keyed_rng(cfg.seed, kIdentity, static_cast<std::uint64_t>(person_id), 0);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  IdentityLatent latent;
  latent.blocks.resize(static_cast<std::size_t>(cfg.grid_rows * cfg.grid_cols));
  for (auto& block : latent.blocks) block = {u(rng), u(rng), u(rng)};
  return latent;
}

Color camera_tint(const SyntheticConfig& cfg, int camera_id) {
  Rng rng = keyed_rng(cfg.seed, kCamera, static_cast<std::uint64_t>(camera_id), 0);
  std::uniform_real_distribution<double> u(-0.06, 0.06);
  return {u(rng), u(rng), u(rng)};
}

// Smooth per-channel field: offset + vertical and horizontal gradients.
struct DomainField {
  Color offset{};
  Color vertical{};
  Color horizontal{};
  double contrast = 1.0;
};

DomainField domain_field(const SyntheticConfig& cfg, Domain domain) {
  DomainField field;
  if (domain == Domain::Source || cfg.domain_shift == 0.0) return field;
  Rng rng = keyed_rng(cfg.seed, kDomain, 1, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int c = 0; c < 3; ++c) {
    field.offset[c] = 0.25 * cfg.domain_shift * u(rng);
    field.vertical[c] = 0.5 * cfg.domain_shift * u(rng);
    field.horizontal[c] = 0.5 * cfg.domain_shift * u(rng);
  }
  field.contrast = std::max(0.2, 1.0 - 0.5 * cfg.domain_shift);
  return field;
}

Image render(const SyntheticConfig& cfg, const IdentityLatent& latent, const Color& tint, const DomainField& field,
             Rng& rng) {
  const int h = cfg.image_size.height;
  const int w = cfg.image_size.width;
  const int max_dy = std::max(1, h / 16);
  const int max_dx = std::max(1, w / 16);
  std::uniform_int_distribution<int> jitter_y(-max_dy, max_dy);
  std::uniform_int_distribution<int> jitter_x(-max_dx, max_dx);
  std::uniform_real_distribution<double> brightness(0.85, 1.15);
  std::normal_distribution<double> noise(0.0, cfg.pixel_noise);

  const int dy = jitter_y(rng);
  const int dx = jitter_x(rng);
  const double gain = brightness(rng);

  Image img(h, w);
  for (int y = 0; y < h; ++y) {
    const int sy = std::clamp(y + dy, 0, h - 1);
    const int row = std::min(cfg.grid_rows - 1, sy * cfg.grid_rows / h);
    const double vy = static_cast<double>(y) / h - 0.5;
    for (int x = 0; x < w; ++x) {
      const int sx = std::clamp(x + dx, 0, w - 1);
      const int col = std::min(cfg.grid_cols - 1, sx * cfg.grid_cols / w);
      const Color& base = latent.blocks[static_cast<std::size_t>(row * cfg.grid_cols + col)];
      const double vx = static_cast<double>(x) / w - 0.5;
      for (int c = 0; c < 3; ++c) {
        double v = base[c] * gain + tint[c];
        v = 0.5 + (v - 0.5) * field.contrast + field.offset[c] + field.vertical[c] * vy + field.horizontal[c] * vx;
        v += noise(rng);
        img.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    }
  }
  return img;
}

Dataset render_domain(const SyntheticConfig& cfg, Domain domain, int first_pid) {
  const DomainField field = domain_field(cfg, domain);
  std::vector<SampleMeta> metas;
  std::vector<Image> imgs;
  metas.reserve(static_cast<std::size_t>(cfg.n_ids * cfg.per_id));
  imgs.reserve(metas.capacity());
  for (int id = 0; id < cfg.n_ids; ++id) {
    const int pid = first_pid + id;
    const IdentityLatent latent = make_identity(cfg, pid);
    for (int j = 0; j < cfg.per_id; ++j) {
      SampleMeta meta;
      meta.sample_id = metas.size();
      meta.person_id = pid;
      meta.camera_id = 1 + j % cfg.n_cameras;
      meta.domain = domain;
      Rng rng = keyed_rng(cfg.seed, kSample, static_cast<std::uint64_t>(pid), static_cast<std::uint64_t>(j));
      imgs.push_back(render(cfg, latent, camera_tint(cfg, meta.camera_id), field, rng));
      metas.push_back(std::move(meta));
    }
  }
  return Dataset(domain, std::move(metas), std::move(imgs));
}

}  // namespace

SyntheticDomains generate_synthetic_domains(const SyntheticConfig& config) {
  require(config.n_ids >= 2, ErrorKind::InvalidConfig, "n_ids must be >= 2");
  require(config.per_id >= 2, ErrorKind::InvalidConfig, "per_id must be >= 2");
  require(config.n_cameras >= 1, ErrorKind::InvalidConfig, "n_cameras must be >= 1");
  require(config.domain_shift >= 0.0, ErrorKind::InvalidConfig, "domain_shift must be >= 0");
  require(config.image_size.height > 0 && config.image_size.width > 0, ErrorKind::InvalidConfig,
          "image size must be positive");
  require(config.grid_rows >= 1 && config.grid_cols >= 1, ErrorKind::InvalidConfig, "grid must be non-empty");
  return {render_domain(config, Domain::Source, 0), render_domain(config, Domain::Target, config.n_ids)};
}

}  // namespace daml::data
