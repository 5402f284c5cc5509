#include "iafs/afs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <spdlog/spdlog.h>

#include "iafs/error.hpp"

namespace iafs {

void AfsConfig::validate() const {
  if (neighbors == 0) throw ConfigError("afs: K must be >= 1");
  if (kernel_size % 2 == 0) throw ConfigError("afs: kernel_size must be odd");
  if (!(sigma > 0.0)) throw ConfigError("afs: sigma must be > 0");
  if (!(adain_eps > 0.0)) throw ConfigError("afs: adain_eps must be > 0");
}

void ParticlePool::validate() const {
  if (particles.empty()) throw InvalidArgument("ParticlePool: empty");
  if (clean.size() != particles.size() || rewards.size() != particles.size()) {
    throw InvalidArgument("ParticlePool: particles/clean/rewards length mismatch");
  }
  for (std::size_t k = 0; k < particles.size(); ++k) {
    require_same_shape(particles[k].shape(), particles.front().shape(), "ParticlePool");
    require_same_shape(clean[k].shape(), particles.front().shape(), "ParticlePool clean");
    if (!std::isfinite(rewards[k])) throw InvalidArgument("ParticlePool: non-finite reward");
  }
}

std::size_t select_best(const std::vector<double>& rewards) {
  if (rewards.empty()) throw InvalidArgument("select_best: empty pool");
  std::size_t best = 0;
  for (std::size_t k = 1; k < rewards.size(); ++k) {
    if (rewards[k] > rewards[best]) best = k;
  }
  return best;
}

std::vector<double> similarity_weights(const std::vector<ImageTensor>& tensors,
                                       std::size_t chosen) {
  if (chosen >= tensors.size()) throw InvalidArgument("similarity_weights: chosen out of range");
  const double ref_norm = l2_norm(tensors[chosen]);
  std::vector<double> w(tensors.size(), 0.0);
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const double n = l2_norm(tensors[k]);
    if (n == 0.0 || ref_norm == 0.0) {
      spdlog::warn("similarity_weights: zero-norm particle {}, weight set to 0", k);
      continue;
    }
    w[k] = std::clamp(dot(tensors[k], tensors[chosen]) / (n * ref_norm), -1.0, 1.0);
  }
  if (ref_norm != 0.0) w[chosen] = 1.0;
  return w;
}

FrequencySplit split_bands(const ImageTensor& x, const AfsConfig& cfg) {
  if (cfg.split == SplitKind::dft_mask) {
    const double r =
        cfg.mask_radius > 0.0 ? cfg.mask_radius : default_cutoff_radius(x.height(), x.width());
    return mask_split(x, r);
  }
  return gaussian_split(x, cfg.kernel_size, cfg.sigma);
}

namespace {

std::atomic<bool> g_warned_clamp{false};

}  // namespace

LowFrequencyReference lowfreq_reference(const ParticlePool& pool, std::size_t chosen,
                                        const AfsConfig& cfg) {
  pool.validate();
  if (chosen >= pool.size()) throw InvalidArgument("lowfreq_reference: chosen out of range");
  LowFrequencyReference ref;
  const std::size_t n = pool.size();
  if (n == 1) {
    ref.low = split_bands(pool.particles[chosen], cfg).low;
    ref.fallback = true;
    return ref;
  }
  std::size_t k = cfg.neighbors;
  if (k > n - 1) {
    if (!g_warned_clamp.exchange(true)) {
      spdlog::warn("afs: K={} exceeds N-1={}, clamping", k, n - 1);
    }
    k = n - 1;
  }

  const auto& basis = cfg.similarity_on_clean ? pool.clean : pool.particles;
  const std::vector<double> sim = similarity_weights(basis, chosen);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != chosen) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
  order.resize(k);

  double total = 0.0;
  for (std::size_t i : order) {
    if (sim[i] > 0.0) {
      ref.neighbors.push_back(i);
      ref.weights.push_back(sim[i]);
      total += sim[i];
    }
  }
  if (ref.neighbors.empty()) {
    ref.low = split_bands(pool.particles[chosen], cfg).low;
    ref.fallback = true;
    return ref;
  }
  for (double& w : ref.weights) w /= total;
  ref.low = ImageTensor(pool.particles[chosen].shape(), 0.0);
  for (std::size_t j = 0; j < ref.neighbors.size(); ++j) {
    const ImageTensor low = split_bands(pool.particles[ref.neighbors[j]], cfg).low;
    const auto src = low.values();
    auto dst = ref.low.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += ref.weights[j] * src[i];
  }
  return ref;
}

AfsResult afs_refine(const ParticlePool& pool, const AfsConfig& cfg) {
  pool.validate();
  AfsResult result;
  result.chosen = select_best(pool.rewards);
  const ImageTensor& chosen = pool.particles[result.chosen];
  if (!cfg.enabled || pool.size() == 1) {
    result.refined = chosen;
    result.identity = true;
    return result;
  }
  result.reference = lowfreq_reference(pool, result.chosen, cfg);
  if (result.reference.fallback) {
    result.refined = chosen;
    result.identity = true;
    return result;
  }
  const FrequencySplit bands = split_bands(chosen, cfg);
  result.adapted_low = adain(bands.low, result.reference.low, cfg.adain_eps);
  const ImageTensor& adapted = result.adapted_low;
  result.refined = adapted + bands.high;

  const ChannelStats before = channel_stats(bands.low);
  const ChannelStats after = channel_stats(adapted);
  double shift = 0.0;
  double ratio = 0.0;
  for (std::size_t c = 0; c < before.mean.size(); ++c) {
    shift += std::abs(after.mean[c] - before.mean[c]);
    ratio += before.std[c] > 0.0 ? after.std[c] / before.std[c] : 1.0;
  }
  const double channels = static_cast<double>(before.mean.size());
  result.mean_shift = shift / channels;
  result.std_ratio = ratio / channels;
  return result;
}

}  // namespace iafs
