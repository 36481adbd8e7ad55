#pragma once

#include "stego/adam.hpp"
#include "stego/checkpoint.hpp"
#include "stego/loss.hpp"
#include "stego/metrics.hpp"
#include "stego/recovery.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

namespace stego {

struct TrainConfig {
  Index iterations = 5000;
  Index batch_size = 2;
  Index image_size = 64;
  uint64_t seed = 1;
  Index eval_interval = 500;
  double lr = 1e-4;
  std::string checkpoint_path;  // written after the last iteration when set
  std::string metrics_csv;      // eval rows appended when set
  bool verbose = true;
};

struct MetricsRow {
  long iter = 0;
  double acc = 0.0;
  double psnr_db = 0.0;
  double ssim_v = 0.0;
  double ms_per_image = 0.0;
};

inline void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "iter,acc,psnr,ssim,ms_per_image\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%ld,%.6g,%.6g,%.6g,%.6g\n", r.iter, r.acc, r.psnr_db,
                  r.ssim_v, r.ms_per_image);
    out << line;
  }
}

inline double bit_accuracy(const BitMessage& truth, const BitMessage& decoded) {
  if (truth.size() != decoded.size() || truth.empty())
    throw DimensionError("bit_accuracy: length mismatch");
  size_t ok = 0;
  for (size_t i = 0; i < truth.size(); ++i) ok += truth[i] == decoded[i];
  return static_cast<double>(ok) / static_cast<double>(truth.size());
}

template <typename S>
Tensor<S> batch_tensor(const std::vector<std::vector<S>>& planar, const std::vector<size_t>& idx,
                       Index h, Index w) {
  const Index b = static_cast<Index>(idx.size());
  ArrX<S> data(b * 3 * h * w);
  for (Index i = 0; i < b; ++i) {
    const auto& img = planar[idx[static_cast<size_t>(i)]];
    std::copy(img.begin(), img.end(), data.data() + i * 3 * h * w);
  }
  return Tensor<S>::from_array({b, 3, h, w}, std::move(data));
}

template <typename S>
std::vector<std::vector<S>> to_planar_cache(const std::vector<ImageU8>& images) {
  std::vector<std::vector<S>> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(image_to_planar<S>(img));
  return out;
}

/// Frozen-weights evaluation: fresh random message per image, accuracy from
/// the float-path recovery, PSNR/SSIM on 8-bit quantized images. Returns one
/// row per image (iter column = image index).
template <typename S>
std::vector<MetricsRow> evaluate(const ConcealmentNet<S>& enc, const RecoveryNet<S>& dec,
                                 const std::vector<ImageU8>& images, uint64_t seed) {
  NoGradGuard no_grad;
  const ModelConfig& cfg = enc.config();
  const LayoutConfig lc = cfg.layout();
  Rng msg_rng(seed);
  std::vector<MetricsRow> rows;
  rows.reserve(images.size());
  for (size_t i = 0; i < images.size(); ++i) {
    const std::vector<S> planar = image_to_planar<S>(images[i]);
    ArrX<S> data(static_cast<Index>(planar.size()));
    std::copy(planar.begin(), planar.end(), data.data());
    Tensor<S> cover = Tensor<S>::from_array({1, 3, cfg.h, cfg.w}, std::move(data));
    const BitMessage bits = random_bits(msg_rng, lc.total_bits());

    const auto t0 = std::chrono::steady_clock::now();
    auto [res, stego] = enc.conceal(cover, {bits});
    auto decoded = dec.recover(stego);
    const auto t1 = std::chrono::steady_clock::now();

    MetricsRow row;
    row.iter = static_cast<long>(i);
    row.acc = bit_accuracy(bits, decoded[0].bits);
    const ImageU8 stego8 = planar_to_image(stego.data(), cfg.h, cfg.w);
    row.psnr_db = capped_psnr(psnr(images[i], stego8));
    row.ssim_v = ssim(images[i], stego8);
    row.ms_per_image =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 - t0).count();
    rows.push_back(row);
  }
  return rows;
}

inline MetricsRow aggregate(const std::vector<MetricsRow>& rows, long iter) {
  MetricsRow mean;
  mean.iter = iter;
  for (const auto& r : rows) {
    mean.acc += r.acc;
    mean.psnr_db += r.psnr_db;
    mean.ssim_v += r.ssim_v;
    mean.ms_per_image += r.ms_per_image;
  }
  const double n = static_cast<double>(rows.size());
  mean.acc /= n;
  mean.psnr_db /= n;
  mean.ssim_v /= n;
  mean.ms_per_image /= n;
  return mean;
}

struct TrainResult {
  std::vector<MetricsRow> eval_rows;  // one aggregate row per eval point
  std::vector<double> loss_curve;
};

/// Training loop: per iteration, sample a batch and fresh uniform messages,
/// run conceal -> recover, apply the combined loss and one Adam step.
/// Bitwise deterministic for a fixed seed. A non-finite loss aborts with a
/// diagnostic of the iteration state.
template <typename S>
TrainResult train(ConcealmentNet<S>& enc, RecoveryNet<S>& dec, ParamStore<S>& store,
                  const std::vector<ImageU8>& train_images,
                  const std::vector<ImageU8>& eval_images, const TrainConfig& tc,
                  const LossConfig& loss_cfg) {
  if (train_images.empty()) throw DataError("train: empty dataset");
  const ModelConfig& cfg = enc.config();
  const LayoutConfig lc = cfg.layout();
  cfg.validate();

  AdamState<S> adam;
  adam.lr = static_cast<S>(tc.lr);
  Rng data_rng(tc.seed);
  Rng msg_rng(tc.seed + 0x9E3779B97F4A7C15ull);

  const auto planar = to_planar_cache<S>(train_images);
  TrainResult result;
  result.loss_curve.reserve(static_cast<size_t>(tc.iterations));

  for (Index iter = 1; iter <= tc.iterations; ++iter) {
    std::vector<size_t> idx(static_cast<size_t>(tc.batch_size));
    for (auto& v : idx) v = static_cast<size_t>(data_rng.uniform_int(train_images.size()));
    Tensor<S> cover = batch_tensor(planar, idx, cfg.h, cfg.w);
    std::vector<BitMessage> msgs;
    msgs.reserve(idx.size());
    for (size_t b = 0; b < idx.size(); ++b) msgs.push_back(random_bits(msg_rng, lc.total_bits()));

    auto [res, stego] = enc.conceal(cover, msgs);
    Tensor<S> raw = dec.predict_raw(stego);
    Tensor<S> target = enc.messages_to_tensor(2, msgs);
    LossBreakdown<S> loss = total_loss(cover, stego, target, raw, loss_cfg, cfg.n_r);

    const double lv = static_cast<double>(loss.total.scalar());
    if (!std::isfinite(lv)) {
      std::ostringstream os;
      os << "train: non-finite loss at iteration " << iter << " (image_mse=" << loss.image_mse
         << ", message=" << loss.message << ", perceptual=" << loss.perceptual << ", batch=[";
      for (size_t b = 0; b < idx.size(); ++b) os << (b ? "," : "") << idx[b];
      os << "])";
      throw NumericError(os.str());
    }
    result.loss_curve.push_back(lv);

    store.zero_grads();
    loss.total.backward();
    adam_step(store, adam);

    const bool eval_now =
        (!eval_images.empty() && tc.eval_interval > 0 && iter % tc.eval_interval == 0) ||
        (!eval_images.empty() && iter == tc.iterations);
    if (eval_now) {
      auto rows = evaluate(enc, dec, eval_images, tc.seed ^ 0xE7A1u ^ static_cast<uint64_t>(iter));
      MetricsRow mean = aggregate(rows, static_cast<long>(iter));
      result.eval_rows.push_back(mean);
      if (tc.verbose)
        std::cout << "iter " << iter << "  loss " << lv << "  acc " << mean.acc << "  psnr "
                  << mean.psnr_db << "  ssim " << mean.ssim_v << std::endl;
    } else if (tc.verbose && iter % 100 == 0) {
      std::cout << "iter " << iter << "  loss " << lv << std::endl;
    }
  }

  if (!tc.metrics_csv.empty()) write_metrics_csv(result.eval_rows, tc.metrics_csv);
  if (!tc.checkpoint_path.empty())
    if constexpr (std::is_same_v<S, float>) save_params(store, tc.checkpoint_path);
  return result;
}

}  // namespace stego
