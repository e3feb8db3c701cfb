// SPDX-License-Identifier: Apache-2.0

#include "lecln/model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "lecln/io/tensor_file.hpp"

namespace lecln {

namespace {

int conv_out(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

}  // namespace

void ModelDims::validate() const {
  if (d <= 0 || n_p <= 0 || n_t <= 0 || k_p <= 0 || n_s <= 0 || feat <= 0 ||
      crop_h <= 0 || crop_w <= 0 || afwc_hidden <= 0 || mlp_hidden <= 0)
    throw std::invalid_argument("ModelDims: all dimensions must be positive");
  if (pcf_flat() <= 0 || lcf_flat() <= 0)
    throw std::invalid_argument("ModelDims: conv stack collapses the spatial extent");
}

int ModelDims::pcf_flat() const {
  const int h = conv_out(d, 3, 2, 1);
  const int w = conv_out(k_p, 3, 2, 1);
  return 32 * h * w;
}

int ModelDims::lcf_flat() const {
  int h = crop_h, w = crop_w;
  for (int i = 0; i < 4; ++i) {
    h = conv_out(h, 3, 2, 1);
    w = conv_out(w, 3, 2, 1);
  }
  return 32 * h * w;
}

nn::Tensor& ParamStore::add(const std::string& name, std::vector<int> dims, Rng& rng) {
  if (params_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
  nn::Tensor t = nn::Tensor::zeros(dims);
  if (dims.size() >= 2) {
    long long fan_in, fan_out;
    if (dims.size() == 4) {
      fan_in = static_cast<long long>(dims[1]) * dims[2] * dims[3];
      fan_out = static_cast<long long>(dims[0]) * dims[2] * dims[3];
    } else {
      fan_in = dims[1];
      fan_out = dims[0];
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index i = 0; i < t.v.size(); ++i) t.v(i) = u(rng);
  }
  grads_[name] = nn::Tensor::zeros(dims);
  adam_[name] = nn::AdamState{};
  return params_[name] = std::move(t);
}

nn::Tensor& ParamStore::value(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("ParamStore: unknown name " + name);
  return it->second;
}

const nn::Tensor& ParamStore::value(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("ParamStore: unknown name " + name);
  return it->second;
}

nn::Tensor& ParamStore::grad(const std::string& name) {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw std::out_of_range("ParamStore: unknown name " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, g] : grads_) g.v.setZero();
}

void ParamStore::scale_grads(double s) {
  for (auto& [name, g] : grads_) g.v *= s;
}

void ParamStore::adam_update(int t, double lr, const nn::TrainConfig& cfg) {
  for (auto& [name, p] : params_)
    nn::adam_step(p.v, grads_.at(name).v, adam_.at(name), t, lr, cfg.beta1, cfg.beta2,
                  cfg.adam_eps);
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += static_cast<std::size_t>(p.v.size());
  return n;
}

void ParamStore::save(const std::string& dir, int epoch, const std::string& config_hash) const {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["epoch"] = epoch;
  manifest["config_hash"] = config_hash;
  nlohmann::json layers = nlohmann::json::object();
  for (const auto& [name, p] : params_) {
    std::vector<std::uint32_t> dims(p.dims.begin(), p.dims.end());
    std::vector<double> values(p.v.data(), p.v.data() + p.v.size());
    io::write_real(dir + "/" + name + ".ten", dims, values);
    layers[name] = p.dims;
  }
  manifest["layers"] = layers;
  std::ofstream os(dir + "/manifest.json");
  if (!os) throw std::runtime_error("checkpoint: cannot write manifest in " + dir);
  os << manifest.dump(2) << "\n";
}

int ParamStore::load(const std::string& dir, const std::string& config_hash) {
  std::ifstream is(dir + "/manifest.json");
  if (!is) throw std::runtime_error("checkpoint: missing manifest in " + dir);
  nlohmann::json manifest = nlohmann::json::parse(is);
  if (!config_hash.empty()) {
    const std::string saved = manifest.value("config_hash", "");
    if (!saved.empty() && saved != config_hash)
      throw std::runtime_error("checkpoint: config hash mismatch in " + dir);
  }
  for (auto& [name, p] : params_) {
    std::vector<std::uint32_t> dims;
    const std::vector<double> values = io::read_real(dir + "/" + name + ".ten", &dims);
    if (dims.size() != p.dims.size() ||
        !std::equal(dims.begin(), dims.end(), p.dims.begin(),
                    [](std::uint32_t a, int b) { return static_cast<int>(a) == b; }))
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    p.v = Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  return manifest.value("epoch", 0);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "lecln";
    case Variant::UniPilot: return "lecln_uni_pilot";
    case Variant::LidarOnly: return "lecln_lidar_only";
    case Variant::NoAfwc: return "lecln_no_afwc";
  }
  throw std::invalid_argument("variant_name: unknown variant");
}

StageAModel::StageAModel(const ModelDims& dims, Variant variant, std::uint64_t init_seed)
    : dims_(dims), variant_(variant) {
  dims_.validate();
  Rng rng(init_seed);
  params_.add("pcf.conv1.k", {16, 2, 3, 3}, rng);
  params_.add("pcf.conv1.b", {16}, rng);
  params_.add("pcf.conv2.k", {32, 16, 3, 3}, rng);
  params_.add("pcf.conv2.b", {32}, rng);
  params_.add("pcf.fc.w", {dims_.feat, dims_.pcf_flat()}, rng);
  params_.add("pcf.fc.b", {dims_.feat}, rng);
  const int lcf_ch[6] = {3, 8, 16, 32, 32, 32};
  for (int l = 1; l <= 5; ++l) {
    params_.add("lcf.conv" + std::to_string(l) + ".k", {lcf_ch[l], lcf_ch[l - 1], 3, 3}, rng);
    params_.add("lcf.conv" + std::to_string(l) + ".b", {lcf_ch[l]}, rng);
  }
  params_.add("lcf.fc.w", {dims_.feat, dims_.lcf_flat()}, rng);
  params_.add("lcf.fc.b", {dims_.feat}, rng);
  params_.add("afwc.fc1.w", {dims_.afwc_hidden, 2 * dims_.feat}, rng);
  params_.add("afwc.fc1.b", {dims_.afwc_hidden}, rng);
  params_.add("afwc.fc2.w", {dims_.afwc_hidden, dims_.afwc_hidden}, rng);
  params_.add("afwc.fc2.b", {dims_.afwc_hidden}, rng);
  params_.add("afwc.fc3.w", {2 * dims_.feat, dims_.afwc_hidden}, rng);
  params_.add("afwc.fc3.b", {2 * dims_.feat}, rng);
  params_.add("mlp.fc1.w", {dims_.mlp_hidden, 2 * dims_.feat}, rng);
  params_.add("mlp.fc1.b", {dims_.mlp_hidden}, rng);
  params_.add("mlp.fc2.w", {2 * dims_.d * dims_.k_p, dims_.mlp_hidden}, rng);
  params_.add("mlp.fc2.b", {2 * dims_.d * dims_.k_p}, rng);
}

StageAOutput StageAModel::forward(nn::Tape& tape, const nn::Tensor& pilot,
                                  const nn::Tensor& crop) {
  if (pilot.dims != std::vector<int>{2, dims_.d, dims_.k_p})
    throw std::invalid_argument("StageAModel: pilot tensor shape");
  if (crop.dims != std::vector<int>{3, dims_.crop_h, dims_.crop_w})
    throw std::invalid_argument("StageAModel: crop tensor shape");
  auto p = [&](const std::string& name) {
    return tape.param(&params_.value(name), &params_.grad(name));
  };

  int x = tape.input(pilot);
  x = tape.relu(tape.conv2d(x, p("pcf.conv1.k"), p("pcf.conv1.b"), 1, 1));
  x = tape.relu(tape.conv2d(x, p("pcf.conv2.k"), p("pcf.conv2.b"), 2, 1));
  int q_p = tape.affine(x, p("pcf.fc.w"), p("pcf.fc.b"));

  int y = tape.input(crop);
  y = tape.relu(tape.conv2d(y, p("lcf.conv1.k"), p("lcf.conv1.b"), 1, 1));
  for (int l = 2; l <= 5; ++l)
    y = tape.relu(tape.conv2d(y, p("lcf.conv" + std::to_string(l) + ".k"),
                              p("lcf.conv" + std::to_string(l) + ".b"), 2, 1));
  int q_l = tape.affine(y, p("lcf.fc.w"), p("lcf.fc.b"));

  if (variant_ == Variant::LidarOnly) q_p = tape.scale(q_p, 0.0);
  if (variant_ == Variant::UniPilot) q_l = tape.scale(q_l, 0.0);
  const int q = tape.concat(q_p, q_l);

  StageAOutput out;
  int q_w = q;
  if (variant_ == Variant::NoAfwc) {
    out.pilot_weight_mean = 1.0;
  } else {
    int w = tape.relu(tape.affine(q, p("afwc.fc1.w"), p("afwc.fc1.b")));
    w = tape.relu(tape.affine(w, p("afwc.fc2.w"), p("afwc.fc2.b")));
    w = tape.sigmoid(tape.affine(w, p("afwc.fc3.w"), p("afwc.fc3.b")));
    out.weight = w;
    out.pilot_weight_mean = tape.value(w).v.head(dims_.feat).mean();
    q_w = tape.mul(q, w);
  }
  int z = tape.relu(tape.affine(q_w, p("mlp.fc1.w"), p("mlp.fc1.b")));
  out.out = tape.affine(z, p("mlp.fc2.w"), p("mlp.fc2.b"));
  return out;
}

CMat StageAModel::estimate(const nn::Tensor& pilot, const nn::Tensor& crop,
                           double* pilot_weight_mean) {
  nn::Tape tape;
  const StageAOutput o = forward(tape, pilot, crop);
  if (pilot_weight_mean) *pilot_weight_mean = o.pilot_weight_mean;
  return planes_to_complex(tape.value(o.out).v, dims_.d, dims_.k_p);
}

CiCnnModel::CiCnnModel(const ModelDims& dims, std::uint64_t init_seed) : dims_(dims) {
  dims_.validate();
  Rng rng(init_seed);
  const int ch[7] = {3, 16, 32, 64, 32, 16, 2};
  for (int l = 1; l <= 6; ++l) {
    params_.add("ci.conv" + std::to_string(l) + ".k", {ch[l], ch[l - 1], 3, 3}, rng);
    params_.add("ci.conv" + std::to_string(l) + ".b", {ch[l]}, rng);
  }
}

int CiCnnModel::forward(nn::Tape& tape, const nn::Tensor& input) {
  if (input.dims != std::vector<int>{3, dims_.n_t, dims_.n_s})
    throw std::invalid_argument("CiCnnModel: input tensor shape");
  auto p = [&](const std::string& name) {
    return tape.param(&params_.value(name), &params_.grad(name));
  };
  int x = tape.input(input);
  for (int l = 1; l <= 5; ++l)
    x = tape.relu(tape.conv2d(x, p("ci.conv" + std::to_string(l) + ".k"),
                              p("ci.conv" + std::to_string(l) + ".b"), 1, 1));
  return tape.conv2d(x, p("ci.conv6.k"), p("ci.conv6.b"), 1, 1);
}

CMat CiCnnModel::estimate(const CMat& v_r) {
  nn::Tape tape;
  const int out = forward(tape, ci_input(v_r));
  return planes_to_complex(tape.value(out).v, dims_.n_t, dims_.n_s);
}

CMat zero_pad(const CMat& h_p_hat, const std::vector<int>& v_k, int n_s) {
  if (static_cast<int>(v_k.size()) != h_p_hat.cols())
    throw std::invalid_argument("zero_pad: pilot index count != pilot columns");
  CMat out = CMat::Zero(h_p_hat.rows(), n_s);
  for (std::size_t i = 0; i < v_k.size(); ++i) {
    const int m = v_k[i];
    if (m < 1 || m > n_s) throw std::out_of_range("zero_pad: pilot index out of range");
    out.col(m - 1) = h_p_hat.col(static_cast<Eigen::Index>(i));
  }
  return out;
}

nn::Tensor ci_input(const CMat& v_r) {
  const int h = static_cast<int>(v_r.rows()), w = static_cast<int>(v_r.cols());
  nn::Tensor t = nn::Tensor::zeros({3, h, w});
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const cplx z = v_r(r, c);
      t.v(0 * h * w + r * w + c) = z.real();
      t.v(1 * h * w + r * w + c) = z.imag();
      t.v(2 * h * w + r * w + c) =
          (z.real() == 0.0 && z.imag() == 0.0) ? 0.0 : std::atan2(z.imag(), z.real());
    }
  return t;
}

Vec complex_to_planes(const CMat& m) {
  const Eigen::Index n = m.size();
  Vec v(2 * n);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) v(k++) = m(r, c).real();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) v(k++) = m(r, c).imag();
  return v;
}

CMat planes_to_complex(const Vec& v, int rows, int cols) {
  if (v.size() != 2ll * rows * cols) throw std::invalid_argument("planes_to_complex: size");
  CMat m(rows, cols);
  const Eigen::Index n = static_cast<Eigen::Index>(rows) * cols;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const Eigen::Index i = static_cast<Eigen::Index>(r) * cols + c;
      m(r, c) = cplx(v(i), v(n + i));
    }
  return m;
}

namespace {

// Shared batching/optimizer loop; Step runs one sample graph and returns its loss.
template <typename Step, typename ValLoss>
TrainLog run_training(ParamStore& params, int n_train, const Step& step, const ValLoss& val_loss,
                      const nn::TrainConfig& cfg, std::uint64_t seed, const std::string& loss_csv,
                      const EpochCallback& on_epoch) {
  nn::tune_allocator();
  cfg.validate();
  if (n_train == 0) throw std::invalid_argument("training: empty dataset");
  std::ofstream csv;
  if (!loss_csv.empty()) {
    csv.open(loss_csv);
    if (!csv) throw std::runtime_error("training: cannot open loss log " + loss_csv);
    csv << "epoch,lr,train_loss,val_loss\n";
  }
  TrainLog log;
  std::vector<int> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);
  int t = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = nn::lr_at(epoch, cfg);
    Rng rng(seed ^ (0x5851f42d4c957f2dULL + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int n_b = std::min(cfg.batch_size, n_train - start);
      params.zero_grads();
      double batch_loss = 0.0;
      for (int i = 0; i < n_b; ++i) batch_loss += step(order[static_cast<std::size_t>(start + i)]);
      params.scale_grads(1.0 / n_b);
      params.adam_update(++t, lr, cfg);
      epoch_loss += batch_loss;
    }
    epoch_loss /= n_train;
    if (!std::isfinite(epoch_loss)) throw std::runtime_error("training diverged");
    const double v = val_loss();
    log.train_loss.push_back(epoch_loss);
    log.val_loss.push_back(v);
    log.lr.push_back(lr);
    if (csv.is_open()) csv << epoch << "," << lr << "," << epoch_loss << "," << v << "\n";
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return log;
}

}  // namespace

TrainLog train_stage_a(StageAModel& model, const std::vector<StageASample>& train,
                       const std::vector<StageASample>& val, const nn::TrainConfig& cfg,
                       std::uint64_t seed, const std::string& loss_csv,
                       const EpochCallback& on_epoch) {
  auto step = [&](int i) {
    const StageASample& s = train[static_cast<std::size_t>(i)];
    nn::Tape tape;
    const StageAOutput o = model.forward(tape, s.pilot, s.crop);
    const int mse = tape.mse(o.out, nn::Tensor({static_cast<int>(s.target.size())}, s.target));
    const int loss = tape.scale(mse, s.weight);
    tape.backward(loss);
    return tape.value(loss).v(0);
  };
  auto val_loss = [&] {
    if (val.empty()) return 0.0;
    double total = 0.0;
    for (const StageASample& s : val) {
      nn::Tape tape;
      const StageAOutput o = model.forward(tape, s.pilot, s.crop);
      total += s.weight * (tape.value(o.out).v - s.target).squaredNorm() / s.target.size();
    }
    return total / static_cast<double>(val.size());
  };
  return run_training(model.params(), static_cast<int>(train.size()), step, val_loss, cfg, seed,
                      loss_csv, on_epoch);
}

TrainLog train_stage_b(CiCnnModel& model, const std::vector<StageBSample>& train,
                       const std::vector<StageBSample>& val, const nn::TrainConfig& cfg,
                       std::uint64_t seed, const std::string& loss_csv,
                       const EpochCallback& on_epoch) {
  auto step = [&](int i) {
    const StageBSample& s = train[static_cast<std::size_t>(i)];
    nn::Tape tape;
    const int out = model.forward(tape, s.input);
    const int loss = tape.mse(out, nn::Tensor({static_cast<int>(s.target.size())}, s.target));
    tape.backward(loss);
    return tape.value(loss).v(0);
  };
  auto val_loss = [&] {
    if (val.empty()) return 0.0;
    double total = 0.0;
    for (const StageBSample& s : val) {
      nn::Tape tape;
      const int out = model.forward(tape, s.input);
      total += (tape.value(out).v - s.target).squaredNorm() / s.target.size();
    }
    return total / static_cast<double>(val.size());
  };
  return run_training(model.params(), static_cast<int>(train.size()), step, val_loss, cfg, seed,
                      loss_csv, on_epoch);
}

}  // namespace lecln
