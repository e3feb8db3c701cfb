// SPDX-License-Identifier: Apache-2.0

#include "lecln/channel.hpp"

#include <cmath>

namespace lecln {

CVec array_response(double psi, int n_t) {
  if (!std::isfinite(psi)) throw std::invalid_argument("array_response: non-finite steering value");
  CVec a(n_t);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_t));
  for (int i = 0; i < n_t; ++i) a(i) = std::polar(scale, -psi * i);
  return a;
}

CVec subcarrier_channel(const std::vector<ChannelPath>& paths, int m, int n_s, int n_t) {
  if (paths.empty()) throw std::runtime_error("no propagation path");
  CVec h = CVec::Zero(n_t);
  for (const ChannelPath& p : paths) {
    const cplx gain = p.alpha * std::polar(1.0, p.phi - 2.0 * kPi * (static_cast<double>(m) / n_s) * p.tau);
    h += gain * array_response(p.theta, n_t);
  }
  return h;
}

WidebandChannel assemble_wideband(const std::vector<ChannelPath>& paths, const SystemConfig& cfg) {
  WidebandChannel ch;
  ch.paths = paths;
  ch.H.resize(cfg.n_t, cfg.n_s);
  for (int m = 1; m <= cfg.n_s; ++m) ch.H.col(m - 1) = subcarrier_channel(paths, m, cfg.n_s, cfg.n_t);
  return ch;
}

CMat channel_at_subcarriers(const WidebandChannel& ch, const std::vector<int>& idx) {
  CMat out(ch.H.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 1 || idx[i] > ch.H.cols()) throw std::out_of_range("channel_at_subcarriers: index");
    out.col(static_cast<Eigen::Index>(i)) = ch.H.col(idx[i] - 1);
  }
  return out;
}

}  // namespace lecln
