// SPDX-License-Identifier: Apache-2.0
//
// Wideband antenna-domain channel synthesis and the ULA manifold.

#ifndef LECLN_CHANNEL_HPP
#define LECLN_CHANNEL_HPP

#include <vector>

#include "lecln/types.hpp"

namespace lecln {

struct WidebandChannel {
  CMat H;  // n_t x n_s
  std::vector<ChannelPath> paths;
};

// Unit-norm steering vector, element i: exp(-j*(i-1)*psi)/sqrt(n_t).
CVec array_response(double psi, int n_t);

// h_m = sum_l alpha_l * exp(j*(phi_l - 2*pi*(m/n_s)*tau_l)) * a(theta_l),
// m is 1-based.
CVec subcarrier_channel(const std::vector<ChannelPath>& paths, int m, int n_s, int n_t);

WidebandChannel assemble_wideband(const std::vector<ChannelPath>& paths, const SystemConfig& cfg);

// Channel restricted to the given (1-based) subcarrier indices, n_t x |idx|.
CMat channel_at_subcarriers(const WidebandChannel& ch, const std::vector<int>& idx);

}  // namespace lecln

#endif  // LECLN_CHANNEL_HPP
