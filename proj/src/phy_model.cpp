#include "sicsim/phy_model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace sicsim {

void validate(const LinkParams& link) {
  if (!(link.gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(link.sigma_v2 >= 0.0)) throw std::invalid_argument("sigma_v2 must be >= 0");
  if (!(link.eps_self >= 0.0)) throw std::invalid_argument("eps_self must be >= 0");
  if (!(link.eps_cross >= link.eps_self))
    throw std::invalid_argument("eps_cross must be >= eps_self");
  if (!(link.eps_cross < 1.0)) throw std::invalid_argument("eps_cross must be < 1");
  if (!(link.noise_power > 0.0)) throw std::invalid_argument("noise_power must be > 0");
}

ResidualPowers residual_powers(const LinkParams& link, bool self_cancellation) {
  const double eps = self_cancellation ? link.eps_self : link.eps_cross;
  ResidualPowers rp;
  rp.hw_residual = link.gamma * link.sigma_v2;
  rp.chanest_residual = link.gamma * eps * eps * (1.0 + link.sigma_v2);
  return rp;
}

namespace {

bool contains(const std::vector<int>& v, int x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

const LinkParams& link_of(const std::map<int, LinkParams>& links, int user) {
  auto it = links.find(user);
  if (it == links.end())
    throw std::invalid_argument("no LinkParams for user " + std::to_string(user));
  return it->second;
}

}  // namespace

double ssinr(const CancellationContext& ctx,
             const std::map<int, LinkParams>& links,
             const SsinrOptions& opts) {
  if (!contains(ctx.cancelled, ctx.target))
    throw std::invalid_argument("target must be among the cancelled packets");
  if (!contains(ctx.transmitters, ctx.target))
    throw std::invalid_argument("target must be among the transmitters");
  for (int k : ctx.cancelled) {
    if (!contains(ctx.transmitters, k))
      throw std::invalid_argument("cancelled packet " + std::to_string(k) +
                                  " is not a transmitter");
  }

  double denom = 0.0;
  for (int k : ctx.cancelled) {
    const LinkParams& lk = link_of(links, k);
    const ResidualPowers rp = residual_powers(lk, k == ctx.target);
    denom += rp.hw_residual + rp.chanest_residual + lk.noise_power;
  }
  for (int j : ctx.transmitters) {
    if (contains(ctx.cancelled, j)) continue;
    const LinkParams& lj = link_of(links, j);
    if (opts.residuals_over_all_transmitters) {
      const ResidualPowers rp = residual_powers(lj, false);
      denom += rp.hw_residual + rp.chanest_residual + lj.noise_power;
    }
    denom += lj.gamma;
  }
  if (denom <= 0.0)
    throw std::domain_error("ssinr denominator is zero (noise_power must be > 0)");
  return link_of(links, ctx.target).gamma / denom;
}

double homogeneous_chain_ssinr(int m, const LinkParams& link,
                               const SsinrOptions& opts) {
  if (m < 1) throw std::invalid_argument("chain position must be >= 1");
  CancellationContext ctx;
  std::map<int, LinkParams> links;
  for (int i = 0; i < m; ++i) {
    ctx.transmitters.push_back(i);
    ctx.cancelled.push_back(i);
    links[i] = link;
  }
  ctx.target = 0;
  return ssinr(ctx, links, opts);
}

}  // namespace sicsim
