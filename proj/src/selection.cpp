#include "rshift/selection.hpp"

#include "rshift/error.hpp"
#include "rshift/rng.hpp"

namespace rshift {

SelectionTrace backward_select(const SpatialDataset& data, const std::vector<std::string>& candidates,
                               const SelectionConfig& config) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidParameter, "selection needs at least one covariate");
  if (!(config.alpha > 0.0 && config.alpha <= 1.0)) throw Error(ErrorCode::InvalidParameter, "alpha must lie in (0, 1]");
  for (const auto& c : candidates) (void)data.column_index(c);

  SelectionTrace trace;
  trace.alpha = config.alpha;
  std::vector<std::string> active = candidates;
  for (std::uint64_t round = 0; !active.empty(); ++round) {
    SelectionRound r;
    r.active = active;
    r.p_values.resize(active.size());
    r.degenerate.assign(active.size(), false);
    if (config.classical) {
      const auto rep = regress::classical_test(data, active, config.test.fit.lm);
      for (std::size_t j = 0; j < active.size(); ++j) r.p_values[j] = rep.p_values(static_cast<Eigen::Index>(j + 1));
    } else {
      for (std::size_t j = 0; j < active.size(); ++j) {
        std::vector<std::string> nuisance;
        for (std::size_t k = 0; k < active.size(); ++k)
          if (k != j) nuisance.push_back(active[k]);
        TestConfig tc = config.test;
        tc.plan.seed = SeededStream::derive(config.seed, {round, static_cast<std::uint64_t>(j)}).next_u64();
        const auto t = test_covariate(data, active[j], nuisance, tc);
        r.p_values[j] = t.p_value();
        r.degenerate[j] = t.degenerate;
      }
    }
    std::size_t arg = 0;
    for (std::size_t j = 1; j < active.size(); ++j)
      if (r.p_values[j] > r.p_values[arg]) arg = j;
    if (r.p_values[arg] > config.alpha) {
      r.removed = active[arg];
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(arg));
      trace.rounds.push_back(std::move(r));
    } else {
      trace.rounds.push_back(std::move(r));
      break;
    }
  }
  trace.final_set = active;
  return trace;
}

}  // namespace rshift
