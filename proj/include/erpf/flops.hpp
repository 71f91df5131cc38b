#ifndef ERPF_FLOPS_HPP_
#define ERPF_FLOPS_HPP_

#include <cstdint>

// Arithmetic-cost instrumentation for the risk kernels. The accounting
// convention counts {+, -, *, /, exp, sqrt} as one FLOP each and charges every
// kernel its fixed formula cost regardless of branch, so the per-interaction
// figure stays constant for a fixed configuration. Comparisons, min/max and
// copies are free. Counters are thread-local; each simulation run owns its
// thread's counters.
namespace erpf::flops {

// Formula costs.
inline constexpr std::uint64_t kDistanceFlops = 6;        // 2 sub, 2 mul, 1 add, 1 sqrt
inline constexpr std::uint64_t kRpfFlops = 3;             // 2 div, 1 sub
inline constexpr std::uint64_t kValueTermFlops = 13;      // distance + phi + eta*alpha*scale*phi + accumulate
inline constexpr std::uint64_t kGradTermFlops = 19;       // distance + dphi + scaling + 2-vector direction + accumulate
inline constexpr std::uint64_t kEvolutionFlops = 7;       // z, sigmoid (exp, add, div), lambda scale, offset
inline constexpr std::uint64_t kEllipseBuildFlops = 25;   // ttc, semi-axes, erf, exp risk metric

struct Counters {
  bool enabled = false;
  std::uint64_t interactions = 0;       // (obstacle, horizon-step) value terms
  std::uint64_t interaction_flops = 0;  // charged by the field value kernel
  std::uint64_t gradient_flops = 0;     // charged by the field gradient kernel
  std::uint64_t overhead_flops = 0;     // per-tick history/evolution/ellipse setup
  std::uint64_t stage_evals = 0;        // horizon-stage passes (value or gradient)

  std::uint64_t total() const {
    return interaction_flops + gradient_flops + overhead_flops;
  }
  void reset() {
    interactions = 0;
    interaction_flops = 0;
    gradient_flops = 0;
    overhead_flops = 0;
    stage_evals = 0;
  }
};

inline Counters& local() {
  thread_local Counters counters;
  return counters;
}

inline void add_interaction() {
  auto& c = local();
  if (c.enabled) {
    ++c.interactions;
    c.interaction_flops += kValueTermFlops;
  }
}

inline void add_gradient_term() {
  auto& c = local();
  if (c.enabled) c.gradient_flops += kGradTermFlops;
}

inline void add_stage_eval() {
  auto& c = local();
  if (c.enabled) ++c.stage_evals;
}

inline void add_overhead(std::uint64_t n) {
  auto& c = local();
  if (c.enabled) c.overhead_flops += n;
}

}  // namespace erpf::flops

#endif  // ERPF_FLOPS_HPP_
