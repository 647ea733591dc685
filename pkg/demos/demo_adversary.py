"""Why the fluctuation hypothesis is necessary, not just convenient.

An adaptive adversary watches the learner's selection probabilities and, at
every step, drops a loss of 4 v_{t-1} / eps on whichever expert the learner
currently favors.  The volume explodes geometrically, the scaled
fluctuation is pinned at 1/(1 + eps/4) >= 1 - eps forever, and the
normalized expected regret never falls below (1 - eps)/2 -- no schedule can
save a learner once the fluctuation stops vanishing.

Run:  python3 demos/demo_adversary.py
"""

import numpy as np

from volfpl import (
    AdversaryConfig,
    GammaSchedule,
    ScheduleParams,
    choose_a,
    prop1_run,
    prot_probability_callback,
)


def main():
    for eps in (0.25, 0.5, 0.9):
        config = AdversaryConfig(eps=eps, v0=1.0, horizon=30)
        params = ScheduleParams(a=choose_a(1.0), num_experts=2,
                                gamma=GammaSchedule.constant(0.999), v0=1.0)
        trace = prop1_run(prot_probability_callback(params), config)
        print(f"eps = {eps}")
        print(f"  fluctuation, every step:   {trace.fluc[0]:.6f} "
              f"(theory 1/(1+eps/4) = {1 / (1 + eps / 4):.6f})")
        print(f"  volume after 30 steps:     {trace.v[-1]:.3e}")
        print(f"  normalized regret minimum: {np.min(trace.norm_regret_lb):.4f} "
              f">= (1-eps)/2 = {(1 - eps) / 2:.4f}")
        print()


if __name__ == "__main__":
    main()
