"""Factor-adjusted multiple testing of many series means.

Common factors make naive per-series t-statistics strongly dependent, so
false discovery control breaks down.  Adjusting the means with
diversified factor estimates restores weak dependence before the
Benjamini-Hochberg step.
"""
import numpy as np
from scipy.stats import norm

from divproj import SimConfig, bh_reject, farm_test, generate_panel, sieve_weights


def main(seed=5):
    cfg = SimConfig(n_series=200, n_periods=200, n_factors_true=2,
                    n_factors_working=3, alpha_strength=1.0, rho_T=0.0, seed=seed)
    sim = generate_panel(cfg)
    shift = np.zeros((200, 1))
    shift[:10] = 0.4  # ten series with genuinely nonzero means
    X = sim.panel.X + shift

    res = farm_test(X, sieve_weights(sim.z_chars, 3), q=0.1)
    hits = set(res.rejected.tolist())
    print("10 true signals in 200 series, BH at q = 0.1")
    print(f"factor-adjusted: {len(hits)} rejections, "
          f"{len(hits & set(range(10)))} true, {len(hits - set(range(10)))} false")

    # naive version: raw t-statistics on the unadjusted means
    t = X.shape[1]
    naive_z = np.sqrt(t) * X.mean(axis=1) / X.std(axis=1, ddof=1)
    naive_p = 2 * norm.sf(np.abs(naive_z))
    naive = set(bh_reject(naive_p, 0.1).tolist())
    print(f"unadjusted:      {len(naive)} rejections, "
          f"{len(naive & set(range(10)))} true, {len(naive - set(range(10)))} false")
    print("\nthe common factors fatten the unadjusted means' tails in lockstep,")
    print("so whole batches of nulls cross the BH threshold together")


if __name__ == "__main__":
    main()
