"""Desk-scale runs of the four Monte Carlo studies.

Each study has a command-line twin (``divproj simulate --experiment ...``)
that writes result CSVs, plot data and a reproducibility manifest; this
script runs trimmed-down versions in-process and prints the headline
numbers.  Replications use counter-based RNG substreams, so re-running
any of these with the same seed gives identical numbers regardless of
the thread count.
"""
from divproj.experiments import (
    experiment_cov,
    experiment_forecast,
    experiment_postsel,
    experiment_spectest,
)


def main(seed=0):
    print("1) covariance estimation error vs dimension (5 reps per cell)")
    rows = experiment_cov(sizes=(100, 200), alphas=(1.0,), rho_Ts=(0.7,),
                          n_reps=5, seed=seed, C_values=(2.0,))
    for r in rows:
        if r["method"] in ("dp_R1", "pc", "known_factor"):
            print(f"   N=T={r['N']:>3} {r['method']:<13} ||S-S0|| = {r['err_cov_mean']:.3f}")

    print("\n2) forecast MSE relative to PC, strong serial correlation (5 reps)")
    rows = experiment_forecast(window_sizes=(100,), rho_Ts=(0.9,), alphas=(1.0,),
                               n_reps=5, seed=seed, extra_factors=(0,))
    for r in rows:
        print(f"   {r['method']:<20} {r['mse_ratio_mean']:.3f}")

    print("\n3) post-selection z-statistics (40 reps)")
    _, rows = experiment_postsel(r_values=(2,), working_factors=(2,),
                                 n_reps=40, seed=seed)
    for r in rows:
        print(f"   r=2 {r['method']:<7} mean z {r['mean_z']:+.2f}  std {r['std_z']:.2f}  "
              f"coverage {r['coverage']:.2f}")

    print("\n4) specification test size and power (200 reps)")
    rows = experiment_spectest(gammas=(0.0, 0.2), T_values=(100,),
                               schemes=("characteristic",), n_reps=200, seed=seed)
    for r in rows:
        label = "size " if r["gamma"] == 0 else "power"
        print(f"   gamma={r['gamma']}: {label} {r['rejection_rate']:.3f}")


if __name__ == "__main__":
    main()
