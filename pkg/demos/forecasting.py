"""Out-of-sample forecasting with estimated factors.

Compares rolling one-step-ahead forecasts that re-estimate factors by
diversified projection against the principal-components benchmark.  The
advantage appears under strong serial correlation in the idiosyncratic
noise, where eigenvector-based factor estimates deteriorate but the
cross-sectional projections do not.
"""
from divproj.experiments import experiment_forecast


def main(seed=3):
    print("rolling forecasts, N=100, window T=100, m=50 steps, 10 repetitions")
    print("relative out-of-sample MSE vs the PC benchmark (lower is better)\n")
    for rho in (0.0, 0.9):
        rows = experiment_forecast(window_sizes=(100,), rho_Ts=(rho,), alphas=(1.0,),
                                   n_reps=10, seed=seed, extra_factors=(0, 1),
                                   threads=1)
        print(f"serial correlation rho_T = {rho}:")
        for r in rows:
            print(f"  {r['method']:<20} {r['mse_ratio_mean']:.3f} "
                  f"(+- {r['mse_ratio_se']:.3f})")
        print()
    print("with rho_T = 0.9 the noise variance swamps the factor eigenvalues,")
    print("so PC forecasts degrade while the projection-based ones hold up")


if __name__ == "__main__":
    main()
