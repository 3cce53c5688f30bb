"""A small end-to-end convergence experiment, from config to fitted slope.

Writes an experiment config to a temp directory, runs it through the same
entry point the CLI uses, prints the per-cell table, and refits the
log-log slope from the emitted CSV to show the round trip is lossless.
"""

import tempfile
from pathlib import Path

from sievesim import (
    emit_results,
    parse_config,
    parse_results_csv,
    run_experiment,
    slopes_from_cells,
)

CONFIG = """\
[experiment]
functional = nested_expectation
eta = square
kernel = laplace
d = 4
centers = 300
sizes = 250 500 1000 2000
m = 1
sigma = 1.0
replications = 20
master_seed = 314
theta_eval_points = 200000

[estimator sample_average]

[estimator inducing_krr]
schedule = experiment
selection = random
"""


def main():
    with tempfile.TemporaryDirectory() as tmp:
        config_path = Path(tmp) / "sweep.ini"
        config_path.write_text(CONFIG)
        config = parse_config(config_path)
        result = run_experiment(config)

        print(f"reference value: {result.theta.value:.6f}\n")
        print(f"{'estimator':>16s} {'n':>6s} {'mean |err|':>11s} {'std':>9s}")
        for cell in result.cells:
            print(f"{cell.estimator:>16s} {cell.n:>6d} "
                  f"{cell.mean_abs_error:>11.5f} {cell.std_abs_error:>9.5f}")

        print("\nfitted log-log slopes against the budget n*m:")
        for s in result.slopes:
            print(f"  {s.estimator:>16s}: {s.slope:+.3f} "
                  f"(stderr {s.slope_stderr:.3f})")

        csv_path = Path(tmp) / "sweep.csv"
        emit_results(result, fmt="csv", path=csv_path)
        refit = slopes_from_cells(parse_results_csv(csv_path))
        drift = max(abs(a.slope - b.slope)
                    for a, b in zip(refit, result.slopes))
        print(f"\nslopes refit from the CSV drift by {drift:.1e} "
              "(17-digit round trip)")

    print("\nThe sample average stalls once the inner-noise bias floor")
    print("dominates; the inducing fit keeps falling near budget^(-1/2).")


if __name__ == "__main__":
    main()
