import marimo

__generated_with = "0.10.12"
app = marimo.App(width="medium")


@app.cell
def _(mo):
    mo.md(
        r"""
        # pathhjb

        Value functions of path-dependent HJB equations under drift and volatility
        uncertainty, computed on scenario trees and lattices, plus the experiments that
        check stability in the coefficients and Lipschitz regularity in the path.

        Configs live in `configs/`, runs are written to `runs/<config_hash>/`.
        """
    )
    return


@app.cell(hide_code=True)
def _():
    import marimo as mo
    import halo
    from pathhjb.coefficients import load_family, load_sequence
    from pathhjb.lab import CompactTestSet, run_stability
    from pathhjb.paths import SampledPath, TimedPath
    from pathhjb.solver import SolverConfig, StateGrid, solve

    halo.hello()
    return (
        CompactTestSet,
        SampledPath,
        SolverConfig,
        StateGrid,
        TimedPath,
        halo,
        load_family,
        load_sequence,
        mo,
        run_stability,
        solve,
    )


@app.cell
def _(mo):
    mo.md(
        r"""
        ## Closed Forms on the Tree

        Drift in $[-1, 2]$, unit variance, payoff $\omega(T)$: the best action always pushes up,
        so $v(0, 0) = 2$. Variance in $[1, 3]$ with payoff $\omega(T)^2$ gives $3$.
        """
    )
    return


@app.cell
def _(SampledPath, SolverConfig, TimedPath, load_family, solve):
    start = TimedPath(0.0, SampledPath.constant([0.0], 1.0))
    drift = load_family(
        {
            "family": "random_g",
            "params": {"b_lo": -1, "b_hi": 2, "a_lo": 1, "a_hi": 1},
            "terminal": "state",
        }
    )
    variance = load_family(
        {
            "family": "random_g",
            "params": {"b_lo": 0, "b_hi": 0, "a_lo": 1, "a_hi": 3},
            "terminal": "state_square",
        }
    )
    tree = SolverConfig("tree", 3, start=start)
    solve(drift, tree).value, solve(variance, tree).value
    return drift, start, tree, variance


@app.cell
def _(mo):
    mo.md(
        r"""
        ## Lattice against Finite Differences

        Convex payoff $|\omega(T)|$ with variance in $[1, 2]$: the worst case is the largest
        variance, $v(0, 0) = \sqrt{4/\pi} \approx 1.1284$.
        """
    )
    return


@app.cell
def _(SolverConfig, halo, load_family):
    abs_family = load_family(
        {
            "family": "random_g",
            "params": {"b_lo": 0, "b_hi": 0, "a_lo": 1, "a_hi": 2},
            "terminal": "state_abs",
        }
    )
    halo.check_cross_oracle(abs_family, SolverConfig("markovian", 200))
    return (abs_family,)


@app.cell
def _(mo):
    mo.md(
        r"""
        ## Stability in the Coefficients

        Upper variance $2 + 1/n$ with payoff $\omega(T)^2$: the gap to the limit is exactly $T/n$.
        A wide state grid keeps the lattice edges away from the test paths.
        """
    )
    return


@app.cell
def _(CompactTestSet, SolverConfig, StateGrid, load_sequence, run_stability):
    seq = load_sequence(
        {
            "base": {
                "family": "random_g",
                "params": {"b_lo": 0, "b_hi": 0, "a_lo": 1, "a_hi": 2, "bound_C": 4},
                "terminal": "state_square",
            },
            "perturbation": {"kind": "a_hi_shift", "scale": 1.0},
        }
    )
    test_set = CompactTestSet.sample(12, 2.0, 1.0, seed=0)
    cfg = SolverConfig("markovian", 10, state_grid=StateGrid(0.02, -20.0, 20.0))
    report = run_stability(seq, test_set, cfg)
    report.gap_curve()
    return cfg, report, seq, test_set


if __name__ == "__main__":
    app.run()
