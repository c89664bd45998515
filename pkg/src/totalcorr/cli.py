"""Command-line front end: evaluate measures, run figure sweeps, run roof
minimizations, and execute the verification suites.

Exit codes: 0 success, 1 verification failure, 2 usage/input error,
3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from itertools import combinations
from pathlib import Path

import numpy as np

from . import measures, roof, states
from .core import RegisterShape, ResourceLimitError
from .states import PureState, RegisterShape as _Shape  # noqa: F401

FAMILY_MIN_N = {
    "ghz": 2,
    "w": 2,
    "wbar": 2,
    "cluster": 4,
    "epr_power": 2,
    "family1": 3,
    "family2": 3,
}
PARAMETRIC = ("family1", "family2")
SWEEP_HEADER = "family,n,x,O,M,S,MW,O_rel,M_rel,S_rel"


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _jnum(v: float) -> float:
    return float(_fmt(v))


def epr_power(n: int) -> PureState:
    """EPR^{(x)(n/2)} for even n."""
    if n < 2 or n % 2:
        raise ValueError("epr_power requires an even n >= 2")
    return states.product([states.epr()] * (n // 2))


def _family_state(family: str, n: int, x: float | None) -> PureState:
    if family == "ghz":
        return states.ghz(n)
    if family == "epr":
        return states.epr()
    if family == "w":
        return states.w(n)
    if family == "wbar":
        return states.wbar(n)
    if family == "cluster":
        return states.cluster(n)
    if family == "epr_power":
        return epr_power(n)
    if family == "family1":
        if x is None:
            raise ValueError("family1 requires --x")
        return states.family1(x, n)
    if family == "family2":
        if x is None:
            raise ValueError("family2 requires --x")
        return states.family2(x, n)
    raise ValueError(f"unknown state family {family!r}")


def _load_input_state(args) -> states.State:
    if args.file:
        return states.load_state(args.file)
    if not args.state:
        raise ValueError("provide --state <name> or --file <path>")
    if args.state == "epr":
        return states.epr()
    if args.n is None:
        raise ValueError(f"--state {args.state} requires --n")
    return _family_state(args.state, args.n, args.x)


def _report_dict(state: states.State) -> dict:
    rep = measures.measure_report(state)
    return {
        "shape": list(rep.shape.dims),
        "pairs": [
            {"i": i, "j": j, "P": _jnum(v)} for (i, j), v in sorted(rep.pair_values.items())
        ],
        "O": _jnum(rep.O),
        "M": _jnum(rep.M),
        "S": _jnum(rep.S),
        "MW": _jnum(rep.MW),
        "bound_M": _jnum(rep.bound_M),
        "bound_S": _jnum(rep.bound_S),
    }


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_measure(args) -> int:
    state = _load_input_state(args)
    doc = _report_dict(state)
    if args.format == "csv":
        cols = ["O", "M", "S", "MW", "bound_M", "bound_S"]
        text = ",".join(cols) + "\n" + ",".join(_fmt(doc[c]) for c in cols) + "\n"
    else:
        text = json.dumps(doc, indent=2) + "\n"
    _emit(text, args.output)
    return 0


def _parse_range(spec: str) -> list[int]:
    lo, _, hi = spec.partition(":")
    return list(range(int(lo), int(hi) + 1))


def _x_grid(spec: str) -> list[float]:
    lo, step_count = spec.split(":")[0], spec.split(":")
    if len(step_count) == 3:
        lo, hi, step = (float(v) for v in step_count)
    else:
        lo, hi, step = 0.0, 1.0, 0.05
    grid, k = [], 0
    while True:
        x = round(lo + k * step, 10)
        if x > hi + 1e-12:
            break
        grid.append(round(x, 2))
        k += 1
    return grid


def _family_ns(family: str, ns: list[int]) -> list[int]:
    min_n = FAMILY_MIN_N[family]
    even_only = family in ("cluster", "epr_power")
    return [n for n in ns if n >= min_n and (not even_only or n % 2 == 0)]


def cmd_sweep(args) -> int:
    families = sorted(set(args.family or ["ghz"]))
    ns = _parse_range(args.n_range)
    xs = _x_grid(args.x_grid)
    ghz_cache: dict[int, tuple[float, float, float]] = {}

    def ghz_values(n):
        if n not in ghz_cache:
            g = states.ghz(n)
            o, m = measures.measure_O(g), measures.measure_M(g)
            ghz_cache[n] = (o, m, 0.5 * (o + m))
        return ghz_cache[n]

    lines = [SWEEP_HEADER]
    for family in families:
        for n in _family_ns(family, ns):
            grid = xs if family in PARAMETRIC else [None]
            for x in grid:
                psi = _family_state(family, n, x)
                o, m = measures.measure_O(psi), measures.measure_M(psi)
                s = 0.5 * (o + m)
                mw = measures.measure_MW(psi)
                if args.ghz_norm:
                    go, gm, gs = ghz_values(n)
                    rel = (o / go, m / gm, s / gs)
                else:
                    rel = (o, m, s)
                xcol = "" if x is None else f"{x:.2f}"
                lines.append(
                    ",".join(
                        [family, str(n), xcol]
                        + [_fmt(v) for v in (o, m, s, mw)]
                        + [_fmt(v) for v in rel]
                    )
                )
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_roof(args) -> int:
    state = _load_input_state(args)
    cfg = roof.RoofConfig(
        ensemble_size=args.ensemble_size,
        restarts=args.restarts,
        max_iterations=args.max_iterations,
        tolerance=args.tolerance,
        seed=args.seed,
        strategy=args.strategy,
    )
    result = roof.roof_minimize(states.as_density(state), args.measure, cfg)
    doc = {
        "value": _jnum(result.value),
        "converged": result.converged,
        "per_restart_values": [_jnum(v) for v in result.per_restart_values],
        "ensemble": {
            "weights": [_jnum(p) for p in result.ensemble.weights],
            "members": [
                [[_jnum(z.real), _jnum(z.imag)] for z in member.amplitudes]
                if isinstance(member, PureState)
                else [[[_jnum(z.real), _jnum(z.imag)] for z in row] for row in member.matrix]
                for member in result.ensemble.members
            ],
        },
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


# --- verification suites ----------------------------------------------

def _qubits(n: int) -> RegisterShape:
    return RegisterShape((2,) * n)


class _Suite:
    def __init__(self):
        self.lines: list[str] = []
        self.failed: list[dict] = []

    def check(self, name: str, ok: bool, detail: str, instance: dict | None = None):
        self.lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            self.failed.append({"check": name, "detail": detail, **(instance or {})})

    def finish(self) -> int:
        print("\n".join(self.lines))
        if self.failed:
            print(json.dumps({"failures": self.failed}), file=sys.stderr)
            return 1
        return 0


def _verify_entropy(suite: _Suite, seed: int, trials: int) -> None:
    worst = np.inf
    for k in range(trials):
        rho = states.random_density(_qubits(3), rank=1 + k % 8, seed=seed + k)
        worst = min(worst, measures.ssa_check(rho))
    suite.check(
        "entropy-ssa", worst >= -1e-8,
        f"min residual {worst:.3e} over {trials} random 3-qubit densities",
    )
    s = measures.von_neumann_entropy(states.random_density(_qubits(2), 4, seed))
    suite.check("entropy-range", -1e-9 <= s <= 2 + 1e-9, f"S = {s:.6f} in [0, 2]")


def _verify_bounds(suite: _Suite, seed: int, trials: int) -> None:
    worst_gap = np.inf
    for n in (3, 4, 5):
        for k in range(trials):
            psi = states.random_pure(_qubits(n), seed=seed + 1000 * n + k)
            worst_gap = min(worst_gap, measures.bound_M(n) - measures.measure_M(psi))
    suite.check(
        "bound-M", worst_gap >= -1e-9,
        f"min bound_M - M = {worst_gap:.3e} over {3 * trials} random pure states",
    )
    worst = max(
        abs(measures.measure_M(states.ghz(n)) - measures.bound_M(n)) for n in range(2, 9)
    )
    suite.check("ghz-attains-bound", worst <= 1e-9, f"max |M(ghz)-bound| = {worst:.3e}")


def _verify_additivity(suite: _Suite, seed: int, trials: int) -> None:
    worst = 0.0
    for k in range(trials):
        a = states.random_pure(_qubits(2), seed=seed + 2 * k)
        b = states.random_pure(_qubits(2), seed=seed + 2 * k + 1)
        ab = states.product([a, b])
        for fn in (measures.measure_M, measures.measure_O, measures.measure_S):
            worst = max(worst, abs(fn(ab) - fn(a) - fn(b)))
    suite.check("pure-additivity", worst <= 1e-8, f"max |T(axb)-T(a)-T(b)| = {worst:.3e}")
    worst_ssa = np.inf
    for k in range(trials):
        psi = states.random_pure(_qubits(4), seed=seed + 10_000 + k)
        rho = states.dm(psi)
        shape2 = _qubits(2)
        left = measures.measure_S(
            states.DensityMatrix(shape2, measures._marginal(rho, (0, 1)))
        )
        right = measures.measure_S(
            states.DensityMatrix(shape2, measures._marginal(rho, (2, 3)))
        )
        worst_ssa = min(worst_ssa, measures.measure_S(psi) - left - right)
    suite.check("pure-ssa", worst_ssa >= -1e-8, f"min S(rho)-S(12)-S(34) = {worst_ssa:.3e}")


def _verify_flags(suite: _Suite, seed: int, trials: int) -> None:
    cfg = roof.RoofConfig(restarts=8, seed=seed)
    worst = 0.0
    for k in range(trials):
        a = states.random_pure(_qubits(2), seed=seed + 3 * k)
        b = states.random_pure(_qubits(2), seed=seed + 3 * k + 1)
        p = 0.25 + 0.5 * ((seed + k) % 3) / 2.0
        e = states.Ensemble((p, 1 - p), (a, b))
        worst = max(worst, roof.flags_residual(e, "M", cfg))
    suite.check("flags-equality", worst <= 5e-3, f"max residual {worst:.3e} over {trials} ensembles")


def _verify_pcrc(suite: _Suite, seed: int, trials: int) -> None:
    cfg = roof.RoofConfig(restarts=8, seed=seed)
    worst = np.inf
    bad = None
    for k in range(trials):
        rho = states.random_density(_qubits(2), rank=2, seed=seed + k)
        direct = measures.measure_M(rho)
        res = roof.roof_minimize(rho, "M", cfg)
        gap = direct - res.value
        if gap < worst:
            worst = gap
            bad = (rho, res.converged)
        # only a converged negative gap is a genuine counterexample
        if gap < -1e-6 and res.converged:
            suite.check(
                "pcrc", False, f"converged negative gap {gap:.3e} at trial {k}",
                {"trial": k, "seed": seed + k},
            )
            return
    suite.check("pcrc", True, f"min gap {worst:.3e} over {trials} two-qubit mixtures")


def _verify_form2(suite: _Suite, seed: int, trials: int) -> None:
    worst = 0.0
    for k in range(trials):
        n = 3 + k % 3
        psi = states.random_pure(_qubits(n), seed=seed + k)
        worst = max(worst, abs(measures.measure_S_form2(psi) - measures.measure_S(psi)))
    suite.check("form2-identity", worst <= 1e-8, f"max |S_form2 - S| = {worst:.3e}")


SUITES = {
    "entropy": (_verify_entropy, 200),
    "bounds": (_verify_bounds, 500),
    "additivity": (_verify_additivity, 100),
    "flags": (_verify_flags, 3),
    "pcrc": (_verify_pcrc, 20),
    "form2": (_verify_form2, 100),
}


def cmd_verify(args) -> int:
    fn, default_trials = SUITES[args.suite]
    suite = _Suite()
    fn(suite, args.seed, args.trials if args.trials is not None else default_trials)
    return suite.finish()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="totalcorr",
        description="Total-correlation entanglement measures for multi-qudit states",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--output", default=None)

    def add_state_source(p):
        p.add_argument("--state", choices=sorted(FAMILY_MIN_N) + ["epr"], default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--x", type=float, default=None)
        p.add_argument("--file", default=None)

    p = sub.add_parser("measure", help="evaluate all measures on one state")
    add_common(p)
    add_state_source(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("sweep", help="emit CSV rows over a family grid")
    add_common(p)
    p.add_argument("--family", action="append", choices=sorted(FAMILY_MIN_N))
    p.add_argument("--n-range", default="2:12")
    p.add_argument("--x-grid", default="0:1:0.05")
    p.add_argument("--no-ghz-norm", dest="ghz_norm", action="store_false")
    p.set_defaults(func=cmd_sweep, ghz_norm=True)

    p = sub.add_parser("roof", help="convex-roof minimization for one state")
    add_common(p)
    add_state_source(p)
    p.add_argument("--measure", choices=roof.MEASURE_NAMES, default="M")
    p.add_argument("--strategy", choices=roof.STRATEGIES, default="pure_roof")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-iterations", type=int, default=2000)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--ensemble-size", type=int, default=None)
    p.set_defaults(func=cmd_roof)

    p = sub.add_parser("verify", help="run a numeric verification suite")
    add_common(p)
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
