"""``hqis`` command-line front end.

Exit codes: 0 success, 1 verification failure, 2 invalid scenario or usage.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from collections import Counter
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__, access_audit, qmath
from .kernels import BACKEND
from .protocol import (
    BOB_TABLE,
    DIANA_X_TABLE,
    DIANA_ZZ_TABLE,
    BellOutcome,
    HelperBasis,
    InvalidCoalitionError,
    SecretSpec,
    analytic_collapse,
    alice_bell_measure,
    build_chi,
    build_secret,
    compose_system,
    enumerate_branches,
    helpers_of,
    random_secrets,
    reduced_state,
    run_protocol,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_complex(text: str) -> complex:
    """Parse ``1.5-0.5j`` (``i`` is accepted for ``j``)."""
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def shot_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _cplx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _write_json(path: str | None, report: dict) -> None:
    if path:
        Path(path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")


# --- run -------------------------------------------------------------------


def _secret_from_args(args) -> SecretSpec:
    if args.alpha is not None or args.beta is not None:
        if args.lam is not None:
            raise UsageError("give either --lambda or --alpha/--beta, not both")
        alpha = args.alpha if args.alpha is not None else 0j
        beta = args.beta if args.beta is not None else 0j
        try:
            return SecretSpec.from_amplitudes(alpha, beta)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return SecretSpec.from_lambda(args.lam if args.lam is not None else 1 + 0j)


def chi_square_uniform(counts: list[int]) -> tuple[float, float]:
    res = stats.chisquare(counts)
    return float(res.statistic), float(res.pvalue)


def cmd_run(args) -> int:
    secret = _secret_from_args(args)
    if args.shots < 1:
        raise UsageError("--shots must be at least 1")
    receiver = args.receiver
    helpers = helpers_of(receiver)
    basis_flags = {"bob": args.basis_b, "charlie": args.basis_c, "diana": args.basis_d}
    bases = {h: HelperBasis(basis_flags[h].upper()) for h in helpers}
    drops = set(args.drop or [])
    if receiver in drops:
        raise UsageError(f"the receiver {receiver} cannot drop its own message")
    delivered = {h: h not in drops for h in helpers}

    transcripts = []
    for shot in range(args.shots):
        t = run_protocol(
            receiver, secret, bases, delivered, rng=shot_rng(args.seed, shot), rng_seed=args.seed
        )
        d = t.to_dict()
        d["shot"] = shot
        transcripts.append(d)

    fids = [t["fidelity"] for t in transcripts]
    hist = Counter(t["bell"] for t in transcripts)
    histogram = {b.value: hist.get(b.value, 0) for b in BellOutcome}
    chi2, _ = chi_square_uniform(list(histogram.values()))
    report = {
        "config": {
            "receiver": receiver,
            "secret": {"alpha": _cplx(secret.alpha), "beta": _cplx(secret.beta)},
            "bases": {h: b.value for h, b in bases.items()},
            "dropped_messages": sorted(drops),
            "seed": args.seed,
            "shots": args.shots,
        },
        "transcripts": transcripts,
        "summary": {
            "mean_fidelity": float(np.mean(fids)),
            "min_fidelity": float(np.min(fids)),
            "outcome_histogram": histogram,
            "chi_square": chi2,
        },
    }
    print(f"receiver {receiver}, secret alpha={secret.alpha:.6g} beta={secret.beta:.6g}")
    if args.shots <= 20:
        for t in transcripts:
            ev = " ".join(
                f"{e['agent']}:{e['basis']}={e['outcome']}{'' if e['delivered'] else '(dropped)'}"
                for e in t["helper_events"]
            )
            print(
                f"  shot {t['shot']}: {t['bell']} {ev} -> {t['correction']}"
                f"  fidelity {t['fidelity']:.12f}"
            )
    print(
        f"{args.shots} shots: mean fidelity {report['summary']['mean_fidelity']:.12f}, "
        f"min {report['summary']['min_fidelity']:.12f}"
    )
    print("Bell outcomes: " + ", ".join(f"{k}={v}" for k, v in histogram.items()))
    _write_json(args.json, report)
    return EXIT_OK


# --- verify ----------------------------------------------------------------


class Suite:
    def __init__(self, name: str, unit: str = "branches"):
        self.name = name
        self.unit = unit
        self.total = 0
        self.ok = 0
        self.first_failure: dict | None = None
        self.max_error = 0.0

    def check(self, error: float, tol: float, where: dict) -> None:
        self.total += 1
        self.max_error = max(self.max_error, float(error))
        if error <= tol:
            self.ok += 1
        elif self.first_failure is None:
            self.first_failure = dict(where, error=float(error))

    @property
    def passed(self) -> bool:
        return self.ok == self.total

    def line(self) -> str:
        status = "OK" if self.passed else "FAILED"
        text = f"{self.name}: {self.ok}/{self.total} {self.unit} {status}"
        if self.first_failure:
            text += f"  (first failure: {self.first_failure})"
        return text

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "ok": self.ok,
            "total": self.total,
            "max_error": self.max_error,
            "first_failure": self.first_failure,
        }


def verify_suites(tol: float, secrets: list[SecretSpec]) -> list[Suite]:
    suites = []
    for receiver, scenario, name in [
        ("bob", "zz", "Bob"),
        ("charlie", "zz", "Charlie"),
        ("diana", "zz", "Diana-ZZ"),
        ("diana", "x-bob", "Diana-X (Bob reports)"),
        ("diana", "x-charlie", "Diana-X (Charlie reports)"),
    ]:
        suite = Suite(name)
        for bases, delivered, bell, outs in enumerate_branches(receiver, scenario):
            for i, spec in enumerate(secrets):
                t = run_protocol(receiver, spec, bases, delivered, bell=bell, outcomes=outs)
                suite.check(
                    abs(1.0 - t.fidelity),
                    tol,
                    {
                        "receiver": receiver,
                        "bell": bell.value,
                        "outcomes": {h: int(o) for h, o in outs.items()},
                        "secret": i,
                    },
                )
        suites.append(suite)

    collapse = Suite("Collapse oracle", "states")
    probs = Suite("Bell probabilities", "outcomes")
    for i, spec in enumerate(secrets):
        system = compose_system(build_secret(spec), build_chi())
        for bell in BellOutcome:
            _, p, got = alice_bell_measure(system, outcome=bell)
            want = analytic_collapse(bell, spec)
            collapse.check(
                float(np.max(np.abs(got.canonical() - want.canonical()))),
                tol,
                {"bell": bell.value, "secret": i},
            )
            probs.check(abs(p - 0.25), tol, {"bell": bell.value, "secret": i})
    suites += [collapse, probs]

    dm = Suite("Density matrices", "marginals")
    for i, spec in enumerate(secrets):
        for bell in BellOutcome:
            state = analytic_collapse(bell, spec)
            for label in "BCD":
                got = qmath.partial_trace(state, [label]).matrix
                want = reduced_state(bell.outcome_class, spec, label).matrix
                dm.check(
                    float(np.max(np.abs(got - want))),
                    tol,
                    {"bell": bell.value, "agent": label, "secret": i},
                )
    suites.append(dm)
    return suites


def cmd_verify(args) -> int:
    secrets = random_secrets(args.secrets, np.random.default_rng(args.seed))
    suites = verify_suites(args.tolerance, secrets)
    for s in suites:
        print(s.line())
    passed = all(s.passed for s in suites)
    print("all suites passed" if passed else "verification FAILED")
    _write_json(
        args.json,
        {
            "config": {"tolerance": args.tolerance, "secrets": args.secrets, "seed": args.seed},
            "suites": [s.to_dict() for s in suites],
            "passed": passed,
        },
    )
    return EXIT_OK if passed else EXIT_FAIL


# --- table -----------------------------------------------------------------


def correction_table(which: str) -> list[str]:
    """Correction table rows as text, in the order the tables are written."""
    rows = []
    bells = [BellOutcome.PSI_PLUS, BellOutcome.PSI_MINUS, BellOutcome.PHI_PLUS, BellOutcome.PHI_MINUS]
    if which == "bob":
        for b in bells:
            for c, d in itertools.product((0, 1), repeat=2):
                rows.append(f"{b.value} {c}_C {d}_D -> {BOB_TABLE[b, c, d]}")
    elif which == "diana-zz":
        for b in bells:
            rows.append(f"{b.value} q_B q_C -> {DIANA_ZZ_TABLE[b, 0]}")
            rows.append(f"{b.value} q_B ~q_C -> {DIANA_ZZ_TABLE[b, 1]}")
    elif which == "diana-x":
        for b in bells:
            rows.append(f"{b.value} +_B(C) -> {DIANA_X_TABLE[b, 0]}")
            rows.append(f"{b.value} -_B(C) -> {DIANA_X_TABLE[b, 1]}")
    else:
        raise UsageError(f"unknown table {which!r}")
    return rows


def cmd_table(args) -> int:
    rows = correction_table(args.which)
    for row in rows:
        print(row)
    _write_json(args.json, {"table": args.which, "rows": rows})
    return EXIT_OK


# --- audit -----------------------------------------------------------------


def cmd_audit(args) -> int:
    if args.secrets < 32:
        raise UsageError("--secrets must be at least 32 for the audit")
    results = access_audit.hierarchy_report(args.secrets, args.seed)
    print(f"{'receiver':<9} {'helpers':<16} {'fidelity':>10}  bases")
    for r in results:
        helpers = ",".join(r.coalition.helpers) or "-"
        bases = ",".join(f"{h}:{b.value}" for h, b in r.best_strategy.bases.items()) or "-"
        print(f"{r.coalition.receiver:<9} {helpers:<16} {r.best_avg_fidelity:>10.6f}  {bases}")
    _write_json(
        args.json,
        {
            "config": {"secrets": args.secrets, "seed": args.seed},
            "results": [r.to_dict() for r in results],
        },
    )
    return EXIT_OK


# --- sample ----------------------------------------------------------------


def _pair_distribution(state: qmath.StateVector, labels: tuple[str, str], basis: str) -> np.ndarray:
    """Joint outcome probabilities of two sequential measurements, index 2*o1 + o2."""
    probs = np.zeros(4)
    first = qmath.probabilities(state, labels[0], basis)
    for o1 in (0, 1):
        if first[o1] <= qmath.IMPOSSIBLE_TOL:
            continue
        _, p1, rest = qmath.measure(state, labels[0], basis, outcome=o1)
        second = qmath.probabilities(rest, labels[1], basis)
        probs[2 * o1 : 2 * o1 + 2] = p1 * second
    return probs


def sample_report(shots: int, seed: int, secret: SecretSpec | None = None) -> dict:
    """Monte Carlo over Bell and helper outcomes with Born weights.

    Branch probabilities come from the simulator for one secret (random
    unless given); all draws come from a single generator seeded by ``seed``.
    """
    rng = np.random.default_rng(seed)
    if secret is None:
        secret = SecretSpec.random(rng)
    system = compose_system(build_secret(secret), build_chi())
    bells = list(BellOutcome)
    bell_p = np.array([qmath.bell_probabilities(system, "S", "A")[b.value] for b in bells])
    xx, zz = [], []
    for b in bells:
        _, _, state = alice_bell_measure(system, outcome=b)
        xx.append(_pair_distribution(state, ("B", "C"), "X"))
        zz.append(_pair_distribution(state, ("C", "D"), "Z"))

    bell_idx = rng.choice(4, size=shots, p=bell_p / bell_p.sum())
    x_counts = np.zeros(4, dtype=int)
    z_counts = np.zeros(4, dtype=int)
    for k in range(4):
        n = int(np.sum(bell_idx == k))
        x_counts += np.bincount(rng.choice(4, size=n, p=xx[k] / xx[k].sum()), minlength=4)
        z_counts += np.bincount(rng.choice(4, size=n, p=zz[k] / zz[k].sum()), minlength=4)
    bell_counts = np.bincount(bell_idx, minlength=4)

    chi2, pval = chi_square_uniform(bell_counts.tolist())
    z_chi2, z_pval = chi_square_uniform(z_counts.tolist())
    pm = ["++", "+-", "-+", "--"]
    return {
        "config": {
            "shots": shots,
            "seed": seed,
            "secret": {"alpha": _cplx(secret.alpha), "beta": _cplx(secret.beta)},
        },
        "analytic": {
            "bell_probabilities": {b.value: float(p) for b, p in zip(bells, bell_p)},
        },
        "summary": {
            "outcome_histogram": {b.value: int(c) for b, c in zip(bells, bell_counts)},
            "frequencies": {b.value: float(c) / shots for b, c in zip(bells, bell_counts)},
            "chi_square": chi2,
            "p_value": pval,
            "z_helper_histogram": {f"{o >> 1}_C{o & 1}_D": int(c) for o, c in enumerate(z_counts)},
            "z_helper_chi_square": z_chi2,
            "z_helper_p_value": z_pval,
            "x_helper_histogram": {pm[o]: int(c) for o, c in enumerate(x_counts)},
            "x_correlation_violations": int(x_counts[1] + x_counts[2]),
        },
    }


def cmd_sample(args) -> int:
    if args.shots < 1000:
        raise UsageError("--shots must be at least 1000")
    secret = None
    if args.lam is not None:
        secret = SecretSpec.from_lambda(args.lam)
    report = sample_report(args.shots, args.seed, secret)
    s = report["summary"]
    print(f"{args.shots} shots, seed {args.seed}")
    for name, freq in s["frequencies"].items():
        print(f"  {name:<5} {s['outcome_histogram'][name]:>8}  {freq:.5f}")
    print(f"chi-square vs uniform: {s['chi_square']:.4f} (p = {s['p_value']:.4f})")
    print(f"Z helpers (C,D) chi-square: {s['z_helper_chi_square']:.4f} (p = {s['z_helper_p_value']:.4f})")
    print(f"X helpers (B,C) anticorrelated outcomes: {s['x_correlation_violations']}")
    _write_json(args.json, report)
    return EXIT_OK


# --- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hqis", description="Hierarchical quantum information splitting simulator"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help: str, secrets: int = 128) -> argparse.ArgumentParser:
        # parent parsers would share actions, so each subcommand gets its own
        p = sub.add_parser(name, help=help)
        p.add_argument("--seed", type=int, default=0, help="master RNG seed (default 0)")
        p.add_argument("--json", metavar="PATH", help="also write the report as JSON")
        p.add_argument("--tolerance", type=float, default=1e-10, help="fidelity tolerance")
        p.add_argument(
            "--secrets", type=int, default=secrets, help=f"random secrets to test (default {secrets})"
        )
        return p

    p = add("run", "run the protocol for one scenario")
    p.add_argument("--receiver", choices=["bob", "charlie", "diana"], default="bob", help="who reconstructs")
    p.add_argument("--lambda", dest="lam", type=parse_complex, help="secret as |0> + lambda|1>")
    p.add_argument("--alpha", type=parse_complex, help="amplitude of |0>")
    p.add_argument("--beta", type=parse_complex, help="amplitude of |1>")
    for agent in ("b", "c", "d"):
        p.add_argument(
            f"--basis-{agent}", choices=["z", "x", "Z", "X"], default="z", help=f"basis of qubit {agent.upper()}"
        )
    p.add_argument(
        "--drop", action="append", choices=["bob", "charlie", "diana"], help="withhold this helper's report"
    )
    p.add_argument("--shots", type=int, default=1, help="protocol runs")
    p.set_defaults(func=cmd_run)

    p = add("verify", "exhaustive branch checks", secrets=4)
    p.set_defaults(func=cmd_verify)

    p = add("table", "print a correction table")
    p.add_argument("which", choices=["bob", "diana-zz", "diana-x"])
    p.set_defaults(func=cmd_table)

    p = add("audit", "coalition access audit")
    p.set_defaults(func=cmd_audit)

    p = add("sample", "Born-rule sampling statistics")
    p.add_argument("--shots", type=int, default=100_000, help="samples, at least 1000")
    p.add_argument("--lambda", dest="lam", type=parse_complex, help="fixed secret (default random)")
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidCoalitionError as exc:
        print(f"hqis: invalid coalition: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"hqis: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
