"""Command-line surface: every pipeline behind one reproducible entry point.

Subcommands
-----------
exact        closed-form vs brute-force SRE for the catalogued families
finite-sre   SRE of a finite chain built from any state descriptor
imps-sre     SRE density of a uniform MPS (dense / pauli-imps / bond-dmrg)
ensemble     random-state ensemble: SRE, non-local SRE, flatness, CSV
msre         two-point mutual-SRE curve with the mode-expansion prediction
ising-sweep  SRE density across the transverse-field Ising transition
ising-oracle Z2-symmetric mutual-SRE curve from the free-fermion solution

All numbers are printed with 12 significant digits and CSV bodies are
byte-identical across runs for a fixed seed.  Every file output is
accompanied by a ``<name>.manifest.json`` recording the command line, a
digest of the resolved parameters, package versions and the SHA-256 of
each artifact.  Exit codes: 0 success, 2 malformed input, 3 violated
precondition, 4 failed convergence.

State descriptors take the form ``kind:key=value,...``::

    product:theta=0.7,phi=0.3        ghz:n=4,theta=1.0,phi=0.0
    w:n=5                            dicke:n=6,k=2
    random:chi=3,seed=11             ising:hx=0.8,chi=8
    file:path/to/state.json

The environment variable ``MAGICMPS_THREADS`` caps worker parallelism
(this build evaluates sweep points sequentially, which respects any
cap); it is validated and recorded in the manifest.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .engines import (
    BondDmrgConfig,
    PauliImpsConfig,
    bond_dmrg_sre,
    brute_force_sre,
    dense_d_sre,
    finite_mps_sre,
    pauli_imps_sre,
)
from .errors import (
    ConvergenceError,
    MagicMpsError,
    ParseError,
    PreconditionError,
)
from .ising import (
    IsingParams,
    ground_state_imps,
    sre_density_sweep,
    symmetric_msre_curve,
)
from .mps import UniformMps, load_mps
from .mutual import asymptotic_constants, mutual_sre, predicted_msre
from .nonlocal_sre import RandomEnsembleConfig, ensemble_report, random_imps
from .states import (
    NamedState,
    build_named_mps,
    closed_form_sre,
    named_statevector,
    sre_density_upper_bound,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_CONVERGENCE = 4

LOG2 = math.log(2.0)


# ---------------------------------------------------------------------------
# formatting and output plumbing


def _fmt(value) -> str:
    """Deterministic cell formatting: 12 significant digits, '.' decimal."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return format(float(value), ".12g")


def _csv_body(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_fmt(cell) for cell in row] for row in rows)
    return buf.getvalue()


def _thread_cap() -> int:
    raw = os.environ.get("MAGICMPS_THREADS", "1")
    try:
        cap = int(raw)
    except ValueError:
        raise ParseError(f"MAGICMPS_THREADS must be an integer, got {raw!r}")
    if cap < 1:
        raise ParseError(f"MAGICMPS_THREADS must be >= 1, got {cap}")
    return cap


def _emit(body: str, args, params: dict) -> None:
    """Write the CSV to --out (plus manifest) or to stdout."""
    out = getattr(args, "out", None)
    if out is None:
        sys.stdout.write(body)
        return
    out_path = Path(out)
    out_path.write_text(body)
    digest = hashlib.sha256(body.encode()).hexdigest()
    resolved = json.dumps(params, sort_keys=True, default=str)
    manifest = {
        "command": " ".join(sys.argv),
        "config_digest": hashlib.sha256(resolved.encode()).hexdigest(),
        "parameters": json.loads(resolved),
        "seed": params.get("seed"),
        "threads_cap": _thread_cap(),
        "versions": {
            "magicmps": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": [
            {"path": str(out_path), "sha256": digest, "bytes": len(body)}
        ],
    }
    out_path.with_name(out_path.name + ".manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n"
    )


# ---------------------------------------------------------------------------
# state descriptors


def _parse_fields(rest: str, spec: dict, kind: str) -> dict:
    """Parse 'a=1,b=2' against {name: converter}; unknown keys are errors."""
    fields = {}
    for item in filter(None, rest.split(",")):
        key, sep, raw = item.partition("=")
        if not sep:
            raise ParseError(f"{kind} descriptor field {item!r} is not key=value")
        if key not in spec:
            raise ParseError(
                f"unknown field {key!r} for {kind} (expected {sorted(spec)})"
            )
        try:
            fields[key] = spec[key](raw)
        except ValueError:
            raise ParseError(f"cannot parse {kind} field {key}={raw!r}")
    return fields


def _require(fields: dict, name: str, kind: str):
    if name not in fields:
        raise ParseError(f"{kind} descriptor requires {name}=...")
    return fields[name]


def parse_state(text: str, default_n: int = 1):
    """Resolve a descriptor to ('named', NamedState) or ('mps', state)."""
    kind, _, rest = text.partition(":")
    if kind in ("product", "ghz", "w", "dicke"):
        spec = {"theta": float, "phi": float, "n": int, "k": int}
        f = _parse_fields(rest, spec, kind)
        n = f.get("n", default_n)
        named = NamedState(
            kind=kind,
            n=n,
            theta=f.get("theta", 0.0),
            phi=f.get("phi", 0.0),
            k=f.get("k", 1),
        )
        return "named", named
    if kind == "random":
        f = _parse_fields(rest, {"chi": int, "seed": int}, kind)
        chi = _require(f, "chi", kind)
        seed = _require(f, "seed", kind)
        return "mps", random_imps(chi, seed)
    if kind == "ising":
        spec = {"hx": float, "j": float, "chi": int, "tol": float}
        f = _parse_fields(rest, spec, kind)
        p = IsingParams(hx=_require(f, "hx", kind), j=f.get("j", 1.0))
        gs = ground_state_imps(
            p, chi=f.get("chi", 8), tol=f.get("tol", 1e-4)
        )
        return "mps", gs.state
    if kind == "file":
        if not rest:
            raise ParseError("file descriptor requires a path: file:PATH")
        return "mps", load_mps(rest)
    raise ParseError(
        f"unknown state kind {kind!r} "
        "(expected product, ghz, w, dicke, random, ising or file)"
    )


def _uniform_state(text: str) -> UniformMps:
    tag, state = parse_state(text, default_n=2)
    if tag == "named":
        state = build_named_mps(state)
    if not isinstance(state, UniformMps):
        raise PreconditionError(
            f"{text!r} does not describe a uniform (translation-invariant) MPS"
        )
    return state


def _load_config(args) -> dict:
    path = getattr(args, "config", None)
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read config {path}: {exc}")
    if not isinstance(doc, dict):
        raise ParseError("config file must hold a JSON object")
    return doc


# ---------------------------------------------------------------------------
# subcommands


def _cmd_exact(args) -> None:
    tag, named = parse_state(args.state, default_n=args.n or 1)
    if tag != "named":
        raise PreconditionError(
            "exact expects a catalogued family (product, ghz, w, dicke)"
        )
    if args.n is not None:
        named = NamedState(
            kind=named.kind, n=args.n, theta=named.theta, phi=named.phi, k=named.k
        )
    m2 = closed_form_sre(named)
    brute = None
    if named.n <= 8:
        brute = brute_force_sre(named_statevector(named)).value_m2
    rows = [[
        args.state,
        named.n,
        m2,
        brute,
        m2 / named.n,
        sre_density_upper_bound(named.n),
    ]]
    body = _csv_body(
        ["state", "n", "m2_closed", "m2_brute", "density", "upper_bound"], rows
    )
    _emit(body, args, {"command": "exact", "state": args.state, "n": named.n})


def _cmd_finite_sre(args) -> None:
    tag, parsed = parse_state(args.state, default_n=args.sites or 2)
    state = build_named_mps(parsed) if tag == "named" else parsed
    sites = args.sites
    if sites is None and tag == "named" and isinstance(state, UniformMps):
        sites = parsed.n
    res = finite_mps_sre(state, n=sites, boundary=args.boundary)
    n = res.diagnostics.get("n", args.sites)
    rows = [[
        args.state,
        n,
        res.diagnostics.get("boundary", args.boundary or ""),
        res.value_m2,
        res.value_m2 / n,
        sre_density_upper_bound(n),
    ]]
    body = _csv_body(
        ["state", "n", "boundary", "m2", "density", "upper_bound"], rows
    )
    _emit(
        body,
        args,
        {
            "command": "finite-sre",
            "state": args.state,
            "sites": args.sites,
            "boundary": args.boundary,
        },
    )


def _cmd_imps_sre(args) -> None:
    state = _uniform_state(args.state)
    engine = args.engine
    if engine == "dense":
        if state.chi > 3:
            raise PreconditionError(
                f"dense engine materialises a chi^8 operator; chi={state.chi} > 3"
            )
        res = dense_d_sre(state)
    elif engine == "pauli-imps":
        res = pauli_imps_sre(state, PauliImpsConfig())
    elif engine == "bond-dmrg":
        cfg = BondDmrgConfig(kappa=args.kappa, seed=args.seed or 0)
        res = bond_dmrg_sre(state, cfg)
    else:  # argparse restricts choices; defend anyway
        raise ParseError(f"unknown engine {engine!r}")
    rows = [[
        args.state,
        state.chi,
        engine,
        res.density_m2,
        res.diagnostics.get("lambda0"),
    ]]
    body = _csv_body(["state", "chi", "engine", "density_m2", "lambda0"], rows)
    _emit(
        body,
        args,
        {
            "command": "imps-sre",
            "state": args.state,
            "engine": engine,
            "kappa": args.kappa,
            "seed": args.seed,
        },
    )


def _cmd_ensemble(args) -> None:
    config = _load_config(args)
    chi = args.chi if args.chi is not None else config.get("chi")
    samples = args.samples if args.samples is not None else config.get("samples")
    seed = args.seed if args.seed is not None else config.get("seed")
    engine = args.engine or config.get("engine")
    restarts = (
        args.restarts if args.restarts is not None else config.get("restarts", 6)
    )
    if chi is None or samples is None:
        raise ParseError("ensemble requires --chi and --samples (flag or config)")
    if seed is None:
        raise ParseError("ensemble is stochastic: --seed is mandatory")
    cfg = RandomEnsembleConfig(
        chi=int(chi), samples=int(samples), seed=int(seed), engine=engine
    )
    records = ensemble_report(cfg, restarts=int(restarts))
    rows = [
        [
            r.sample_id,
            r.chi,
            r.seed,
            r.m2,
            r.m2_nonlocal,
            r.entropy,
            r.log_flatness,
            r.converged,
        ]
        for r in records
    ]
    body = _csv_body(
        [
            "sample_id",
            "chi",
            "seed",
            "m2",
            "m2_nonlocal",
            "entropy",
            "log_flatness",
            "converged",
        ],
        rows,
    )
    _emit(
        body,
        args,
        {
            "command": "ensemble",
            "chi": int(chi),
            "samples": int(samples),
            "seed": int(seed),
            "engine": engine,
            "restarts": int(restarts),
        },
    )


def _cmd_msre(args) -> None:
    state = _uniform_state(args.state)
    fit = asymptotic_constants(state)
    rows = []
    for r in range(args.r_max + 1):
        comp = mutual_sre(state, r)
        try:
            pred = predicted_msre(fit, r)
        except PreconditionError:
            pred = None  # expansion outside its domain at this separation
        rows.append(
            [
                r,
                comp.total,
                comp.magic_part,
                comp.entropy_part,
                pred,
                fit.lambda1_abs,
                fit.xi,
            ]
        )
    body = _csv_body(
        ["r", "L", "L_M", "L_S", "predicted_L", "lambda1_abs", "xi"], rows
    )
    _emit(
        body,
        args,
        {"command": "msre", "state": args.state, "r_max": args.r_max},
    )


def _sweep_grid(config: dict) -> list[float]:
    try:
        lo = float(config["hx_min"])
        hi = float(config["hx_max"])
        step = float(config["step"])
    except KeyError as exc:
        raise ParseError(f"sweep config missing key {exc.args[0]!r}")
    if step <= 0 or hi < lo:
        raise ParseError("sweep needs step > 0 and hx_max >= hx_min")
    count = int(round((hi - lo) / step)) + 1
    return [round(lo + i * step, 12) for i in range(count) if lo + i * step <= hi + 1e-12]


def _cmd_ising_sweep(args) -> None:
    config = _load_config(args)
    if not config:
        raise ParseError("ising-sweep requires --config with the grid definition")
    if args.chi is not None:
        config["chi"] = args.chi
    if args.kappa is not None:
        config["kappa"] = args.kappa
    grid = _sweep_grid(config)
    points = sre_density_sweep(
        grid,
        chi=int(config.get("chi", 8)),
        kappa=int(config.get("kappa", 48)),
    )
    rows = [
        [
            p.hx,
            p.chi,
            p.density_m2,
            p.energy_error,
            p.magnetization_z,
            p.symmetry_broken,
            p.dmrg_sweeps,
            p.truncation_weight,
        ]
        for p in points
    ]
    body = _csv_body(
        [
            "hx",
            "chi",
            "density_m2",
            "energy_error",
            "magnetization_z",
            "symmetry_broken",
            "dmrg_sweeps",
            "truncation_weight",
        ],
        rows,
    )
    _emit(body, args, {"command": "ising-sweep", **config})


def _cmd_ising_oracle(args) -> None:
    config = _load_config(args)
    hx = args.hx if args.hx is not None else config.get("hx")
    if hx is None:
        raise ParseError("ising-oracle requires --hx (flag or config)")
    r_list = config.get("r_list")
    if r_list is None:
        r_list = list(range(args.r_max + 1))
    points = symmetric_msre_curve([float(hx)], [int(r) for r in r_list])
    rows = [[p.hx, p.separation, p.l_total, p.l_magic, p.l_entropy] for p in points]
    body = _csv_body(["hx", "r", "L", "L_M", "L_S"], rows)
    _emit(
        body,
        args,
        {"command": "ising-oracle", "hx": float(hx), "r_list": list(r_list)},
    )


# ---------------------------------------------------------------------------
# argument parsing and dispatch


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 2 with a parse-style message
        raise ParseError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="magicmps", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, helptext):
        p = sub.add_parser(name, help=helptext)
        p.set_defaults(func=func)
        p.add_argument("--out", help="write CSV here (with a manifest)")
        return p

    p = add("exact", _cmd_exact, "closed-form vs brute-force SRE")
    p.add_argument("--state", required=True)
    p.add_argument("--n", type=int, help="override the qubit count")

    p = add("finite-sre", _cmd_finite_sre, "SRE of a finite chain")
    p.add_argument("--state", required=True)
    p.add_argument("--sites", type=int, help="chain length for uniform input")
    p.add_argument("--boundary", choices=["pbc", "obc"])

    p = add("imps-sre", _cmd_imps_sre, "SRE density of a uniform MPS")
    p.add_argument("--state", required=True)
    p.add_argument(
        "--engine",
        required=True,
        choices=["dense", "pauli-imps", "bond-dmrg"],
    )
    p.add_argument("--kappa", type=int)
    p.add_argument("--seed", type=int)

    p = add("ensemble", _cmd_ensemble, "random-ensemble statistics CSV")
    p.add_argument("--chi", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--engine", choices=["dense", "bond-dmrg"])
    p.add_argument("--restarts", type=int)
    p.add_argument("--config")

    p = add("msre", _cmd_msre, "two-point mutual-SRE curve CSV")
    p.add_argument("--state", required=True)
    p.add_argument("--r-max", type=int, default=39)

    p = add("ising-sweep", _cmd_ising_sweep, "SRE density across the transition")
    p.add_argument("--config", required=True)
    p.add_argument("--chi", type=int)
    p.add_argument("--kappa", type=int)

    p = add("ising-oracle", _cmd_ising_oracle, "symmetric mutual-SRE curve")
    p.add_argument("--hx", type=float)
    p.add_argument("--r-max", type=int, default=40)
    p.add_argument("--config")

    return parser


def main(argv=None) -> int:
    try:
        _thread_cap()
        args = _build_parser().parse_args(argv)
        args.func(args)
        return EXIT_OK
    except ParseError as exc:
        print(f"magicmps: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConvergenceError as exc:
        print(f"magicmps: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except PreconditionError as exc:
        print(f"magicmps: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except MagicMpsError as exc:  # base class, should rarely surface
        print(f"magicmps: error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
