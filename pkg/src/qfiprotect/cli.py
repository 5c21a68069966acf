"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import UnidentifiableError, crb, ghz_qfi_exact, logical_ghz_qfi_exact
from .conditions import HermitianExtensionError, check_testable_unitary, error_set_channel
from .core import DimensionError, ParametricFamily, evolve, tensor_product
from .fisher import NotDifferentiableError, SingularOutcomeError, family_qfi, sld_measurement, state_derivative
from .montecarlo import crb_attainment_report
from .noise import DephasingScenario, ghz_probe
from .oracle import ORACLE_MAX_QUBITS, OracleCapError, brute_force_ghz_qfi, brute_force_logical_qfi
from .pauli import PauliOperator, PauliParseError, parse_pauli
from .schemes import immune_errors, immune_scheme, pauli_mixture, plus_state, single_qubit_scheme, x_basis_povm

FIG3_DEFAULTS = {"n_total": 15, "block_size": "1,3,5,15", "omega": 0.001, "gamma_x": 0.001, "gamma_z": 0.5}
FIG3_T_RANGE = (0.01, 20.0, 200)
FIG4_PAIRS = ((5e-4, 5e-3), (1e-3, 1e-2))
FIG4_N_MAX = 150
FIG4_DEFAULTS = {"block_size": "3", "gamma_x": None, "gamma_z": None, "omega": 0.001, "time": 1.0}
SCENARIO_DEFAULTS = {"n_total": 3, "block_size": 1, "gamma_x": 0.0, "gamma_z": 0.0, "omega": 0.0, "time": 1.0}
SHARED_FLOATS = ("gamma_x", "gamma_z", "omega", "time")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# config and validation


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _resolve(args, config: dict, name: str, default, kind):
    value = getattr(args, name, None)
    if value is None:
        value = config.get(name, default)
    if value is None:
        return None
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"--{name.replace('_', '-')}: cannot read {value!r} as {kind.__name__}") from exc


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise UsageError(message)


def resolve_settings(args, defaults: dict | None = None) -> dict:
    """Merge built-in defaults, the config file and explicit flags (flags win)."""
    config = read_config(args.config) if args.config else {}
    known = set(SCENARIO_DEFAULTS) | {"nu", "seed"}
    unknown = set(config) - known - set(vars(args))
    _check(not unknown, f"unknown config keys: {', '.join(sorted(unknown))}")
    base = dict(SCENARIO_DEFAULTS, **(defaults or {}))
    out = {
        "n_total": _resolve(args, config, "n_total", base["n_total"], int),
        "block_size": _resolve(args, config, "block_size", base["block_size"], str),
        "nu": _resolve(args, config, "nu", base.get("nu", 1), int),
        "seed": _resolve(args, config, "seed", 0, int),
    }
    for name in SHARED_FLOATS:
        out[name] = _resolve(args, config, name, base[name], float)
    _check(out["n_total"] >= 1, f"--n-total must be at least 1, got {out['n_total']}")
    _check(out["nu"] >= 1, f"--nu must be a positive repetition count, got {out['nu']}")
    for name in ("gamma_x", "gamma_z"):
        _check(out[name] is None or (math.isfinite(out[name]) and out[name] >= 0), f"--{name.replace('_', '-')} must be a nonnegative rate")
    _check(math.isfinite(out["omega"]), "--omega must be finite")
    _check(math.isfinite(out["time"]) and out["time"] > 0, f"--time must be positive, got {out['time']}")
    try:
        blocks = tuple(int(b) for b in str(out["block_size"]).split(","))
    except ValueError as exc:
        raise UsageError(f"--block-size: expected odd integers separated by commas, got {out['block_size']!r}") from exc
    for b in blocks:
        _check(b >= 1 and b % 2 == 1, f"--block-size entries must be odd and positive, got {b}")
    out["block_size"] = blocks
    return out


# --------------------------------------------------------------------------
# output


def format_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, np.generic):
        return _json_safe(v.item())
    return v


def render(columns, rows, meta: dict, fmt: str) -> str:
    if fmt == "json":
        payload = {"meta": meta, "columns": list(columns), "rows": [dict(zip(columns, r)) for r in rows]}
        return json.dumps(_json_safe(payload), indent=2) + "\n"
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {format_value(value) if not isinstance(value, (list, tuple)) else ','.join(map(format_value, value))}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([format_value(v) for v in r])
    return buf.getvalue()


def emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _meta(command: str, settings: dict, **extra) -> dict:
    meta = {"tool": f"qfiprotect {__version__}", "command": command}
    meta.update({k: v for k, v in settings.items() if v is not None})
    meta.update(extra)
    return meta


def _pool_map(fn, items, workers: int) -> list:
    """Ordered map; results come back in input order regardless of completion order."""
    items = list(items)
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _safe_crb(fisher: float, nu: int) -> float:
    return math.inf if fisher <= 0 else crb(fisher, nu)


# --------------------------------------------------------------------------
# qfi


def _t_grid(t_min: float, t_max: float, points: int, log: bool) -> np.ndarray:
    _check(points >= 1, f"--points must be positive, got {points}")
    _check(0 < t_min <= t_max, f"need 0 < --t-min <= --t-max, got {t_min}, {t_max}")
    if points == 1:
        return np.array([t_min])
    return np.geomspace(t_min, t_max, points) if log else np.linspace(t_min, t_max, points)


def _raw_qfi(s: DephasingScenario) -> float:
    if s.n_total % 2 == 0:
        return math.nan
    return ghz_qfi_exact(s.n_total, s.time, s.omega, s.p_x, s.p_z)


def _logical_qfi(s: DephasingScenario) -> float:
    if s.n_blocks % 2 == 0:
        return math.nan
    return logical_ghz_qfi_exact(s)


def cmd_qfi(args) -> int:
    st = resolve_settings(args)
    times = _t_grid(args.t_min, args.t_max, args.points, args.log) if args.t_min is not None else np.array([st["time"]])
    if args.t_min is None and args.t_max is not None:
        raise UsageError("--t-max needs --t-min")
    points = [(float(t), n) for n in st["block_size"] for t in times]
    for _, n in points:
        _check(st["n_total"] // n >= 1, f"--n-total {st['n_total']} cannot hold a block of {n}")
    if args.oracle:
        for _, n in points:
            used = (st["n_total"] // n) * n
            if max(st["n_total"], used) > ORACLE_MAX_QUBITS:
                raise OracleCapError(f"--oracle supports at most {ORACLE_MAX_QUBITS} qubits, got {st['n_total']}")
        if st["n_total"] % 2 == 0:
            raise UsageError("--oracle compares with the closed form, which needs an odd --n-total")

    def row(point):
        t, n = point
        s = DephasingScenario(st["n_total"], n, st["gamma_x"], st["gamma_z"], st["omega"], t)
        raw, logical = _raw_qfi(s), _logical_qfi(s)
        out = [t, n, raw, logical, _crb_or_nan(raw, st["nu"]), _crb_or_nan(logical, st["nu"])]
        if args.oracle:
            out.append(brute_force_ghz_qfi(s.n_total, t, s.omega, s.p_x, s.p_z))
            out.append(brute_force_logical_qfi(s) if s.n_blocks % 2 == 1 else math.nan)
        return out

    columns = ["t", "n", "qfi_raw", "qfi_logical", "crb_raw", "crb_logical"]
    if args.oracle:
        columns += ["qfi_raw_oracle", "qfi_logical_oracle"]
    rows = _pool_map(row, points, args.workers)
    emit(render(columns, rows, _meta("qfi", st), args.format), args.output)
    return 0


def _crb_or_nan(f: float, nu: int) -> float:
    return math.nan if math.isnan(f) else _safe_crb(f, nu)


# --------------------------------------------------------------------------
# check


def read_pauli_list(text: str, source: str) -> list[PauliOperator]:
    """Pauli strings separated by commas or newlines; parse errors carry line and column."""
    out = []
    for lineno, line in enumerate(text.splitlines() or [""], 1):
        body = line.split("#", 1)[0]
        col = 0
        for piece in body.split(","):
            stripped = piece.strip()
            start = col + (len(piece) - len(piece.lstrip()))
            col += len(piece) + 1
            if not stripped:
                continue
            try:
                out.append(parse_pauli(stripped))
            except PauliParseError as exc:
                raise UsageError(f"{source}:{lineno}:{start + exc.column}: {exc.message}") from exc
    if not out:
        raise UsageError(f"{source}: no Pauli strings given")
    return out


def _build_probe(spec: str, n: int) -> np.ndarray:
    if spec == "plus":
        return plus_state(n)
    if spec == "ghz":
        return ghz_probe(n)
    if spec == "zero":
        return tensor_product(*[np.array([1, 0], dtype=complex)] * n)
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"--probe must be plus, ghz, zero or an existing .npy/.txt file, got {spec!r}")
    data = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, dtype=complex)
    return np.asarray(data, dtype=complex)


def _build_generator(spec: str, n: int) -> np.ndarray:
    if spec == "collective-z":
        return sum(PauliOperator.single("Z", j, n).to_matrix() for j in range(n)) / 2
    try:
        op = parse_pauli(spec)
    except PauliParseError as exc:
        raise UsageError(f"--generator: column {exc.column + 1}: {exc}") from exc
    if not op.is_hermitian:
        raise UsageError(f"--generator {spec} is not Hermitian")
    return op.to_matrix()


def cmd_check(args) -> int:
    if args.errors_file:
        try:
            text = Path(args.errors_file).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {args.errors_file}: {exc.strerror}") from exc
        errors = read_pauli_list(text, args.errors_file)
    elif args.errors:
        errors = read_pauli_list(args.errors, "--errors")
    else:
        raise UsageError("give --errors or --errors-file")
    n = errors[0].n
    for e in errors:
        if e.n != n:
            raise DimensionError(f"Pauli strings act on {n} and {e.n} qubits")
    if args.builder == "theorem3":
        _check(n % 2 == 1, f"theorem3 builder needs an odd qubit count, got {n}")
        family = immune_scheme(n)
    else:
        probe = _build_probe(args.probe, n)
        gen = _build_generator(args.generator, n)
        family = ParametricFamily(probe, gen)
    if family.dim != 2**n:
        raise DimensionError(f"probe has dimension {family.dim}, error strings act on {n} qubits")
    if args.identity and all(e.weight > 0 or e.phase % 4 != 0 for e in errors):
        errors = [PauliOperator.identity(n)] + errors
    mats = [e.to_matrix() for e in errors]
    if not family.is_pure:
        raise UsageError("check needs a pure probe")
    report = check_testable_unitary(family.probe, family.generator, mats, theta=args.theta)
    channel = error_set_channel(mats)
    before = family_qfi(family, args.theta)
    after = family_qfi(family, args.theta, channel)
    payload = {
        "errors": [str(e) for e in errors],
        "cond_i": report.cond_i,
        "cond_ii": report.cond_ii,
        "preserved": report.preserved,
        "residuals": {"cond_i": report.cond_i_residual, "cond_ii": report.cond_ii_residual},
        "qfi_before": before,
        "qfi_after": after,
    }
    emit(json.dumps(_json_safe(payload), indent=2) + "\n", args.output)
    return 0


# --------------------------------------------------------------------------
# immune-set


def cmd_immune_set(args) -> int:
    n = args.n
    _check(n >= 1 and n % 2 == 1, f"n must be odd and positive (n = 2t+1), got {n}")
    labels = [str(e) for e in immune_errors(n)]
    if args.format == "json":
        text = json.dumps({"n": n, "t": (n - 1) // 2, "errors": labels}, indent=2) + "\n"
    else:
        text = "\n".join(labels) + "\n"
    emit(text, args.output)
    return 0


# --------------------------------------------------------------------------
# figure


def figure3_rows(st: dict, blocks, times, workers: int = 1) -> list:
    def row(point):
        t, n = point
        s = DephasingScenario(st["n_total"], n, st["gamma_x"], st["gamma_z"], st["omega"], t)
        f = _logical_qfi(s)
        return [t, n, _crb_or_nan(f, st["nu"])]

    return _pool_map(row, [(float(t), n) for n in blocks for t in times], workers)


def figure4_n_grid(n_max: int = FIG4_N_MAX, block: int = 3) -> list[int]:
    """Odd multiples of ``block`` (odd block count keeps the closed form valid)."""
    return [n for n in range(block, n_max + 1, 2 * block)]


def figure4_rows(st: dict, pairs, n_values, block: int = 3, workers: int = 1) -> list:
    def rows_for(n):
        out = []
        for gx, gz in pairs:
            tag = f"gx={format_value(gx)};gz={format_value(gz)}"
            for kind, size in (("raw", 1), (f"logical-n{block}", block)):
                s = DephasingScenario(n, size, gx, gz, st["omega"], st["time"])
                f = _raw_qfi(s) if size == 1 else _logical_qfi(s)
                out.append([n, f"{kind}:{tag}", _crb_or_nan(f, st["nu"]), 1 / n, 1 / math.sqrt(n), block / n])
        return out

    return [r for chunk in _pool_map(rows_for, n_values, workers) for r in chunk]


def cmd_figure(args) -> int:
    if args.which == "3":
        st = resolve_settings(args, FIG3_DEFAULTS)
        blocks = st["block_size"]
        lo = args.t_min if args.t_min is not None else FIG3_T_RANGE[0]
        hi = args.t_max if args.t_max is not None else FIG3_T_RANGE[1]
        pts = args.points if args.points is not None else FIG3_T_RANGE[2]
        times = _t_grid(lo, hi, pts, True)
        rows = figure3_rows(st, blocks, times, args.workers)
        meta = _meta("figure 3", st, t_grid=f"geomspace({format_value(lo)}, {format_value(hi)}, {pts})")
        emit(render(["t", "n", "crb"], rows, meta, args.format), args.output)
        return 0
    st = resolve_settings(args, FIG4_DEFAULTS)
    if st["gamma_x"] is None and st["gamma_z"] is None:
        pairs = FIG4_PAIRS
    else:
        pairs = ((st["gamma_x"] or 0.0, st["gamma_z"] or 0.0),)
    block = st["block_size"][0]
    n_values = figure4_n_grid(args.n_max, block)
    _check(n_values, f"--n-max {args.n_max} leaves no odd multiple of {block}")
    rows = figure4_rows(st, pairs, n_values, block, args.workers)
    meta = _meta("figure 4", st, noise_pairs=[f"{format_value(a)}/{format_value(b)}" for a, b in pairs], n_grid=f"odd multiples of {block} up to {args.n_max}")
    columns = ["N", "scenario", "crb", "inv_n", "inv_sqrt_n", f"{block}_over_n"]
    emit(render(columns, rows, meta, args.format), args.output)
    return 0


# --------------------------------------------------------------------------
# montecarlo


def cmd_montecarlo(args) -> int:
    st = resolve_settings(args, {"n_total": 3, "nu": 10_000})
    nu = st["nu"]
    _check(args.trials >= 2, f"--trials must be at least 2, got {args.trials}")
    _check(0 <= args.noise <= 1, f"--noise must be a probability, got {args.noise}")
    theta = args.theta
    if args.scheme == "single":
        family = single_qubit_scheme(st["time"])
        povm = sld_measurement(evolve(family, theta), state_derivative(family, theta))
        report = crb_attainment_report(family, povm, theta, nu, args.trials, st["seed"], scenario="single-qubit", workers=args.workers)
    else:
        n = st["n_total"]
        _check(n % 2 == 1, f"immune scheme needs an odd --n-total, got {n}")
        family = immune_scheme(n, st["time"])
        errs = [PauliOperator.identity(n)] + [PauliOperator.single("Z", j, n) for j in range(n)]
        channel = pauli_mixture(errs, [1 - args.noise] + [args.noise / n] * n)
        # |psi(theta)> depends on theta only through cos^2: restrict to one branch
        interval = (0.0, math.pi / (2 * st["time"]))
        _check(interval[0] < theta < interval[1], f"--theta must lie in {interval} for the immune scheme")
        report = crb_attainment_report(
            family, x_basis_povm(n), theta, nu, args.trials, st["seed"], channel=channel,
            search_interval=interval, scenario=f"immune-n{n}-z{format_value(args.noise)}", workers=args.workers,
        )
    emit(json.dumps(_json_safe(report.to_dict()), indent=2) + "\n", args.output)
    return 0


# --------------------------------------------------------------------------
# parser


def _shared_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("scenario")
    g.add_argument("--n-total", type=int, help="total number of qubits N")
    g.add_argument("--block-size", help="phase-flip block size n (odd); comma list allowed for qfi")
    g.add_argument("--gamma-x", type=float, help="transverse (bit-flip) rate")
    g.add_argument("--gamma-z", type=float, help="parallel (phase-flip) rate")
    g.add_argument("--omega", type=float, help="signal frequency")
    g.add_argument("--time", type=float, help="interrogation time")
    g.add_argument("--nu", type=int, help="repetitions in the Cramer-Rao bound")
    g.add_argument("--seed", type=int, help="random seed")
    g.add_argument("--config", help="flat key=value file; flags override it")
    o = p.add_argument_group("output")
    o.add_argument("--output", help="write here instead of stdout")
    o.add_argument("--format", choices=("csv", "json"), default="csv")
    o.add_argument("--workers", type=int, default=1, help="worker threads for grid evaluation")
    o.add_argument("--oracle", action="store_true", help="add brute-force columns (N <= 9)")
    return p


def build_parser() -> argparse.ArgumentParser:
    shared = _shared_flags()
    parser = _Parser(prog="qfiprotect", description="QFI preservation under noise: analysis and figure data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("qfi", parents=[shared], help="closed-form QFI and CRB of the raw and logical GHZ schemes")
    q.add_argument("--t-min", type=float)
    q.add_argument("--t-max", type=float)
    q.add_argument("--points", type=int, default=50)
    q.add_argument("--log", action="store_true", help="log-spaced t grid")
    q.set_defaults(func=cmd_qfi)

    c = sub.add_parser("check", parents=[shared], help="test whether an error set preserves QFI")
    c.add_argument("--builder", choices=("theorem3", "custom"), default="custom")
    c.add_argument("--probe", default="plus", help="plus, ghz, zero, or a .npy/.txt amplitude file")
    c.add_argument("--generator", default="collective-z", help="Pauli string or collective-z")
    c.add_argument("--errors", help="comma-separated Pauli strings, e.g. ZII,IZI,IIZ,XXX")
    c.add_argument("--errors-file", help="file of Pauli strings, one per line or comma-separated")
    c.add_argument(
        "--theta", type=float, default=0.3,
        help="parameter value; theta = 0 is degenerate for schemes whose errors map theta to -theta",
    )
    c.add_argument("--no-identity", dest="identity", action="store_false", help="do not add the no-error operator")
    c.set_defaults(func=cmd_check)

    i = sub.add_parser("immune-set", parents=[shared], help="errors the n-qubit phase-flip scheme is immune to")
    i.add_argument("n", type=int, help="code length n = 2t+1")
    i.set_defaults(func=cmd_immune_set)

    f = sub.add_parser("figure", parents=[shared], help="data behind the CRB-vs-time and CRB-vs-N figures")
    f.add_argument("which", choices=("3", "4"))
    f.add_argument("--t-min", type=float)
    f.add_argument("--t-max", type=float)
    f.add_argument("--points", type=int)
    f.add_argument("--n-max", type=int, default=FIG4_N_MAX)
    f.set_defaults(func=cmd_figure)

    m = sub.add_parser("montecarlo", parents=[shared], help="MLE experiments against the Cramer-Rao bound")
    m.add_argument("--scheme", choices=("single", "immune"), default="single")
    m.add_argument("--trials", type=int, default=200)
    m.add_argument("--theta", type=float, default=0.3)
    m.add_argument("--noise", type=float, default=0.3, help="total weight-1 Z error probability (immune scheme)")
    m.set_defaults(func=cmd_montecarlo)
    return parser


NUMERICAL_ERRORS = (
    OracleCapError,
    UnidentifiableError,
    NotDifferentiableError,
    SingularOutcomeError,
    HermitianExtensionError,
    np.linalg.LinAlgError,
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1:
        parser.error(f"--workers must be positive, got {args.workers}")
    try:
        return args.func(args)
    except NUMERICAL_ERRORS as exc:
        print(f"qfiprotect: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (UsageError, DimensionError, ValueError) as exc:
        print(f"qfiprotect: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
