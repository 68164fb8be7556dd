"""Run configuration (``key = value`` files) and CSV output."""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class Key:
    name: str
    kind: type
    default: object
    help: str
    commands: tuple = ("eigs", "squeeze", "oracle")


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


KEYS = (
    Key("mu", float, 1.2, "parametric pump"),
    Key("delta1", float, 1.2, "signal detuning"),
    Key("sigma", int, 1, "pump detuning sign (+1 bright solitons)"),
    Key("kappa", float, 1.0, "nonlinear coupling (drift diffusion only)"),
    Key("branch", str, "plus", "soliton branch: plus or minus"),
    Key("grid.n", int, 512, "grid points (power of two); oracle default 256"),
    Key("grid.length", float, 40.0, "domain length; oracle default 36"),
    Key("omega.max", float, 10.0, "largest frequency"),
    Key("omega.points", int, 401, "frequency samples on [0, omega.max]"),
    Key("seed", int, 0, "random seed", ("oracle",)),
    Key("output", str, "", "output CSV path (default <command>.csv)"),
    Key("lof.kind", str, "momentum",
        "plane-wave, gh1, momentum, w3, hopf-sum or soliton", ("squeeze",)),
    Key("lof.theta", float, None, "plane-wave phase; optimized at omega=0 if unset", ("squeeze",)),
    Key("lof.xi", float, None, "gh1 width; optimized if unset", ("squeeze",)),
    Key("lof.x_shift", float, 0.0, "gh1 displacement", ("squeeze",)),
    Key("detector.sigma", float, None, "normalized detector size width/beta; full beam if unset",
        ("squeeze",)),
    Key("detector.x0", float, 0.0, "detector center", ("squeeze",)),
    Key("sweep.key", str, "none", "none, detector.x0, detector.sigma or mu", ("squeeze",)),
    Key("sweep.start", float, 0.0, "first sweep value", ("squeeze",)),
    Key("sweep.stop", float, 1.0, "last sweep value", ("squeeze",)),
    Key("sweep.points", int, 11, "number of sweep values", ("squeeze",)),
    Key("sweep.omega", float, 0.0, "frequency reported in sweep tables", ("squeeze",)),
    Key("hopf.locate", _bool, False, "move mu to the located Hopf threshold first",
        ("squeeze", "eigs")),
    Key("hopf.mu_min", float, 1.05, "lower end of the Hopf search bracket", ("squeeze", "eigs")),
    Key("hopf.mu_max", float, None, "upper end of the Hopf search bracket (default mu0)",
        ("squeeze", "eigs")),
    Key("oracle.dt", float, 0.2, "sampling step", ("oracle",)),
    Key("oracle.t_total", float, 2000.0, "recorded time per trajectory", ("oracle",)),
    Key("oracle.n_traj", int, 200, "trajectories", ("oracle",)),
    Key("oracle.scheme", str, "exponential", "exponential or euler-maruyama", ("oracle",)),
    Key("oracle.segment", float, 50.0, "periodogram segment length", ("oracle",)),
    Key("oracle.lof", str, "momentum", "comma list of momentum, plane-wave", ("oracle",)),
    Key("oracle.z_max", float, 4.0, "largest accepted per-bin |z|", ("oracle",)),
)

KEY_INDEX = {k.name: k for k in KEYS}

COMMAND_DEFAULTS = {"oracle": {"grid.n": 256, "grid.length": 36.0}}


class RunConfig(dict):
    """Validated configuration for one command; missing keys take defaults."""

    def __init__(self, command, values=None):
        super().__init__()
        self.command = command
        allowed = {k.name for k in KEYS if command in k.commands}
        defaults = COMMAND_DEFAULTS.get(command, {})
        for name in sorted(allowed):
            self[name] = defaults.get(name, KEY_INDEX[name].default)
        for name, raw in (values or {}).items():
            if name not in KEY_INDEX:
                raise InvalidArgumentError(f"unknown key {name!r}")
            if name not in allowed:
                raise InvalidArgumentError(f"key {name!r} does not apply to {command!r}")
            self[name] = _coerce(KEY_INDEX[name], raw)
        self.explicit = frozenset(values or {})

    def header_lines(self):
        return [f"{k} = {_show(v)}" for k, v in sorted(self.items())]


def _coerce(key, raw):
    if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "none")):
        if key.default is None:
            return None
        raise InvalidArgumentError(f"key {key.name!r} needs a value")
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        value = key.kind(raw)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"bad value for {key.name!r}: {raw!r}") from exc
    if key.kind is float and not math.isfinite(value):
        raise InvalidArgumentError(f"{key.name!r} must be finite")
    return value


def _show(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def parse_config_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise InvalidArgumentError(f"line {lineno}: empty key")
        values[key] = value
    return values


def parse_overrides(items):
    values = {}
    for item in items or ():
        if "=" not in item:
            raise InvalidArgumentError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def format_number(x):
    """17 significant digits, '.' decimal point."""
    if isinstance(x, (str, np.str_)):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path, columns, header=()):
    """Write equal-length columns with ``#``-prefixed header lines."""
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    lengths = {len(c) for c in data}
    if len(lengths) > 1:
        raise InvalidArgumentError("CSV columns differ in length")
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*data):
            writer.writerow([format_number(v) for v in row])


def read_csv(path):
    """Read a file written by :func:`write_csv`; returns (header lines, columns)."""
    header = []
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            header.append(line[1:].strip())
        elif line:
            body.append(line)
    rows = list(csv.reader(body))
    names = rows[0]
    cols = {n: [] for n in names}
    for row in rows[1:]:
        for n, v in zip(names, row):
            cols[n].append(v)
    out = {}
    for n, vals in cols.items():
        try:
            out[n] = np.array([float(v) for v in vals])
        except ValueError:
            out[n] = np.array(vals)
    return header, out


def write_lof_csv(path, lof, grid, header=()):
    """LOF dump: x, Re, Im of the upper component."""
    write_csv(path, {"x": grid.x, "re": lof.upper.real, "im": lof.upper.imag}, header)
