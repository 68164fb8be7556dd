"""Command-line front end: ``cavsqueeze {eigs,squeeze,oracle}``.

Exit codes: 0 success, 1 oracle disagreement, 2 parameter or existence
error, 3 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidArgumentError, NumericalError
from .io import KEYS, RunConfig, parse_config_text, parse_overrides, write_csv
from .linop import find_hopf_threshold
from .model import ModelParams, frequency_axis, make_grid
from .oracle import SdeConfig, compare_with_analytic, position_variance_fit, simulate_grid
from .pipeline import analyze, default_hopf_bracket, detector_window, make_lof
from .spectra import (
    drift_diffusion,
    optimize_lof_phase,
    squeezing_spectrum,
    squeezing_spectrum_detector,
)

logger = logging.getLogger("cavsqueeze")

EXIT_OK, EXIT_MISMATCH, EXIT_ARGS, EXIT_NUMERICAL = 0, 1, 2, 3


def _keys_help():
    lines = ["configuration keys (key = value in --config files, or --set key=value):"]
    for k in KEYS:
        default = "unset" if k.default is None else k.default
        cmds = ",".join(k.commands)
        lines.append(f"  {k.name:<16} [{cmds}] {k.help} (default: {default})")
    return "\n".join(lines)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cavsqueeze",
        description="Quantum fluctuations of the bright cavity soliton in the linear approximation.",
        epilog=_keys_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "eigs": "eigenvalues and tagged mode table",
        "squeeze": "squeezing / intensity spectra and detector sweeps",
        "oracle": "stochastic cross-check of the analytic spectra",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text, epilog=_keys_help(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("-c", "--config", type=Path, help="key = value configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration key (repeatable)")
        p.add_argument("-o", "--output", help="output CSV path (same as the output key)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config(command, config_path=None, overrides=(), output=None):
    values = {}
    if config_path is not None:
        try:
            text = Path(config_path).read_text()
        except OSError as exc:
            raise InvalidArgumentError(f"cannot read config: {exc}") from exc
        values.update(parse_config_text(text))
    values.update(parse_overrides(overrides))
    if output:
        values["output"] = output
    cfg = RunConfig(command, values)
    # re-validate the physics at parse time
    ModelParams(cfg["mu"], cfg["delta1"], cfg["sigma"], cfg["kappa"])
    make_grid(cfg["grid.n"], cfg["grid.length"])
    if cfg["omega.max"] <= 0 or cfg["omega.points"] < 2:
        raise InvalidArgumentError("need omega.max > 0 and omega.points >= 2")
    return cfg


def _output_path(cfg):
    return Path(cfg["output"] or f"{cfg.command}.csv")


def _params(cfg, mu=None):
    return ModelParams(cfg["mu"] if mu is None else mu, cfg["delta1"], cfg["sigma"], cfg["kappa"])


def _grid(cfg):
    return make_grid(cfg["grid.n"], cfg["grid.length"])


def _maybe_locate_hopf(cfg, header):
    if not cfg.get("hopf.locate"):
        return None
    bracket = default_hopf_bracket(cfg["delta1"], cfg["hopf.mu_min"], cfg["hopf.mu_max"])
    hopf = find_hopf_threshold(cfg["delta1"], bracket, _grid(cfg))
    header += [f"mu_HB = {hopf.mu!r}", f"omega_HB = {hopf.omega!r}"]
    logger.info("Hopf threshold mu_HB = %.9f, omega_HB = %.6f", hopf.mu, hopf.omega)
    return hopf.mu


def cmd_eigs(cfg):
    header = [f"cavsqueeze {__version__} eigs"] + cfg.header_lines()
    mu = _maybe_locate_hopf(cfg, header)
    a = analyze(_params(cfg, mu), _grid(cfg), cfg["branch"])
    es = a.eigsys
    lmat, ldag = a.operators
    g = es.index("goldstone")
    m = es.index("momentum")
    v1 = es.right[:, g]
    w2 = es.left[:, m]
    res_g = float(np.abs(lmat.matrix @ v1).max() / np.abs(v1).max())
    res_m = float(np.abs(ldag.matrix @ w2 + 2 * w2).max() / np.abs(w2).max())
    header += [
        f"goldstone_residual = {res_g!r}",
        f"momentum_residual = {res_m!r}",
        f"inverse_route_discrepancy = {es.diagnostics['inverse_route']!r}",
    ]
    out = _output_path(cfg)
    idx = np.arange(len(es))
    write_csv(out, {
        "index": idx,
        "re": es.eigenvalues.real,
        "im": es.eigenvalues.imag,
        "tag": np.array(es.tags),
        "parity": es.parity,
        "localization": es.localization,
        "mirror": es.mirror,
    }, header)
    tagged = np.array([t != "generic" for t in es.tags])
    modes_out = out.with_name(out.stem + "_modes" + out.suffix)
    write_csv(modes_out, {
        "index": idx[tagged],
        "re": es.eigenvalues.real[tagged],
        "im": es.eigenvalues.imag[tagged],
        "tag": np.array(es.tags)[tagged],
        "parity": es.parity[tagged],
    }, header)
    print(f"goldstone residual {res_g:.3e}; momentum residual {res_m:.3e}")
    print(f"wrote {out} and {modes_out}")
    return EXIT_OK


def _spectrum_for(a, cfg, window, omega):
    lof, info, relaxed = make_lof(cfg["lof.kind"], a, cfg["lof.theta"], cfg["lof.xi"],
                                  cfg["lof.x_shift"], window, cfg["sweep.omega"])
    if window is None:
        res = squeezing_spectrum(a.eigsys, a.D, lof, omega, relaxed=relaxed, metadata=info)
    else:
        res = squeezing_spectrum_detector(a.eigsys, a.D, lof, window, omega,
                                          relaxed=relaxed, metadata=info)
    return res


def cmd_squeeze(cfg):
    header = [f"cavsqueeze {__version__} squeeze"] + cfg.header_lines()
    mu = _maybe_locate_hopf(cfg, header)
    out = _output_path(cfg)
    sweep = cfg["sweep.key"]
    if sweep == "none":
        a = analyze(_params(cfg, mu), _grid(cfg), cfg["branch"])
        window = detector_window(a, cfg["detector.sigma"], cfg["detector.x0"])
        omega = frequency_axis(cfg["omega.max"], cfg["omega.points"])
        res = _spectrum_for(a, cfg, window, omega)
        header += [f"lof_{k} = {v}" for k, v in sorted(res.metadata.items())]
        header.append(f"imag_residual = {res.imag_residual!r}")
        write_csv(out, {"omega": res.omega, "S": res.values}, header)
        print(f"min S = {res.minimum:.6f} at Omega = {res.omega[res.argmin]:.4f}; wrote {out}")
        return EXIT_OK

    if sweep not in ("detector.x0", "detector.sigma", "mu"):
        raise InvalidArgumentError(f"sweep.key must be none, detector.x0, detector.sigma or mu")
    values = np.linspace(cfg["sweep.start"], cfg["sweep.stop"], cfg["sweep.points"])
    w0 = np.array([cfg["sweep.omega"]])
    a = None if sweep == "mu" else analyze(_params(cfg, mu), _grid(cfg), cfg["branch"])
    s_vals, thetas = [], []
    for v in values:
        if sweep == "mu":
            a = analyze(_params(cfg, float(v)), _grid(cfg), cfg["branch"])
            window = detector_window(a, cfg["detector.sigma"], cfg["detector.x0"])
        elif sweep == "detector.x0":
            window = detector_window(a, cfg["detector.sigma"] or 1.0, float(v))
        else:
            window = detector_window(a, float(v), cfg["detector.x0"])
        res = _spectrum_for(a, cfg, window, w0)
        s_vals.append(res.values[0])
        thetas.append(res.metadata.get("theta", np.nan))
    cols = {sweep: values, "S": np.array(s_vals)}
    if cfg["lof.kind"] == "plane-wave":
        cols["theta"] = np.array(thetas)
    write_csv(out, cols, header)
    print(f"wrote {out} ({len(values)} sweep points)")
    return EXIT_OK


def cmd_oracle(cfg):
    header = [f"cavsqueeze {__version__} oracle"] + cfg.header_lines()
    names = [s.strip() for s in cfg["oracle.lof"].split(",") if s.strip()]
    for nm in names:
        if nm not in ("momentum", "plane-wave"):
            raise InvalidArgumentError(f"oracle.lof entries must be momentum or plane-wave, got {nm!r}")
    sde = SdeConfig(cfg["oracle.dt"], cfg["oracle.t_total"], cfg["oracle.n_traj"],
                    cfg["seed"], cfg["oracle.scheme"])
    seg = int(round(cfg["oracle.segment"] / sde.dt))
    a = analyze(_params(cfg), _grid(cfg), cfg["branch"])
    lofs = {nm: make_lof(nm, a)[0] for nm in names}
    sim = simulate_grid(a.profile, a.operators, sde, lofs, omega_max=cfg["omega.max"])
    cols = {k: [] for k in ("lof", "omega", "S_sim", "stderr", "S_expected", "S_analytic", "z")}
    worst = 0.0
    for nm in names:
        lof = lofs[nm]
        cmp = compare_with_analytic(
            sim, nm, a.eigsys, a.D, lof, seg, cfg["omega.max"],
            lambda w, lof=lof: squeezing_spectrum(a.eigsys, a.D, lof, w).values,
        )
        worst = max(worst, cmp.max_abs_z)
        n = len(cmp.omega)
        cols["lof"] += [nm] * n
        cols["omega"] += list(cmp.omega)
        cols["S_sim"] += list(cmp.estimate)
        cols["stderr"] += list(cmp.stderr)
        cols["S_expected"] += list(cmp.expected)
        cols["S_analytic"] += list(cmp.analytic)
        cols["z"] += list(cmp.z)
        print(f"{nm}: max |z| = {cmp.max_abs_z:.3f} over {n} bins")
    fit = position_variance_fit(sim.position, sde.dt, cfg["oracle.segment"])
    d_pred = drift_diffusion(a.eigsys, a.alpha0, a.params)
    header += [
        f"max_abs_z = {worst!r}",
        f"drift_predicted = {d_pred!r}",
        f"drift_fit_slope = {fit.slope!r}",
        f"drift_fit_r2 = {fit.r_squared!r}",
    ]
    out = _output_path(cfg)
    write_csv(out, {k: np.array(v) for k, v in cols.items()}, header)
    print(f"drift: predicted {d_pred:.6g}, simulated {fit.slope:.6g} (R^2 {fit.r_squared:.4f})")
    print(f"wrote {out}")
    return EXIT_OK if worst < cfg["oracle.z_max"] else EXIT_MISMATCH


COMMANDS = {"eigs": cmd_eigs, "squeeze": cmd_squeeze, "oracle": cmd_oracle}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.command, args.config, args.set, args.output)
        return COMMANDS[args.command](cfg)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
