"""Command-line front end.

Verbs: ``list``, ``melnikov-scan``, ``obstruction``, ``zero-find``,
``verify`` and ``oracle-compare``.  Parameters come from a named preset, a
flat ``key=value`` config file and command-line flags, in increasing order
of precedence.

Exit codes: 0 on success, 2 when some grid point or shooting run did not
converge (outputs are still written, with per-point flags), 1 on errors.
"""

from __future__ import annotations

import json
import math
import sys
from typing import Dict, Optional

import click
import numpy as np

from . import __version__
from .errors import ConfigError, MelnikovLabError
from .io import csv_text, json_text, read_config, write_text
from .systems import SYSTEMS, get_system

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------

class Grid:
    """``start:stop:count`` (inclusive, ``count >= 2``) or a single value."""

    def __init__(self, values: np.ndarray, spec: str):
        self.values = values
        self.spec = spec

    @classmethod
    def parse(cls, key: str, text: str) -> "Grid":
        s = str(text).strip()
        parts = s.split(":")
        try:
            if len(parts) == 1:
                return cls(np.array([float(parts[0])]), s)
            if len(parts) != 3:
                raise ValueError
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"{key}: expected start:stop:count or a number, got {s!r}") from None
        if count < 2:
            raise ConfigError(f"{key}: grid count must be at least 2, got {count}")
        if not (math.isfinite(start) and math.isfinite(stop)):
            raise ConfigError(f"{key}: grid bounds must be finite")
        return cls(np.linspace(start, stop, count), s)


def _positive_float(key, text):
    v = float(text)
    if not v > 0:
        raise ConfigError(f"{key}: must be positive, got {text!r}")
    return v


def _sign(key, text):
    s = str(text).strip()
    if s in ("+", "+1", "1"):
        return 1
    if s in ("-", "-1"):
        return -1
    raise ConfigError(f"{key}: expected + or -, got {text!r}")


def _case(key, text):
    try:
        parts = tuple(int(p) for p in str(text).split(","))
    except ValueError:
        raise ConfigError(f"{key}: expected j,k,ell, got {text!r}") from None
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected three integers j,k,ell, got {text!r}")
    return parts


def _choice(*options):
    def conv(key, text):
        s = str(text).strip()
        if s not in options:
            raise ConfigError(f"{key}: expected one of {', '.join(options)}, got {text!r}")
        return s
    return conv


def _float(key, text):
    return float(text)


def _int(key, text):
    v = float(text)
    if v != int(v):
        raise ConfigError(f"{key}: expected an integer, got {text!r}")
    return int(v)


def _grid(key, text):
    return Grid.parse(key, text)


# key -> (converter, help)
PARAMS = {
    "a": (_int, "Duffing sign a (+1 or -1)"),
    "beta": (_float, "Duffing forcing amplitude"),
    "delta": (_float, "Duffing damping"),
    "omega": (_positive_float, "Duffing forcing frequency"),
    "kind": (_choice("homoclinic", "subharmonic"), "Duffing Melnikov function"),
    "family": (_choice("q+", "q-", "outer", "gamma"), "Duffing periodic family"),
    "sign": (_sign, "branch sign (+ or -)"),
    "m": (_int, "resonance numerator m"),
    "l": (_int, "resonance denominator l"),
    "tau": (_grid, "time-shift grid start:stop:count"),
    "epsilon": (_positive_float, "perturbation size for verify"),
    "omega0": (_positive_float, "pendula oscillator frequency"),
    "I": (_positive_float, "pendula action"),
    "theta0": (_grid, "pendula phase grid"),
    "alpha": (_grid, "pendula time-offset grid"),
    "K": (_int, "number of nested windows"),
    "target": (_float, "angle defining the time sequence"),
    "tol": (_positive_float, "window convergence tolerance"),
    "I1": (_positive_float, "rigid-body moment I1"),
    "I2": (_positive_float, "rigid-body moment I2"),
    "I3": (_positive_float, "rigid-body moment I3"),
    "beta0": (_float, "rigid-body gain beta0"),
    "beta1": (_float, "gain beta1 (rigid body or beam)"),
    "beta2": (_float, "gain beta2 (rigid body or beam)"),
    "beta3": (_float, "rigid-body gain beta3"),
    "c": (_positive_float, "energy level or orbit amplitude"),
    "integral": (_choice("F", "F~"), "first integral (rigid body: F or F~)"),
    "omega1": (_positive_float, "beam frequency omega1"),
    "omega2": (_positive_float, "beam frequency omega2"),
    "case": (_case, "beam case j,k,ell"),
}

SYSTEM_KEYS = {
    "duffing": ("a", "beta", "delta", "omega", "kind", "family", "sign", "m", "l", "tau",
                "epsilon"),
    "pendula": ("omega0", "I", "theta0", "alpha", "K", "target", "tol"),
    "rigidbody": ("I1", "I2", "I3", "beta0", "beta1", "beta2", "beta3", "c", "integral",
                  "epsilon"),
    "beam": ("omega1", "omega2", "beta1", "beta2", "c", "case"),
}

PRESETS: Dict[str, Dict[str, Dict[str, str]]] = {
    "duffing": {
        "homoclinic": {"a": "1", "beta": "1", "delta": "1", "omega": "1", "kind": "homoclinic",
                       "tau": "0:6.283185307179586:64"},
        "subharmonic": {"a": "1", "beta": "1", "delta": "1", "omega": "1",
                        "kind": "subharmonic", "m": "1", "l": "1",
                        "tau": "0:6.283185307179586:64"},
        "soft": {"a": "-1", "beta": "1", "delta": "0.1", "omega": "2", "kind": "subharmonic",
                 "m": "1", "l": "1", "tau": "0:3.141592653589793:33", "epsilon": "0.001"},
    },
    "pendula": {
        "default": {"omega0": "1", "I": "1", "theta0": "0:6.283185307179586:9",
                    "alpha": "-2:2:5", "K": "3", "target": "0", "tol": "1e-4"},
    },
    "rigidbody": {name: {"c": "1", "integral": "F", "epsilon": "0.001"}
                  for name in ("zero-mean", "one-plus-sin", "cos-squared", "reference")},
    "beam": {
        "default": {"omega1": "1", "omega2": "2", "beta1": "1", "beta2": "1", "c": "1"},
    },
}

DEFAULT_PRESET = {"duffing": "homoclinic", "pendula": "default", "rigidbody": "one-plus-sin",
                  "beam": "default"}


def resolve_params(system: str, preset: Optional[str], config_path: Optional[str],
                   flags: Dict[str, object]) -> Dict[str, object]:
    """Merge preset < config file < flags and convert every value.

    Raises
    ------
    ConfigError
        Naming the offending key for unknown or inapplicable parameters and
        malformed values.
    """
    if system not in SYSTEM_KEYS:
        raise ConfigError(f"system: unknown system {system!r}; expected one of "
                          f"{', '.join(SYSTEM_KEYS)}")
    name = preset or DEFAULT_PRESET[system]
    if name not in PRESETS[system]:
        raise ConfigError(f"preset: unknown preset {name!r} for {system}; expected one of "
                          f"{', '.join(PRESETS[system])}")
    raw: Dict[str, object] = dict(PRESETS[system][name])
    if config_path:
        for key, value in read_config(config_path).items():
            if key not in PARAMS:
                raise ConfigError(f"{key}: unknown parameter in {config_path}")
            if key not in SYSTEM_KEYS[system]:
                raise ConfigError(f"{key}: parameter does not apply to system {system!r}")
            raw[key] = value
    for key, value in flags.items():
        if value is None:
            continue
        if key not in SYSTEM_KEYS[system]:
            raise ConfigError(f"{key}: parameter does not apply to system {system!r}")
        raw[key] = value
    out: Dict[str, object] = {"preset": name}
    for key, value in raw.items():
        conv = PARAMS[key][0]
        try:
            out[key] = conv(key, value)
        except ConfigError:
            raise
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: invalid value {value!r}") from None
    return out


def _param_options(fn):
    for key in reversed(list(PARAMS)):
        fn = click.option(f"--{key}", key, type=str, default=None, help=PARAMS[key][1])(fn)
    return fn


def _common_options(fn):
    fn = _param_options(fn)
    fn = click.option("--figure", type=click.Path(dir_okay=False), default=None,
                      help="Also save a quick-look PNG (needs matplotlib).")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
                      show_default=True, help="Output format.")(fn)
    fn = click.option("--out", type=click.Path(dir_okay=False), default=None,
                      help="Output file (default: standard output).")(fn)
    fn = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                      help="Flat key=value parameter file.")(fn)
    fn = click.option("--preset", default=None, help="Named parameter set.")(fn)
    fn = click.option("--system", required=True,
                      type=click.Choice([s.id for s in SYSTEMS]), help="System id.")(fn)
    return fn


def _split(kwargs):
    meta = {k: kwargs.pop(k) for k in ("system", "preset", "config_path", "out", "fmt", "figure")}
    return meta, kwargs


# --------------------------------------------------------------------------
# builders
# --------------------------------------------------------------------------

def _duffing_cfg(p):
    from .systems.duffing import DuffingConfig

    return DuffingConfig(a=p.get("a", 1), beta=p.get("beta", 1.0), delta=p.get("delta", 1.0),
                         omega=p.get("omega", 1.0))


def _pendula_cfg(p):
    from .systems.pendula import PendulaConfig

    return PendulaConfig(omega0=p.get("omega0", 1.0))


def _rigid_cfg(p):
    from .systems.rigidbody import preset

    over = {k: p[k] for k in ("I1", "I2", "I3", "beta0", "beta1", "beta2", "beta3") if k in p}
    return preset(p["preset"], **over)


def _beam_cfg(p):
    from .systems.beam import BeamConfig

    return BeamConfig(omega1=p.get("omega1", 1.0), omega2=p.get("omega2", 2.0),
                      beta1=p.get("beta1", 1.0), beta2=p.get("beta2", 1.0))


def _grid_of(p, key, default):
    g = p.get(key)
    return default if g is None else g.values


def _pendula_grid(p):
    th = _grid_of(p, "theta0", np.array([0.0]))
    al = _grid_of(p, "alpha", np.array([0.0]))
    I = p.get("I", 1.0)
    return np.array([(I, t, a) for a in al for t in th])


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _emit(text: str, out: Optional[str]):
    write_text(text, out, None if out else sys.stdout)


def _curve_table(curve):
    return curve.header(), list(curve.rows())


def _emit_table(header, rows, fmt, out, extra=None):
    if fmt == "csv":
        _emit(csv_text(header, rows), out)
    else:
        doc = {"columns": list(header), "rows": [list(r) for r in rows]}
        if extra:
            doc.update(extra)
        _emit(json_text(doc), out)


def _maybe_figure(path, p, system, result):
    if not path:
        return
    from . import plotting

    if system == "duffing":
        plotting.plot_curve(path, result.curve.params, result.curve.values, result.reference)
    elif system == "pendula":
        g = result.curve.params
        plotting.plot_vector(path, g[:, 1], g[:, 2], result.curve.values)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="melnikov-lab")
def cli():
    """Numerical Melnikov functions and obstruction integrals."""


@cli.command("list")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def list_systems(as_json):
    """List the bundled systems, their orbit families and parameters."""
    if as_json:
        doc = [dict(s.to_dict(), presets=list(PRESETS[s.id]), keys=list(SYSTEM_KEYS[s.id]))
               for s in SYSTEMS]
        click.echo(json.dumps(doc, indent=2, sort_keys=True))
        return
    rows = [("system", "dim", "families", "parameters")]
    for s in SYSTEMS:
        rows.append((s.id, str(s.dimension), ",".join(s.families), ",".join(SYSTEM_KEYS[s.id])))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    for r in rows:
        click.echo("  ".join(r[i].ljust(widths[i]) for i in range(3)) + "  " + r[3])


def _scan(system, p, workers=None):
    from . import experiments as ex

    if system == "duffing":
        taus = _grid_of(p, "tau", None)
        if taus is None:
            raise ConfigError("tau: a time-shift grid is required")
        return ex.duffing_scan(_duffing_cfg(p), p.get("kind", "homoclinic"), taus,
                               family=p.get("family"), sign=p.get("sign", 1), m=p.get("m", 1),
                               l=p.get("l", 1), workers=workers)
    if system == "pendula":
        return ex.pendula_scan(_pendula_cfg(p), _pendula_grid(p), K=p.get("K", 3),
                               target=p.get("target", 0.0), tol=p.get("tol", 1e-4),
                               workers=workers)
    raise ConfigError(f"system: {system} has no Melnikov function; use the obstruction verb")


@cli.command("melnikov-scan")
@_common_options
def melnikov_scan(**kwargs):
    """Evaluate a Melnikov function (duffing) or vector (pendula) on a grid."""
    meta, flags = _split(kwargs)
    p = resolve_params(meta["system"], meta["preset"], meta["config_path"], flags)
    res = _scan(meta["system"], p)
    header, rows = _curve_table(res.curve)
    _emit_table(header, rows, meta["fmt"], meta["out"], {"meta": res.curve.meta})
    _maybe_figure(meta["figure"], p, meta["system"], res)
    if not res.curve.all_converged:
        raise _NotConverged(f"{int(np.sum(~res.curve.converged))} grid points did not converge")


@cli.command("obstruction")
@_common_options
def obstruction(**kwargs):
    """Obstruction integrals of first integrals or commuting fields."""
    from . import experiments as ex

    meta, flags = _split(kwargs)
    system = meta["system"]
    p = resolve_params(system, meta["preset"], meta["config_path"], flags)
    conv_ok = True
    if system == "rigidbody":
        rows_d = ex.rigid_body_table(_rigid_cfg(p), c=p.get("c", 1.0),
                                     integral=p.get("integral", "F"))
        header = ["j", "sign", "value", "oracle"]
        rows = [[r["j"], r["sign"], r["value"], r["oracle"]] for r in rows_d]
    elif system == "beam":
        cfg = _beam_cfg(p)
        c = p.get("c", 1.0)
        if "case" in p:
            j, k, ell = p["case"]
            rows = [[j, k, ell, ex.beam_J_numeric(cfg, j, k, ell, c)]]
        else:
            rows = [[r["j"], r["k"], r["ell"], r["value"]] for r in ex.beam_J_table(cfg, c)]
        header = ["j", "k", "ell", "value"]
    elif system == "duffing":
        taus = _grid_of(p, "tau", None)
        if taus is None:
            raise ConfigError("tau: a time-shift grid is required")
        vals, conv = ex.duffing_obstruction(_duffing_cfg(p), p.get("kind", "homoclinic"), taus,
                                            family=p.get("family"), sign=p.get("sign", 1),
                                            m=p.get("m", 1), l=p.get("l", 1))
        header = ["tau", "value", "converged"]
        rows = [[t, v, bool(cv)] for t, v, cv in zip(taus, vals, conv)]
        conv_ok = bool(np.all(conv))
    else:
        raise ConfigError("system: pendula obstruction integrals are the melnikov-scan components")
    _emit_table(header, rows, meta["fmt"], meta["out"])
    if not conv_ok:
        raise _NotConverged("some windows did not converge")


@cli.command("zero-find")
@_common_options
def zero_find(**kwargs):
    """Locate and classify zeros of a scalar Melnikov function (duffing)."""
    from .melnikov import find_zeros

    meta, flags = _split(kwargs)
    if meta["system"] != "duffing":
        raise ConfigError("system: zero-find needs a scalar Melnikov function (duffing)")
    p = resolve_params(meta["system"], meta["preset"], meta["config_path"], flags)
    res = _scan("duffing", p)
    rep = find_zeros(res.curve)
    header = ["tau", "residual", "derivative", "classification"]
    rows = [[z.param, z.residual, z.derivative, z.classification] for z in rep.zeros]
    _emit_table(header, rows, meta["fmt"], meta["out"], {"status": rep.status})
    click.echo(f"status: {rep.status} ({len(rep.simple)} simple)", err=True)


@cli.command("verify")
@_common_options
def verify(**kwargs):
    """Shooting from simple zeros (duffing) or integral drift (rigidbody)."""
    from . import experiments as ex
    from .verify import integral_drift

    meta, flags = _split(kwargs)
    system = meta["system"]
    p = resolve_params(system, meta["preset"], meta["config_path"], flags)
    eps = p.get("epsilon", 1e-3)
    ok = True
    if system == "duffing":
        cfg = _duffing_cfg(p)
        if p.get("kind", "subharmonic") != "subharmonic":
            raise ConfigError("kind: verify shoots for subharmonic orbits; use kind=subharmonic")
        m, l = p.get("m", 1), p.get("l", 1)
        out = ex.duffing_persistence(cfg, eps, m=m, l=l, family=p.get("family"))
        slope, drifts = ex.duffing_drift_slope(cfg, m=m, l=l, family=out["family"])
        results = out["results"]
        ok = all(r.converged for r in results)
        doc = {
            "system": "duffing", "epsilon": eps, "m": m, "l": l, "family": out["family"],
            "zeros": out["zeros"], "scale": out["scale"], "radius": out["radius"],
            "shooting": [r.to_dict() for r in results],
            "persisted": [bool(r.converged and r.distance_to_seed < out["radius"])
                          for r in results],
            "drift_slope": slope, "drifts": drifts,
            "note": "empirical check over the listed seeds only",
        }
    elif system == "rigidbody":
        from .systems.rigidbody import equilibrium_state, rigid_body_field, rigid_body_integrals

        cfg = _rigid_cfg(p)
        F, Ft = rigid_body_integrals(cfg)
        G = F if p.get("integral", "F") == "F" else Ft
        c = p.get("c", 1.0)
        rows = []
        oracle = {(r["j"], r["sign"]): r["oracle"]
                  for r in ex.rigid_body_table(cfg, c, p.get("integral", "F"))}
        for (j, sign), ref in oracle.items():
            d = integral_drift(rigid_body_field(cfg, eps), G, equilibrium_state(cfg, j, sign, c),
                               cfg.T)
            rows.append({"j": j, "sign": sign, "drift": d.drift, "predicted": d.predicted,
                         "drift_over_epsilon": d.drift / eps, "obstruction": ref})
        doc = {"system": "rigidbody", "epsilon": eps, "preset": p["preset"], "rows": rows}
    else:
        raise ConfigError(f"system: verify supports duffing and rigidbody, not {system}")
    _emit(json_text(doc), meta["out"])
    if not ok:
        raise _NotConverged("some shooting runs did not converge")


def _rel(num, ref):
    num, ref = np.asarray(num, dtype=float), np.asarray(ref, dtype=float)
    scale = float(np.max(np.abs(ref)))
    err = float(np.max(np.abs(num - ref)))
    return err / scale if scale > 0 else err


@cli.command("oracle-compare")
@_common_options
def oracle_compare(**kwargs):
    """Compare numerical values with the closed-form references."""
    from . import experiments as ex

    meta, flags = _split(kwargs)
    system = meta["system"]
    p = resolve_params(system, meta["preset"], meta["config_path"], flags)
    doc: Dict[str, object] = {"system": system}
    if system == "beam":
        cfg = _beam_cfg(p)
        c = p.get("c", 1.0)
        from .systems.beam import beam_J_closed_form, beam_J_oracle

        if "case" not in p:
            raise ConfigError("case: give --case j,k,ell")
        j, k, ell = p["case"]
        num = ex.beam_J_numeric(cfg, j, k, ell, c)
        ref = beam_J_oracle(j, k, ell, cfg.beta(ell), c)
        cf = beam_J_closed_form(cfg, j, k, ell, c)
        doc.update({"case": [j, k, ell], "numeric": num, "oracle": ref,
                    "error": abs(num - ref),
                    "relative_error": abs(num - ref) / abs(ref) if ref else abs(num - ref),
                    "closed_form": cf, "closed_form_error": abs(num - cf)})
    elif system == "rigidbody":
        rows = ex.rigid_body_table(_rigid_cfg(p), p.get("c", 1.0), p.get("integral", "F"))
        doc.update({"rows": rows,
                    "max_abs_error": max(abs(r["value"] - r["oracle"]) for r in rows)})
    else:
        res = _scan(system, p)
        doc.update({"points": len(res.curve), "all_converged": res.curve.all_converged,
                    "relative_error": _rel(res.curve.values, res.reference),
                    "max_abs_error": float(np.max(np.abs(res.curve.values - res.reference)))})
        if system == "duffing" and res.csch_form is not None:
            doc["csch_form_relative_error"] = _rel(res.curve.values, res.csch_form)
        if system == "pendula":
            doc["m1_cubic_form_max_abs_error"] = float(np.max(np.abs(res.curve.values[:, 0]
                                                                  - res.m1_cubic_form)))
        _maybe_figure(meta["figure"], p, system, res)
    if meta["fmt"] == "json":
        _emit(json_text(doc), meta["out"])
    else:
        lines = []
        for key, value in doc.items():
            if isinstance(value, list) and value and isinstance(value[0], dict):
                for r in value:
                    lines.append(f"{key}: " + " ".join(f"{a}={b!r}" for a, b in r.items()))
            else:
                lines.append(f"{key}: {value!r}" if isinstance(value, float) else f"{key}: {value}")
        _emit("\n".join(lines) + "\n", meta["out"])


class _NotConverged(Exception):
    pass


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    try:
        cli.main(args=argv, prog_name="melnikov-lab", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_ERROR
    except click.UsageError as exc:
        exc.show()
        return EXIT_ERROR
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    except _NotConverged as exc:
        click.echo(f"warning: {exc}", err=True)
        return EXIT_NOT_CONVERGED
    except (MelnikovLabError, ValueError, KeyError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    return EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
