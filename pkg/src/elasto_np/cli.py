"""Command-line front end: config parsing, sweeps, validation suites and reports.

Every command reads one INI file with flat sections, writes
``<out>/<command>.csv`` (one record per grid point), ``<command>.json``
(summary with the resolved config and assertion outcomes) and, unless
``--no-figures`` is given, ``<command>.png``.  Exit status is 0 when every
assertion passes, 1 when one fails and 2 for configuration errors.
"""
import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

import numpy as np

from . import calr, resonance
from .errors import ConfigInvalid, ElastoNPError, OnInterface
from .harmonics import ModeIndex, verify_prop_identities
from .layer_coeffs import kernel_quadrature_oracle, layer_field, make_medium
from .np_spectrum import eigen_residual, np_eigensystem
from .specfun import wronskian_residual

__all__ = ["COMMANDS", "SCHEMA", "RunConfig", "load_config", "run", "main"]

BUNDLED = ("default", "fig1", "fig2", "fig3")
COMMANDS = ("np-spectrum", "resonance-sweep", "calr-design", "field-grid", "validate")

# section -> key -> (type, default); None means "unset"
SCHEMA = {
    "run": {"seed": (int, 0), "threads": (int, 1)},
    "geometry": {"R": (float, 1.0), "r_i": (float, 0.8), "r_e": (float, 1.0)},
    "frequency": {"omega": (float, 5.0)},
    "exterior": {"lam": (float, 1.0), "mu": (float, 1.0)},
    "shell": {"lam": (complex, 1 + 0.01j), "mu": (complex, None)},
    "core": {"lam": (complex, 1.0 + 0j), "mu": (complex, 1.0 + 0j)},
    "sweep": {
        "variable": (str, "n"), "start": (float, None), "stop": (float, None),
        "points": (int, 41), "scale": (str, "linear"), "n0": (int, 5), "M": (float, 1e10),
        "re_min": (float, -3.0), "re_max": (float, -1.0), "step": (float, 1e-4),
        "interface": (str, "outer"), "loss": (float, None), "p": (float, None),
    },
    "source": {"r0": (float, 1.05), "r0_far": (float, 1.3), "n_extra": (int, 40),
               "threshold": (float, 1e6)},
    "field": {"extent": (float, 2.0), "points": (int, 41), "radius": (float, None),
              "shell_points": (int, 200), "decades": (int, 0)},
    "validate": {
        "wronskian_n_max": (int, 80), "wronskian_points": (int, 25),
        "identity_n_max": (int, 8), "oracle_n_max": (int, 6), "oracle_omegas": (str, "0.5,2,5"),
        "np_n_max": (int, 40), "random_media": (int, 3),
    },
    "expect": {
        "min_peak_ratio": (float, 100.0), "re_mu": (float, None), "re_mu_tol": (float, 0.01),
        "p1": (float, None), "p1_tol": (float, 1e-3), "min_suppression": (float, None),
        "d_bound_factor": (float, None), "off_mode_factor": (float, 0.1),
        "energy_near_min": (float, 1e6), "energy_far_max": (float, 1e3),
        "field_variation": (float, 0.1),
    },
    "tolerances": {"residual": (float, 1e-11), "trace_det": (float, 1e-12),
                   "wronskian": (float, 1e-10), "identity": (float, 1e-9),
                   "oracle": (float, 1e-7)},
}


class RunConfig(dict):
    """Resolved configuration: ``cfg[section][key]`` with defaults filled in."""

    def get(self, section, key):
        return self[section][key]

    def to_strings(self):
        """Canonical string form; parsing it back yields the same config."""
        out = {}
        for sec, keys in self.items():
            out[sec] = {k: _fmt_value(v) for k, v in keys.items() if v is not None}
        return out


def _fmt_value(v):
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _parse_value(typ, raw, where):
    raw = raw.strip()
    if raw == "":
        return None
    try:
        if typ is complex:
            return complex(raw.replace(" ", "").replace("i", "j"))
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigInvalid(f"{where}: cannot parse {raw!r} as {typ.__name__}") from None


def _resolve(sections):
    cfg = RunConfig()
    for sec, keys in sections.items():
        if sec not in SCHEMA:
            raise ConfigInvalid(f"unknown section [{sec}]")
        for key in keys:
            if key not in SCHEMA[sec]:
                raise ConfigInvalid(f"unknown key {key!r} in [{sec}]")
    for sec, keys in SCHEMA.items():
        cfg[sec] = {}
        given = sections.get(sec, {})
        for key, (typ, default) in keys.items():
            cfg[sec][key] = (_parse_value(typ, str(given[key]), f"[{sec}] {key}")
                             if key in given else default)
    _check(cfg)
    return cfg


def _check(cfg):
    s, g = cfg["sweep"], cfg["geometry"]
    if s["points"] < 2 or cfg["field"]["points"] < 2:
        raise ConfigInvalid("grids need at least 2 points")
    if s["scale"] not in ("linear", "log"):
        raise ConfigInvalid("sweep scale must be linear or log")
    if s["interface"] not in ("outer", "inner", "any"):
        raise ConfigInvalid("sweep interface must be outer, inner or any")
    if s["variable"] not in ("n", "im_mu", "p1", "p2"):
        raise ConfigInvalid(f"unknown sweep variable {s['variable']!r}")
    if s["n0"] < 1 or cfg["run"]["threads"] < 1 or cfg["run"]["seed"] < 0:
        raise ConfigInvalid("n0 and threads must be positive, seed nonnegative")
    if not (g["R"] > 0 and 0 < g["r_i"] < g["r_e"] and cfg["frequency"]["omega"] > 0):
        raise ConfigInvalid("need R > 0, 0 < r_i < r_e and omega > 0")
    src = cfg["source"]
    if not (src["r0"] > g["r_e"] and src["r0_far"] > g["r_e"]):
        raise ConfigInvalid("source radii must lie outside r_e")
    try:
        [float(w) for w in cfg["validate"]["oracle_omegas"].split(",")]
    except ValueError:
        raise ConfigInvalid("oracle_omegas must be a comma-separated list") from None


def load_config(path=None, overrides=None):
    """Read an INI file (or the ``config`` block of a JSON summary).

    ``path=None`` loads the bundled ``default.ini``; the names in
    ``BUNDLED`` select the other bundled files.  ``overrides`` maps
    ``(section, key)`` to raw strings applied on top of the file.
    """
    if path is None:
        path = "default"
    if not os.path.exists(str(path)) and str(path) in BUNDLED:
        sections = _ini_sections(bundled_config(path).read_text(), f"{path}.ini")
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigInvalid(f"cannot read config: {exc}") from None
        if str(path).endswith(".json"):
            try:
                sections = json.loads(text)["config"]
            except (ValueError, KeyError, TypeError):
                raise ConfigInvalid("JSON config must carry a 'config' object") from None
        else:
            sections = _ini_sections(text, path)
    for (sec, key), raw in (overrides or {}).items():
        sections.setdefault(sec, {})[key] = raw
    return _resolve(sections)


def _ini_sections(text, name):
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys such as R and M are case sensitive
    try:
        parser.read_string(text, source=str(name))
    except configparser.Error as exc:
        raise ConfigInvalid(f"malformed config: {exc}") from None
    return {sec: dict(parser[sec]) for sec in parser.sections()}


def bundled_config(name):
    """Path-like handle of a bundled config (``default``, ``fig1``, ``fig2``, ``fig3``)."""
    return resources.files("elasto_np.configs").joinpath(f"{name}.ini")


# --------------------------------------------------------------------------
# output


def _atomic_write(path, data):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_bytes(columns, rows):
    """RFC-4180 CSV with a header row and 17-digit floats."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue().encode("utf-8")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": _jsonable(v.real), "im": _jsonable(v.imag)}
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def _cplx(prefix, z):
    z = complex(z)
    return {f"re_{prefix}": z.real, f"im_{prefix}": z.imag,
            f"abs_{prefix}": abs(z), f"arg_{prefix}": math.atan2(z.imag, z.real)}


class Report:
    """Rows, scalar results and assertion outcomes of one command."""

    def __init__(self, command, columns):
        self.command = command
        self.columns = list(columns)
        self.rows = []
        self.results = {}
        self.assertions = {}

    def check(self, name, passed, value=None, bound=None):
        self.assertions[name] = {"passed": bool(passed), "value": value, "bound": bound}

    @property
    def passed(self):
        return all(a["passed"] for a in self.assertions.values())


def _pmap(fn, items, threads):
    items = list(items)
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _grid(s, default):
    lo = default[0] if s["start"] is None else s["start"]
    hi = default[1] if s["stop"] is None else s["stop"]
    if s["scale"] == "log":
        if not (lo > 0 and hi > 0):
            raise ConfigInvalid("log grids need positive bounds")
        return np.logspace(math.log10(lo), math.log10(hi), s["points"])
    return np.linspace(lo, hi, s["points"])


# --------------------------------------------------------------------------
# configs for the compute modules


def _corefree(cfg, mu_hat=None):
    e, sh = cfg["exterior"], cfg["shell"]
    mu_hat = sh["mu"] if mu_hat is None else mu_hat
    if mu_hat is None:
        raise ConfigInvalid("[shell] mu is required for this sweep")
    return resonance.make_corefree(cfg["geometry"]["R"], e["lam"], e["mu"], sh["lam"], mu_hat,
                                   cfg["frequency"]["omega"])


def _coreshell(cfg):
    e, sh, c, g = cfg["exterior"], cfg["shell"], cfg["core"], cfg["geometry"]
    mu_hat = sh["mu"]
    if mu_hat is None:
        rho = g["r_i"] / g["r_e"]
        mu_hat = complex(-e["mu"], rho ** cfg["sweep"]["n0"])
    return calr.make_coreshell(g["r_i"], g["r_e"], e["lam"], e["mu"], c["lam"], c["mu"],
                               sh["lam"], mu_hat, cfg["frequency"]["omega"])


def _tune_calr(cfg, template):
    s = cfg["sweep"]
    if s["p"] is not None:
        return s["p"]
    return calr.tune_p2(s["n0"], template, step=s["step"], loss=s["loss"], strict=False,
                        interface=s["interface"])


# --------------------------------------------------------------------------
# commands


def cmd_np_spectrum(cfg):
    e, tol = cfg["exterior"], cfg["tolerances"]
    med = make_medium(e["lam"], e["mu"], cfg["frequency"]["omega"])
    R = cfg["geometry"]["R"]
    lo = int(cfg["sweep"]["start"] or 1)
    hi = int(cfg["sweep"]["stop"] or 40)
    if not 1 <= lo <= hi:
        raise ConfigInvalid("np-spectrum needs 1 <= start <= stop")
    cols = ["n"]
    for i in (1, 2, 3):
        cols += [f"re_lambda_{i}", f"im_lambda_{i}", f"abs_lambda_{i}", f"arg_lambda_{i}"]
    cols += ["residual_2", "residual_3", "trace_error", "det_error", "branch"]
    rep = Report("np-spectrum", cols)
    prev = None
    worst_res = worst_td = 0.0
    for n in range(lo, hi + 1):
        es = np_eigensystem(n, med, R, previous=prev)
        prev = es
        A = es.block
        nrm = np.linalg.norm(A, 2)
        row = {"n": n, "branch": es.branch}
        for i, lam in enumerate((es.lambda_1n, es.lambda_2n, es.lambda_3n), 1):
            row.update(_cplx(f"lambda_{i}", lam))
        row["residual_2"] = eigen_residual(A, es.lambda_2n, es.U_stable)
        row["residual_3"] = eigen_residual(A, es.lambda_3n, es.V_stable)
        row["trace_error"] = abs(es.lambda_2n + es.lambda_3n - np.trace(A)) / nrm
        row["det_error"] = abs(es.lambda_2n * es.lambda_3n - np.linalg.det(A)) / nrm ** 2
        worst_res = max(worst_res, row["residual_2"], row["residual_3"])
        worst_td = max(worst_td, row["trace_error"], row["det_error"])
        rep.rows.append(row)
    rep.check("eigen_residual", worst_res < tol["residual"], worst_res, tol["residual"])
    rep.check("trace_det", worst_td < tol["trace_det"], worst_td, tol["trace_det"])
    return rep


def _sweep_im_mu(cfg, rep):
    s, x = cfg["sweep"], cfg["expect"]
    base = _corefree(cfg)
    n0, threads = s["n0"], cfg["run"]["threads"]
    ims = _grid(s, (1e-6, 1.0))
    re = base.shell.mu.real

    def point(v):
        c = base.with_mu_hat(complex(re, v))
        psi1 = resonance.solve_corefree_mode(n0, c, 1.0)[0]
        return (resonance.resonance_quantity(n0, c), abs(resonance.psi_tilde(n0, c)),
                resonance.mode_energy(n0, c, psi1))

    vals = _pmap(point, ims, threads)
    for v, (q, pt, en) in zip(ims, vals):
        rep.rows.append({"im_mu_hat": v, "quantity": q, "abs_psi_tilde": pt, "energy": en})
    q = np.array([v[0] for v in vals])
    i = int(np.argmax(q))
    d = np.sign(np.diff(q))
    d = d[d != 0]
    turns = int(np.sum((d[:-1] > 0) & (d[1:] < 0)))
    ratio = float(q[i] / q[-1]) if q[-1] > 0 else math.inf
    rep.results.update(peak_im_mu=ims[i], peak_quantity=q[i], peak_ratio=ratio,
                       re_mu_hat=re, n0=n0)
    rep.check("interior_peak", 0 < i < len(q) - 1, i)
    rep.check("unimodal", turns == 1, turns, 1)
    rep.check("peak_ratio", ratio >= x["min_peak_ratio"], ratio, x["min_peak_ratio"])
    try:
        x_re = resonance.tune_re_mu(n0, base, search=(s["re_min"], s["re_max"]))
    except ElastoNPError as exc:
        rep.results["tune_re_mu_error"] = str(exc)
        x_re = None
    rep.results["tuned_re_mu"] = x_re
    if x["re_mu"] is not None:
        ok = x_re is not None and abs(x_re - x["re_mu"]) <= x["re_mu_tol"]
        rep.check("tuned_re_mu", ok, x_re, [x["re_mu"], x["re_mu_tol"]])


def _sweep_p1(cfg, rep):
    s, x = cfg["sweep"], cfg["expect"]
    n0, M = s["n0"], s["M"]
    mu = cfg["exterior"]["mu"]
    base = _corefree(cfg, complex(-mu, 1.0 / M))
    ps = _grid(s, (-10.0 / n0, 10.0 / n0))
    prof = _pmap(lambda p: resonance.p1_profile(n0, base, M, [p])[0], ps, cfg["run"]["threads"])
    for p, (pt, q) in zip(ps, prof):
        rep.rows.append({"p": p, "abs_psi_tilde": pt, "quantity": q})
    p_star = resonance.tune_p1(n0, base, M, step=s["step"], strict=False)
    q_star = resonance.resonance_quantity(n0, base.with_mu_hat(complex(-mu + p_star, 1.0 / M)))
    rep.results.update(p_star=p_star, quantity_at_p_star=q_star, n0=n0, M=M,
                       abs_p_times_n0=abs(p_star) * n0)
    rep.check("quantity_exceeds_M", q_star > M, q_star, M)
    if x["p1"] is not None:
        rep.check("p_star", abs(p_star - x["p1"]) <= x["p1_tol"], p_star, [x["p1"], x["p1_tol"]])


def cmd_resonance_sweep(cfg):
    var = cfg["sweep"]["variable"]
    if var == "im_mu":
        rep = Report("resonance-sweep", ["im_mu_hat", "quantity", "abs_psi_tilde", "energy"])
        _sweep_im_mu(cfg, rep)
    elif var == "p1":
        rep = Report("resonance-sweep", ["p", "abs_psi_tilde", "quantity"])
        _sweep_p1(cfg, rep)
    else:
        raise ConfigInvalid("resonance-sweep needs sweep variable im_mu or p1")
    rep.results["variable"] = var
    return rep


def cmd_calr_design(cfg):
    s, x, src_c = cfg["sweep"], cfg["expect"], cfg["source"]
    threads = cfg["run"]["threads"]
    template = _coreshell(cfg)
    n0 = s["n0"]
    rho = template.rho
    loss = rho ** n0 if s["loss"] is None else s["loss"]
    rho2 = rho ** (2 * n0)
    d_before = abs(calr.denominator_d(n0, calr.tuned_config(template, n0, 0.0, loss)))
    p_star = _tune_calr(cfg, template)
    tuned = calr.tuned_config(template, n0, p_star, loss)
    d_after = abs(calr.denominator_d(n0, tuned))
    r_star, bound = calr.critical_radius(template)

    ps = _grid(s, (-8.0 / n0, 8.0 / n0))

    def point(p):
        c = calr.tuned_config(template, n0, p, loss)
        return calr.denominator_d(n0, c), abs(calr.q2_condition(n0, c, p))

    rep = Report("calr-design", ["p", "re_d", "im_d", "abs_d", "arg_d", "abs_q2_condition"])
    for p, (d, qc) in zip(ps, _pmap(point, ps, threads)):
        row = {"p": p, "abs_q2_condition": qc}
        row.update(_cplx("d", d))
        rep.rows.append(row)

    off = {}
    for n in range(max(1, n0 - 10), n0 + 11):
        if n != n0:
            off[n] = abs(calr.denominator_d(n, tuned)) / (rho2 + rho ** (2 * n))
    off_min = min(off.values())

    n_range = (1, n0 + src_c["n_extra"])
    energies = {}
    for tag, r0 in (("near", src_c["r0"]), ("far", src_c["r0_far"])):
        src = calr.point_source_spectrum(r0, template.exterior.k_s, n_range, template.r_e)
        sol = calr.solve_coreshell(tuned, src, threshold=src_c["threshold"])
        energies[tag] = (r0, sol.energy, sol.classification,
                         bool(calr.source_inside_critical(r0, template)))

    suppression = d_before / d_after if d_after > 0 else math.inf
    rep.results.update(
        n0=n0, rho=rho, rho_2n0=rho2, loss=loss, p2_star=p_star,
        abs_d_before=d_before, abs_d_after=d_after, suppression=suppression,
        r_star=r_star, bound_radius=bound, off_mode_min_ratio=off_min,
        mu_hat_tuned=tuned.shell.mu,
        energy_near=energies["near"][1], classification_near=energies["near"][2],
        energy_far=energies["far"][1], classification_far=energies["far"][2],
        r0_near=energies["near"][0], r0_far=energies["far"][0],
        near_inside_critical=energies["near"][3], far_inside_critical=energies["far"][3],
        source_modes=list(n_range),
    )
    if x["min_suppression"] is not None:
        rep.check("suppression", suppression >= x["min_suppression"], suppression,
                  x["min_suppression"])
    if x["d_bound_factor"] is not None:
        rep.check("d_after_bound", d_after <= x["d_bound_factor"] * rho2, d_after,
                  x["d_bound_factor"] * rho2)
    rep.check("off_mode_bound", off_min >= x["off_mode_factor"], off_min, x["off_mode_factor"])
    rep.check("energy_near", energies["near"][1] >= x["energy_near_min"], energies["near"][1],
              x["energy_near_min"])
    rep.check("energy_far", energies["far"][1] < x["energy_far_max"], energies["far"][1],
              x["energy_far_max"])

    dec = cfg["field"]["decades"]
    if dec > 0:
        src = calr.point_source_spectrum(src_c["r0"], template.exterior.k_s, n_range, template.r_e)
        losses = [loss * 10.0 ** (-k) for k in range(dec + 1)]
        bd = calr.boundedness_diagnostic(template, src, n0, losses=losses,
                                         radius=cfg["field"]["radius"] or 1.05 * bound,
                                         points=cfg["field"]["shell_points"], step=s["step"])
        mf = bd["max_field"]
        variation = float(mf.max() / mf.min() - 1.0)
        rep.results["boundedness"] = {k: v.tolist() for k, v in bd.items()}
        rep.results["field_variation"] = variation
        rep.results["energy_span"] = float(bd["energy"].max() / bd["energy"].min())
        rep.check("field_bounded", variation < x["field_variation"], variation,
                  x["field_variation"])
    return rep


def cmd_field_grid(cfg):
    f, s, src_c = cfg["field"], cfg["sweep"], cfg["source"]
    template = _coreshell(cfg)
    n0 = s["n0"]
    loss = template.rho ** n0 if s["loss"] is None else s["loss"]
    p_star = _tune_calr(cfg, template)
    tuned = calr.tuned_config(template, n0, p_star, loss)
    src = calr.point_source_spectrum(src_c["r0"], template.exterior.k_s,
                                     (1, n0 + src_c["n_extra"]), template.r_e)
    sol = calr.solve_coreshell(tuned, src, threshold=src_c["threshold"])
    ax = np.linspace(-f["extent"], f["extent"], f["points"])
    pts = [(xv, zv) for zv in ax for xv in ax]

    def point(xz):
        x = np.array([xz[0], 0.0, xz[1]])
        rad = float(np.linalg.norm(x))
        if rad == 0.0:
            x, rad = np.array([0.0, 0.0, 1e-12]), 1e-12
        region = calr._region(tuned, rad)
        try:
            if rad > tuned.r_e * (1 + 1e-14):
                u = calr.scattered_field(x, tuned, sol, src)
            else:
                u = calr.field_eval(x, tuned, sol, src, include_source=False)
        except OnInterface as exc:
            u = exc.limits[1]
        return region, u

    cols = ["x", "z", "region", "abs_u"]
    for c in ("x", "y", "z"):
        cols += [f"re_u{c}", f"im_u{c}"]
    rep = Report("field-grid", cols)
    finite = True
    for (xv, zv), (region, u) in zip(pts, _pmap(point, pts, cfg["run"]["threads"])):
        row = {"x": xv, "z": zv, "region": region, "abs_u": float(np.linalg.norm(u))}
        for c, val in zip("xyz", u):
            row[f"re_u{c}"], row[f"im_u{c}"] = val.real, val.imag
        finite &= bool(np.all(np.isfinite(u)))
        rep.rows.append(row)
    rep.results.update(p2_star=p_star, energy=sol.energy, classification=sol.classification,
                       n0=n0, r0=src_c["r0"], quantity="scattered field outside r_e")
    rep.check("finite", finite)
    return rep


def _random_medium(rng, omega):
    mu = rng.uniform(0.5, 2.0)
    lam = rng.uniform(-0.5 * mu, 2.0)  # keeps 3 lam + 2 mu > 0
    return make_medium(lam, mu, omega)


def cmd_validate(cfg):
    v, tol = cfg["validate"], cfg["tolerances"]
    threads = cfg["run"]["threads"]
    rng = np.random.default_rng(cfg["run"]["seed"])
    rep = Report("validate", ["suite", "case", "value", "tolerance", "passed"])

    def add(suite, case, value, bound):
        rep.rows.append({"suite": suite, "case": case, "value": value, "tolerance": bound,
                         "passed": value < bound})

    ts = np.logspace(math.log10(0.5), 2, v["wronskian_points"])
    wr = _pmap(lambda n: max(wronskian_residual(n, t) for t in ts),
               range(v["wronskian_n_max"] + 1), threads)
    for n, val in enumerate(wr):
        add("wronskian", f"n={n}", val, tol["wronskian"])

    cases = [(w, n) for w in ("P1", "P2", "P3") for n in range(1, v["identity_n_max"] + 1)]
    ident = _pmap(lambda c: max(verify_prop_identities(c[0], c[1], m)
                                for m in range(-c[1], c[1] + 1)), cases, threads)
    for (w, n), val in zip(cases, ident):
        add("identities", f"{w} n={n}", val, tol["identity"])

    omegas = [float(w) for w in v["oracle_omegas"].split(",")]
    dirs = rng.normal(size=(2, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    ocases = []
    for w in omegas:
        med = _random_medium(rng, w)
        for kind in ("T", "I", "N"):
            for n in range(1, v["oracle_n_max"] + 1):
                ocases.append((med, ModeIndex(n, int(rng.integers(-n, n + 1)), kind)))

    def oracle(c):
        med, mode = c
        x = np.concatenate([0.5 * dirs, 2.0 * dirs])
        a = layer_field(mode, med, 1.0, x)
        b = kernel_quadrature_oracle(mode, med, 1.0, x)
        return float(np.linalg.norm(a - b) / np.linalg.norm(b))

    for (med, mode), val in zip(ocases, _pmap(oracle, ocases, threads)):
        add("oracle", f"omega={med.omega:g} {mode.kind} n={mode.n} m={mode.m}", val, tol["oracle"])

    for k in range(v["random_media"]):
        med = _random_medium(rng, float(rng.uniform(0.5, 6.0)))
        res = td = 0.0
        for n in range(1, v["np_n_max"] + 1):
            es = np_eigensystem(n, med, 1.0)
            A = es.block
            nrm = np.linalg.norm(A, 2)
            res = max(res, eigen_residual(A, es.lambda_2n, es.U_stable),
                      eigen_residual(A, es.lambda_3n, es.V_stable))
            td = max(td, abs(es.lambda_2n + es.lambda_3n - np.trace(A)) / nrm,
                     abs(es.lambda_2n * es.lambda_3n - np.linalg.det(A)) / nrm ** 2)
        case = f"medium {k} lam={med.lam.real:.6g} mu={med.mu.real:.6g} omega={med.omega:.6g}"
        add("np_residual", case, res, tol["residual"])
        add("np_trace_det", case, td, tol["trace_det"])

    for suite in ("wronskian", "identities", "oracle", "np_residual", "np_trace_det"):
        rows = [r for r in rep.rows if r["suite"] == suite]
        worst = max(r["value"] for r in rows)
        rep.check(suite, all(r["passed"] for r in rows), worst, rows[0]["tolerance"])
        rep.results[f"worst_{suite}"] = worst
    return rep


HANDLERS = {
    "np-spectrum": cmd_np_spectrum,
    "resonance-sweep": cmd_resonance_sweep,
    "calr-design": cmd_calr_design,
    "field-grid": cmd_field_grid,
    "validate": cmd_validate,
}


# --------------------------------------------------------------------------
# figures


def _figure(rep, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    col = lambda name: np.array([r[name] for r in rep.rows], dtype=float)
    if rep.command == "np-spectrum":
        for i in (1, 2, 3):
            ax.plot(col(f"re_lambda_{i}"), col(f"im_lambda_{i}"), ".", label=f"lambda_{i}")
        ax.set_xlabel("Re lambda")
        ax.set_ylabel("Im lambda")
        ax.legend()
    elif rep.command == "resonance-sweep" and rep.results["variable"] == "im_mu":
        ax.loglog(col("im_mu_hat"), col("quantity"))
        ax.axvline(rep.results["peak_im_mu"], ls=":", c="k")
        ax.set_xlabel("Im mu_hat")
        ax.set_ylabel("Im mu_hat / |psi_tilde|^2")
    elif rep.command == "resonance-sweep":
        ax.semilogy(col("p"), col("abs_psi_tilde"))
        ax.axvline(rep.results["p_star"], ls=":", c="k")
        ax.set_xlabel("p")
        ax.set_ylabel("|psi_tilde|")
    elif rep.command == "calr-design":
        ax.semilogy(col("p"), col("abs_d"), label="|d|")
        ax.semilogy(col("p"), col("abs_q2_condition"), "--", label="|p^2 - q2/n^2|")
        ax.axvline(rep.results["p2_star"], ls=":", c="k")
        ax.set_xlabel("p")
        ax.legend()
    elif rep.command == "field-grid":
        xs, zs = np.unique(col("x")), np.unique(col("z"))
        a = col("abs_u").reshape(len(zs), len(xs))
        im = ax.pcolormesh(xs, zs, np.log10(np.maximum(a, 1e-300)), shading="auto")
        fig.colorbar(im, ax=ax, label="log10 |u|")
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("z")
    else:
        names = [r["case"] for r in rep.rows]
        ax.semilogy(range(len(names)), col("value"), ".")
        ax.semilogy(range(len(names)), col("tolerance"), "_", c="r")
        ax.set_xlabel("check")
        ax.set_ylabel("residual")
    ax.set_title(rep.command)
    fig.tight_layout()
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=110, metadata={"Software": None})
    plt.close(fig)
    _atomic_write(path, buf.getvalue())


# --------------------------------------------------------------------------
# driver


def run(command, cfg, out_dir=".", figures=True):
    """Execute ``command`` and write its artifacts; returns ``(exit_code, summary)``."""
    if command not in HANDLERS:
        raise ConfigInvalid(f"unknown command {command!r}")
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    rep = HANDLERS[command](cfg)
    elapsed = time.perf_counter() - t0
    base = os.path.join(out_dir, command)
    _atomic_write(base + ".csv", csv_bytes(rep.columns, rep.rows))
    if figures and rep.rows:
        _figure(rep, base + ".png")
    summary = {
        "command": command,
        "config": cfg.to_strings(),
        "results": rep.results,
        "assertions": rep.assertions,
        "passed": rep.passed,
        "rows": len(rep.rows),
        "columns": rep.columns,
        "runtime_s": elapsed,
    }
    text = json.dumps(_jsonable(summary), sort_keys=True, indent=2, allow_nan=False) + "\n"
    _atomic_write(base + ".json", text.encode("utf-8"))
    return (0 if rep.passed else 1), summary


def _parser():
    ap = argparse.ArgumentParser(prog="elasto-np", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="INI file, JSON summary or a bundled name (default, fig1, fig2, fig3)")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--seed", type=int, help="overrides [run] seed")
    ap.add_argument("--threads", type=int, help="overrides [run] threads")
    ap.add_argument("--M", type=float, dest="M", help="resonance threshold M")
    ap.add_argument("--no-figures", action="store_true", help="skip PNG output")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    overrides = {}
    if args.seed is not None:
        overrides[("run", "seed")] = str(args.seed)
    if args.threads is not None:
        overrides[("run", "threads")] = str(args.threads)
    if args.M is not None:
        # the resonance threshold: tuning target for resonance-sweep, energy cut for CALR runs
        key = ("sweep", "M") if args.command == "resonance-sweep" else ("source", "threshold")
        overrides[key] = repr(args.M)
    try:
        cfg = load_config(args.config, overrides)
        code, summary = run(args.command, cfg, args.out, figures=not args.no_figures)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for name, a in sorted(summary["assertions"].items()):
        print(f"{'PASS' if a['passed'] else 'FAIL'} {name}: {_jsonable(a['value'])} (bound {_jsonable(a['bound'])})")
    print(f"{args.command}: {'passed' if code == 0 else 'assertion failure'}; "
          f"outputs in {os.path.abspath(args.out)}")
    return code


if __name__ == "__main__":
    sys.exit(main())
