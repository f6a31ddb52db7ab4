"""Batch front end: one structured config file per invocation.

    subergo rate CONFIG [--out DIR] [--seed N]
    subergo verify CONFIG [--out DIR] [--seed N]
    subergo tv CONFIG [--out DIR] [--seed N]
    subergo tradeoff CONFIG [--out DIR] [--seed N]

Exit codes: 0 success, 1 checked-property failure, 2 usage/config error.
Every command writes full-precision CSV plus a rendered figure and a run
manifest into the output directory; repeated runs are byte-identical.
"""

from __future__ import annotations

import os
import sys

import click
import numpy as np

from . import config as cfgmod
from . import report
from .drift import verify_drift, verify_drift_sequence, verify_moment_bounds
from .drift import PVOperator
from .empirical import brt_truncation_cap, rate_diagnostic
from .errors import ConfigError, RegimeError, StructureError, SubergoError
from .kernels import FiniteKernel, load_kernel, tv_curve
from .models import BackwardRecurrenceSpec, brt_certificate, brt_kernel
from .models import nar as nar_mod
from .models import rwm as rwm_mod
from .models import sur as sur_mod
from .models import (NonlinearARSpec, RandomWalkMetropolisSpec,
                     StochasticUnitRootSpec)
from .rates import RateFunction, asymptotic_rate, classify_regime
from .young import tradeoff_table

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2


class CheckFailed(SubergoError):
    pass


def _finish(outdir, command, cfg, seed, outputs):
    manifest = os.path.join(outdir, "manifest.json")
    report.write_manifest(manifest, command, cfg, seed,
                          [os.path.basename(p) for p in outputs])
    outputs.append(manifest)
    for p in sorted(outputs):
        click.echo(f"wrote {p}")


def _run(fn):
    try:
        fn()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except CheckFailed as exc:
        click.echo(f"check failed: {exc}", err=True)
        sys.exit(EXIT_CHECK_FAILED)
    except (StructureError, RegimeError) as exc:
        click.echo(f"check failed: {exc}", err=True)
        sys.exit(EXIT_CHECK_FAILED)
    except SubergoError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    sys.exit(EXIT_OK)


@click.group()
def main():
    """Subgeometric Markov chain convergence toolkit."""


def _common_opts(fn):
    fn = click.argument("config_path", type=click.Path())(fn)
    fn = click.option("--out", "outdir", default="subergo-out",
                      show_default=True, help="output directory")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="override the config seed")(fn)
    return fn


@main.command("rate")
@_common_opts
def cmd_rate(config_path, outdir, seed):
    """Tabulate the induced rate r(n) for a modulus config."""

    def body():
        cfg = cfgmod.load_config(config_path)
        phi = cfgmod.phi_from_config(cfg.get("phi", cfg))
        regime = classify_regime(phi)
        if regime.geometric:
            raise ConfigError(
                f"geometric regime (phi' -> {regime.limit:g}): the induced "
                "rate is geometric, not subgeometric")
        n_max = int(cfg.get("n_max", 100))
        if n_max < 1:
            raise ConfigError("n_max must be >= 1")
        rate = RateFunction(phi)
        n = np.arange(n_max + 1)
        r = rate.table(n_max)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_over_n = np.where(n > 0, np.log(r) / np.maximum(n, 1), np.nan)
        desc = asymptotic_rate(phi)
        csv = os.path.join(outdir, "rate.csv")
        report.write_csv(csv, {"n": n, "r_phi": r,
                               "log_r_over_n": log_over_n},
                         header_comments=[f"phi: {phi.label}",
                                          f"asymptotics: {desc.text}"])
        fig = os.path.join(outdir, "rate.png")
        report.save_figure(report.rate_figure(n.astype(float), r, desc.text),
                           fig)
        _finish(outdir, "rate", cfg, seed, [csv, fig])

    _run(body)


def _build_kernel_and_spec(cfg):
    if "kernel_file" in cfg:
        path = cfg["kernel_file"]
        if not os.path.exists(path):
            raise ConfigError(f"kernel file not found: {path}")
        return load_kernel(path), None
    if "model" in cfg:
        spec = cfgmod.model_from_config(cfg)
        if isinstance(spec, BackwardRecurrenceSpec):
            return brt_kernel(spec), spec
        raise ConfigError("only the brt model yields a finite kernel here; "
                          "continuous models verify on grids via 'verify'")
    raise ConfigError("config needs 'kernel_file' or 'model'")


@main.command("tv")
@_common_opts
def cmd_tv(config_path, outdir, seed):
    """Exact TV decay curve, optionally modulated by a rate."""

    def body():
        cfg = cfgmod.load_config(config_path)
        kernel, spec = _build_kernel_and_spec(cfg)
        x0 = cfg.get("x0", 0)
        n_max = int(cfg.get("n_max", 1000))
        d = tv_curve(kernel, x0, f=None, n_max=n_max)
        cols = {"n": np.arange(n_max + 1), "d_n": d}
        footer = []
        figure_product = None
        classification = None
        if "rate" in cfg:
            rfn = cfgmod.rate_from_config(cfg["rate"])
            rv = np.asarray([float(rfn(k)) for k in range(n_max + 1)])
            cols["r_n"] = rv
            cols["product"] = rv * d
            figure_product = rv * d
            cap = None
            if spec is not None:
                cap = brt_truncation_cap(spec, d)
            diag = rate_diagnostic(d, rfn, n_cap=cap)
            classification = diag.classification
            footer.append(f"diagnostic: {diag.classification} "
                          f"(slope {diag.slope:.4f}, window "
                          f"{diag.window[0]}..{diag.window[1]})")
        csv = os.path.join(outdir, "tv.csv")
        report.write_csv(csv, cols, footer_comments=footer)
        fig = os.path.join(outdir, "tv.png")
        report.save_figure(
            report.tv_figure(np.arange(n_max + 1, dtype=float), d,
                             figure_product, classification), fig)
        _finish(outdir, "tv", cfg, seed, [csv, fig])

    _run(body)


def _continuous_certificate(cfg, spec):
    over = cfg.get("certificate") or {}
    if isinstance(spec, RandomWalkMetropolisSpec):
        return rwm_mod.default_certificate(spec, z=over.get("z"),
                                           c=over.get("c"), m=over.get("m"))
    if isinstance(spec, NonlinearARSpec):
        return nar_mod.default_certificate(spec, z=over.get("z"),
                                           c=over.get("c"), m=over.get("m"))
    return sur_mod.default_certificate(spec, z=over.get("z"),
                                       delta=over.get("delta"),
                                       m=over.get("m"))


@main.command("verify")
@_common_opts
def cmd_verify(config_path, outdir, seed):
    """Certify a drift condition; optional sequence and moment sub-checks."""

    def body():
        cfg = cfgmod.load_config(config_path)
        checks = cfg.get("checks") or {}
        outputs = []
        if "model" in cfg and str(cfg["model"]).lower() in ("rwm", "nar", "sur"):
            spec = cfgmod.model_from_config(cfg)
            cert = _continuous_certificate(cfg, spec)
            kernel = None
        else:
            kernel, spec = _build_kernel_and_spec(cfg)
            if isinstance(spec, BackwardRecurrenceSpec):
                over = cfg.get("certificate") or {}
                ing = brt_certificate(spec, gamma=over.get("gamma", 0.5))
                cert = ing.certificate
                if "b" in over:
                    cert = verify_drift(cert.pv, ing.v_values, ing.phi,
                                        ing.C, cert.report.points,
                                        b=float(over["b"]))
                if "perturb_v_at" in over:
                    v = ing.v_values.copy()
                    at = int(over["perturb_v_at"])
                    v[at] *= float(over.get("perturb_factor", 1.5))
                    pv = PVOperator.from_kernel(kernel)
                    cert = verify_drift(pv, v, ing.phi, ing.C,
                                        cert.report.points, b=cert.b)
            else:
                over = cfg.get("certificate") or {}
                if not over:
                    raise ConfigError("kernel-file verification needs an "
                                      "explicit certificate record")
                phi = cfgmod.phi_from_config(over["phi"])
                v = np.asarray(over["V"], dtype=float)
                c_set = cfgmod.set_from_config(over["C"])
                pv = PVOperator.from_kernel(kernel)
                cert = verify_drift(pv, v, phi, c_set,
                                    np.asarray(kernel.labels),
                                    b=over.get("b"))
        txt = cert.summary()
        lines = [txt]
        ok = cert.valid
        if ok and kernel is not None and "sequence" in checks:
            k_max = int(checks["sequence"].get("k_max", 50))
            seq = verify_drift_sequence(kernel, cert.report.v_values,
                                        cert.phi, cert.C, cert.b, k_max)
            lines.append(f"drift sequence k<={seq.k_checked}: max violation "
                         f"{seq.max_violation:.3e} "
                         f"({'pass' if seq.passed else 'FAIL'})")
            ok = ok and seq.passed
        if ok and kernel is not None and "moments" in checks:
            pair = None
            if checks["moments"].get("pair"):
                pair = cfgmod.pair_from_config(checks["moments"]["pair"])
            mom = verify_moment_bounds(kernel, cert.report.v_values,
                                       cert.phi, cert.C, cert.b, pair=pair)
            for name, chk in mom.checks.items():
                lines.append(f"moment bound [{name}]: max violation "
                             f"{chk.max_violation:.3e} "
                             f"({'pass' if chk.passed else 'FAIL'})")
            ok = ok and mom.passed
        text = "\n".join(lines) + "\n"
        click.echo(text, nl=False)
        rpt = os.path.join(outdir, "report.txt")
        report.write_text(rpt, text)
        outputs.append(rpt)
        csv = os.path.join(outdir, "slacks.csv")
        r = cert.report
        report.write_csv(csv, {
            "point": [str(p) for p in r.points.tolist()],
            "V": r.v_values, "PV": r.pv_values, "delta": r.delta,
            "in_C": r.in_c,
        }, header_comments=[f"phi: {cert.phi.label}",
                            f"C: {cert.C.describe()}",
                            f"b: {cert.b!r}"])
        outputs.append(csv)
        fig = os.path.join(outdir, "slacks.png")
        report.save_figure(report.slack_figure(r), fig)
        outputs.append(fig)
        _finish(outdir, "verify", cfg, seed, outputs)
        if not ok:
            raise CheckFailed("certificate or sub-check reported a violation")

    _run(body)


@main.command("tradeoff")
@_common_opts
def cmd_tradeoff(config_path, outdir, seed):
    """Rate/norm trade-off table for a modulus and a list of pairs."""

    def body():
        cfg = cfgmod.load_config(config_path)
        phi = cfgmod.phi_from_config(cfg.get("phi", {}))
        pairs_cfg = cfg.get("pairs")
        if not pairs_cfg:
            raise ConfigError("tradeoff needs a nonempty 'pairs' list")
        pairs = [cfgmod.pair_from_config(p) for p in pairs_cfg]
        try:
            table = tradeoff_table(phi, pairs)
        except RegimeError as exc:
            raise CheckFailed(str(exc)) from exc
        cols = {k: [] for k in ("pair_id", "rate_descriptor",
                                "norm_descriptor", "rate_exponent",
                                "rate_log_exponent", "stretch_scale",
                                "prefactor_exponent", "measured_slope", "K",
                                "flagged")}
        for row in table.rows:
            for k in cols:
                cols[k].append(getattr(row, k))
        csv = os.path.join(outdir, "tradeoff.csv")
        report.write_csv(csv, cols,
                         header_comments=[f"phi: {table.phi_label}"])
        fig = os.path.join(outdir, "tradeoff.png")
        report.save_figure(report.tradeoff_figure(table), fig)
        _finish(outdir, "tradeoff", cfg, seed, [csv, fig])
        if any(row.flagged for row in table.rows):
            raise CheckFailed("inadmissible pair/modulus coupling flagged")

    _run(body)


if __name__ == "__main__":
    main()
