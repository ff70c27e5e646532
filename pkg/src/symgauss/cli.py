"""``symgauss`` command line.

Exit codes: 0 success, 1 verification failure, 2 usage error.  A flat
``key = value`` config file may supply any option; flags win over the file.
Deterministic results are cached under ``$SYMGAUSS_CACHE_DIR`` (or
``--cache-dir``) keyed by the hash of command and normalized options.
"""

from __future__ import annotations

import configparser
import json
import math
import os
import sys

import click

from . import finite_n, large_n, montecarlo
from .core import EnsembleSpec, PrefactorConvention, Space
from .errors import SymgaussError
from .manifest import (
    GAS_SIDECAR_SCHEMA,
    MASTERFIELD_HEADER_SCHEMA,
    RESULT_SCHEMA,
    VERIFY_SCHEMA,
    ResultCache,
    RunManifest,
    dumps,
    validate,
)
from .verify import SUITES, Verifier

SPACES = {
    "pdr": Space.PD_REAL,
    "pdc": Space.PD_COMPLEX,
    "pdq": Space.PD_QUATERNION,
    "siegel": Space.SIEGEL,
}
METHODS = ("auto", "closed", "skew", "mc", "quad", "largen")
MC_MAX_N = 16

COMPATIBILITY = """\
method   spaces                 N
closed   pdc                    any
skew     pdr, siegel            even, <= 24
mc       any                    <= 16
quad     any                    <= 4
largen   pdr, pdc, pdq          any
auto     closed > skew > largen"""


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    with open(path) as fh:
        parser.read_string("[config]\n" + fh.read())
    out = {}
    for key, value in parser["config"].items():
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        out[key.replace("-", "_")] = value
    return out


def _load_config(ctx, param, value):
    if value is None:
        return None
    try:
        cfg = read_config(value)
    except (OSError, configparser.Error) as exc:
        raise click.BadParameter(str(exc), ctx, param)
    ctx.default_map = {name: {k: v for k, v in cfg.items() if k in _options(cmd)} for name, cmd in main.commands.items()}
    known = set().union(*(_options(cmd) for cmd in main.commands.values()))
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise click.BadParameter(f"unknown keys {unknown}", ctx, param)
    return value


def _options(cmd) -> set:
    return {p.name for p in cmd.params}


def _usage(msg: str):
    raise click.UsageError(msg)


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", type=click.Path(dir_okay=False), callback=_load_config, is_eager=True, expose_value=False,
              help="Flat key = value file providing option defaults.")
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None, help="Result cache (default $SYMGAUSS_CACHE_DIR).")
@click.option("--no-cache", is_flag=True, help="Neither read nor write the cache.")
@click.version_option(package_name="artifact", prog_name="symgauss")
@click.pass_context
def main(ctx, cache_dir, no_cache):
    """Partition functions of Gaussian distributions on symmetric spaces."""
    ctx.obj = None if no_cache else ResultCache.from_env(cache_dir)


def _cached(ctx, manifest: RunManifest, produce, cacheable: bool = True, suffix: str = ".json") -> bytes:
    cache = ctx.obj
    if cache is None or not cacheable:
        return produce()
    key = manifest.config_hash
    with cache.locked(key):
        hit = cache.get(key, suffix)
        if hit is not None:
            return hit
        data = produce()
        cache.put(key, data, suffix)
        return data


# --------------------------------------------------------------------------
# partition


def _resolve_method(method: str, spec: EnsembleSpec) -> str:
    space, N = spec.space, spec.N
    allowed = {
        "closed": space is Space.PD_COMPLEX,
        "skew": space in (Space.PD_REAL, Space.SIEGEL) and N % 2 == 0 and N <= finite_n.MAX_SKEW_N,
        "mc": N <= MC_MAX_N,
        "quad": N <= finite_n.MAX_QUAD_N,
        "largen": space.is_pd,
    }
    if method == "auto":
        for m in ("closed", "skew", "largen"):
            if allowed[m]:
                return m
        _usage(f"no automatic method for space={space.value}, N={N}\n{COMPATIBILITY}")
    if not allowed[method]:
        _usage(f"method {method!r} is not available for space={space.value}, N={N}\n{COMPATIBILITY}")
    return method


@main.command()
@click.option("--space", type=click.Choice(sorted(SPACES)), required=True)
@click.option("--N", "n", type=click.IntRange(min=1), required=True)
@click.option("--sigma", type=float, default=None, help="Dispersion; alternatively give --t.")
@click.option("--t", "t", type=float, default=None, help="'t Hooft parameter N sigma^2.")
@click.option("--method", type=click.Choice(METHODS), default="auto", show_default=True)
@click.option("--beta", type=float, default=None, help="Generalized Dyson index (largen only).")
@click.option("--omega", type=float, default=1.0, show_default=True, help="omega_beta(N) for PD spaces.")
@click.option("--vol", type=float, default=1.0, show_default=True, help="vol(U(N)) for Siegel.")
@click.option("--no-prefactor", is_flag=True, help="Report the reduced value without the prefactor.")
@click.option("--samples", type=click.IntRange(min=1000), default=10**6, show_default=True)
@click.option("--seed", type=int, default=None, help="Monte Carlo seed; results are cached only when pinned.")
@click.option("--bits", type=click.IntRange(min=64), default=finite_n.DEFAULT_BITS, show_default=True)
@click.option("--gridpoints", type=click.IntRange(min=2), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def partition(ctx, space, n, sigma, t, method, beta, omega, vol, no_prefactor, samples, seed, bits, gridpoints, out):
    """Compute log Z for one ensemble."""
    if (sigma is None) == (t is None):
        _usage("give exactly one of --sigma and --t")
    try:
        sigma = sigma if sigma is not None else math.sqrt(t / n)
        sp = SPACES[space]
        generalized = beta is not None and beta != sp.native_beta
        spec = EnsembleSpec(sp, n, sigma, beta, generalized_beta=generalized)
        conv = PrefactorConvention(omega, vol, not no_prefactor)
    except SymgaussError as exc:
        _usage(str(exc))
    method = _resolve_method(method, spec)
    if spec.generalized_beta and method != "largen":
        _usage(f"beta={beta:g} differs from the native value; only --method largen accepts it")
    pinned = seed is not None
    seed = seed if pinned else int.from_bytes(os.urandom(4), "little")
    config = {"space": sp.value, "N": n, "sigma": sigma, "beta": spec.beta, "method": method,
              "convention": conv.as_dict(), "bits": bits, "gridpoints": gridpoints}
    if method == "mc":
        config.update(samples=samples, seed=seed)
    manifest = RunManifest.create("partition", config, seed=seed if method == "mc" else None,
                                  tolerances={"standard_form": finite_n.STANDARD_FORM_TOL, "f_uni": large_n.F_UNI_TOL},
                                  grid={"gridpoints": gridpoints, "samples": samples if method == "mc" else None})

    def produce() -> bytes:
        if method == "closed":
            res = finite_n.z2_closed_form(n, sigma, conv)
        elif method == "skew":
            route = finite_n.z1_finite if sp is Space.PD_REAL else finite_n.zS_finite
            res = route(n, sigma, conv, bits=bits)
        elif method == "mc":
            res = montecarlo.mc_partition(spec, samples, seed, conv)
        elif method == "quad":
            res = finite_n.direct_quadrature_logZ(spec, gridpoints, conv)
        else:
            res = large_n.large_n_partition(spec, conv)
        details = {k: v for k, v in res.details.items() if isinstance(v, (int, float, str, bool)) or v is None}
        doc = {
            "schema_version": 1,
            "log_value": res.log_value,
            "log_value_display": f"{res.log_value:.10g}",
            "std_error": res.error_estimate,
            "method": res.method.value,
            "convention": conv.as_dict(),
            "spec": {"space": sp.value, "N": n, "sigma": sigma, "t": spec.t, "beta": spec.beta},
            "details": details,
            "manifest_ref": manifest.config_hash,
            "manifest": manifest.to_dict(),
        }
        return dumps(validate(doc, RESULT_SCHEMA)).encode()

    try:
        data = _cached(ctx, manifest, produce, cacheable=method != "mc" or pinned)
    except SymgaussError as exc:
        raise click.ClickException(str(exc))
    _emit(data.decode(), out)


# --------------------------------------------------------------------------
# master fields


@main.command()
@click.option("--kind", type=click.Choice(["Q", "SW", "S"]), required=True)
@click.option("--t", "t", type=float, required=True)
@click.option("--beta", type=float, default=None,
              help="Dyson index of the gas [default: 2 for Q and SW, 1 for S].")
@click.option("--grid", type=int, default=512, show_default=True)
@click.option("--basis-size", type=int, default=16, show_default=True)
@click.option("--collocation", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.pass_context
def masterfield(ctx, kind, t, beta, grid, basis_size, collocation, out):
    """Tabulate a master field as CSV (lambda, rho) with a JSON header line.

    A gas at (beta, t) follows the closed-form field at beta t / 2 (Q, SW)
    and the solved Siegel field at beta t.
    """
    if beta is None:
        beta = 1.0 if kind == "S" else 2.0
    if grid < 2:
        _usage("--grid must be at least 2")
    if not (t > 0 and beta > 0):
        _usage("--t and --beta must be positive")
    config = {"kind": kind, "t": t, "beta": beta, "grid": grid}
    if kind == "S":
        config.update(basis_size=basis_size, collocation=collocation)
    manifest = RunManifest.create("masterfield", config, grid={"grid": grid})

    def produce() -> bytes:
        if kind == "Q":
            mf = large_n.master_field_q(beta * t / 2)
        elif kind == "SW":
            mf = large_n.master_field_sw(beta * t / 2)
        else:
            mf = large_n.siegel_saddle_solve(beta * t, basis_size, collocation)
        extra = {"beta": beta, "t_input": t, "manifest_ref": manifest.config_hash, "manifest": manifest.to_dict()}
        extra.setdefault("max_residual", mf.info.get("max_residual"))
        validate({**mf.header(), **extra, "grid": grid}, MASTERFIELD_HEADER_SCHEMA)
        mf.to_csv(out, grid, extra)
        with open(out, "rb") as fh:
            return fh.read()

    try:
        data = _cached(ctx, manifest, produce, suffix=".csv")
    except SymgaussError as exc:
        history = getattr(exc, "history", None)
        raise click.ClickException(f"{exc}" + (f"\nresidual history: {history}" if history else ""))
    with open(out, "wb") as fh:
        fh.write(data)


# --------------------------------------------------------------------------
# Coulomb gas


@main.command()
@click.option("--kind", type=click.Choice(["Q", "SW", "S"]), required=True)
@click.option("--N", "n", type=click.IntRange(min=2), default=64, show_default=True)
@click.option("--t", "t", type=float, required=True)
@click.option("--beta", type=float, default=2.0, show_default=True)
@click.option("--sweeps", type=click.IntRange(min=1), default=100_000, show_default=True)
@click.option("--burn-in", type=click.FloatRange(0, 1, max_open=True), default=0.2, show_default=True)
@click.option("--stride", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--step", type=float, default=None)
@click.option("--seed", type=int, required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "npy"]), default="npy", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gas(kind, n, t, beta, sweeps, burn_in, stride, step, seed, fmt, out):
    """Sample the eigenvalue gas and write snapshots plus a JSON sidecar."""
    try:
        g = montecarlo.initial_gas_state(kind, n, t, beta)
        chain = montecarlo.coulomb_metropolis(g, sweeps, step, seed, burn_in, stride)
    except SymgaussError as exc:
        raise click.ClickException(str(exc))
    _, side = montecarlo.write_snapshots(chain, out, fmt)
    validate(json.loads(side.read_text()), GAS_SIDECAR_SCHEMA)
    click.echo(f"acceptance {chain.acceptance:.4f}  step {chain.step:.6g}  snapshots {chain.snapshots.shape[0]}", err=True)


# --------------------------------------------------------------------------
# verification


@main.command()
@click.option("--suite", type=click.Choice(sorted(SUITES)), default="all", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the JSON report here.")
def verify(suite, seed, out):
    """Run cross-route verification checks; exit 1 on any failure."""
    v = Verifier() if seed is None else Verifier(seed=seed)
    results = v.run(suite, echo=lambda line: click.echo(line, err=True))
    manifest = RunManifest.create("verify", {"suite": suite, "seed": v.seed}, seed=v.seed)
    report = {
        "schema_version": 1,
        "suite": suite,
        "passed": all(c.passed for c in results),
        "criteria": [c.as_dict() for c in results],
        "manifest": manifest.to_dict(),
    }
    _emit(dumps(validate(report, VERIFY_SCHEMA)), out)
    sys.exit(0 if report["passed"] else 1)


if __name__ == "__main__":
    main()
