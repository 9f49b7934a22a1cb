"""Subcommand implementations: each prints progress to stderr and emits one report."""

import sys
from dataclasses import replace
from typing import Any, Optional, Sequence

from . import config, harness, reports, resources
from .amplitude import qae_scaling_study
from .errors import InvalidArgument, require
from .runconfig import RunConfig, load_config

VERIFY_SUITES = ("tail", "truncation", "clipping", "arrival-cap", "jsq-clipping", "nummelin", "consistency")
_SUITE_MODELS = {
    "tail": ("gg1", "maxweight", "jsq"),
    "truncation": ("gg1", "maxweight"),
    "clipping": ("gg1",),
    "arrival-cap": ("jsq",),
    "jsq-clipping": ("jsq",),
    "nummelin": ("jsq",),
    "consistency": ("gg1", "maxweight", "jsq"),
}
POINT_COLUMNS = ("check", "t", "empirical", "bound", "slack")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED = 2


class Console:
    """Progress printer on standard error."""

    def __init__(self, quiet: bool = False):
        self.quiet = quiet

    def __call__(self, message: str = "") -> None:
        if not self.quiet:
            print(message, file=sys.stderr)


def resolve_run(
    config_path: str,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    out: Optional[str] = None,
    fmt: Optional[str] = None,
) -> RunConfig:
    """Load a run config and apply overrides: CLI flag > environment > config file."""
    run = load_config(config_path)
    env_seed = config.get_env_seed()
    env_threads = config.get_env_threads()
    master_seed = seed if seed is not None else (env_seed if env_seed is not None else run.master_seed)
    workers = threads if threads is not None else (env_threads if env_threads is not None else run.threads)
    require(0 <= master_seed < 1 << 64, "seed must fit in 64 bits", seed=master_seed)
    require(workers >= 1, "threads must be at least 1", threads=workers)
    return replace(
        run,
        master_seed=master_seed,
        threads=workers,
        output_dir=out if out is not None else run.output_dir,
        output_format=fmt if fmt is not None else run.output_format,
    )


def emit(
    command: str,
    report: Any,
    raw_config: dict[str, Any],
    master_seed: int,
    out: Optional[str],
    fmt: str,
    say: Console,
    rows: Optional[Sequence[dict[str, Any]]] = None,
    columns: Sequence[str] = POINT_COLUMNS,
) -> None:
    """Write the JSON report (and CSV rows when asked) to `out`, or print to stdout."""
    body = reports.with_provenance(report, raw_config, command)
    body["master_seed"] = master_seed
    text = reports.canonical_json(body)
    csv_text = reports.rows_to_csv(rows, columns) if fmt == "csv" and rows is not None else None

    if out:
        path = reports.write_text(config.get_report_path(out, command, "json"), text)
        say(f"  ✓ Report: {path}")
        if csv_text is not None:
            path = reports.write_text(config.get_report_path(out, command, "csv"), csv_text)
            say(f"  ✓ Points: {path}")
    else:
        sys.stdout.write(csv_text if csv_text is not None else text)


def plan_command(run: RunConfig, say: Console) -> int:
    say(f"=== plan: {run.model} ===")
    plan = harness.plan_model(run, quiet=say.quiet)
    say(f"  M / R_A:      {plan.M}")
    say(f"  eps_Q:        {plan.eps_Q:.4e}")
    say(f"  truncation:   {plan.trunc_bound:.4e}")
    say(f"  clipping:     {plan.clip_bound:.4e}")
    if plan.clip_level_B is not None:
        say(f"  clip level B: {plan.clip_level_B:.4f}")
    say(f"  {'✓' if plan.budget_ok else '✗'} budget {'within' if plan.budget_ok else 'exceeds'} eps_tot={plan.eps_tot:g}")
    emit("plan", plan.to_dict(), run.raw, run.master_seed, run.output_dir, run.output_format, say)
    return EXIT_OK


def _print_estimate(report: harness.CertificationReport, say: Console) -> None:
    say(f"  p_hat:        {report.p_hat:.6e}")
    say(f"  p_upper:      {report.p_upper:.6e}")
    say(f"  E[R] / E[tau]: {report.E_R_hat:.6e} / {report.E_tau_hat:.6f}")
    budget = report.budget
    mark = "✓" if budget.ok else "✗"
    say(f"  {mark} error budget {budget.total:.3e} (target {budget.target:.3e})")


def estimate_command(run: RunConfig, say: Console, mode: Optional[str] = None) -> int:
    mode = mode or run.mode
    say(f"=== estimate: {run.model} ({mode}) ===")
    report = harness.estimate_tail_probability(run, mode=mode, quiet=say.quiet)
    _print_estimate(report, say)
    emit("estimate", report.to_dict(), run.raw, run.master_seed, run.output_dir, run.output_format, say)
    return EXIT_OK


def certify_command(run: RunConfig, say: Console, k: Optional[int] = None, mode: Optional[str] = None) -> int:
    k = k if k is not None else run.k
    if k is None:
        raise InvalidArgument("certify needs k (from --k or plan.k in the config)")
    mode = mode or run.mode
    say(f"=== certify: {run.model}, p_d <= 1e-{k} ({mode}) ===")
    report = harness.certify(run, k, mode=mode, quiet=say.quiet)
    _print_estimate(report, say)
    if report.certified:
        say(f"  ✓ certified: p_d <= 1e-{k}")
    else:
        say(f"  ✗ not certified at 1e-{k}")
    emit("certify", report.to_dict(), run.raw, run.master_seed, run.output_dir, run.output_format, say)
    return EXIT_OK if report.certified else EXIT_FAILED


def _suites_for(run: RunConfig, suite: str) -> list[str]:
    if suite != "all":
        if run.model not in _SUITE_MODELS[suite]:
            raise InvalidArgument(f"suite '{suite}' does not apply to model '{run.model}'", {"suite": suite})
        return [suite]
    selected = [name for name in VERIFY_SUITES if run.model in _SUITE_MODELS[name]]
    if run.model == "gg1" and harness.plan_model(run).clip_level_B is None:
        selected.remove("clipping")
    return selected


def _run_suite(run: RunConfig, name: str, n_cycles: int, n_long: int) -> tuple[Any, bool]:
    if name == "tail":
        result = harness.verify_regeneration_tail(run, n_cycles=n_cycles)
    elif name == "truncation":
        result = harness.verify_truncation_bias(run, n_cycles=n_cycles)
    elif name == "clipping":
        result = harness.verify_clipping_bias(run, n_cycles=n_cycles)
    elif name == "arrival-cap":
        result = harness.jsq_truncation_bias_estimate(run, n_cycles=n_cycles)
    elif name == "jsq-clipping":
        result = harness.verify_jsq_clipping_bias(run, n_cycles=n_cycles)
    elif name == "nummelin":
        result = harness.nummelin_acceptance(run, n_cycles=n_cycles)
        return result, not result.within_band
    else:
        result = harness.ratio_consistency(run, n_cycles=n_cycles, n_long=n_long)
        return result, not result.overlap
    return result, result.violated


def verify_command(
    run: RunConfig,
    say: Console,
    suite: str = "all",
    n_cycles: int = config.DEFAULT_VERIFY_CYCLES,
    n_long: int = config.DEFAULT_LONG_RUN,
) -> int:
    say(f"=== verify: {run.model} ===")
    results: dict[str, Any] = {}
    rows: list[dict[str, Any]] = []
    failed = []
    for name in _suites_for(run, suite):
        say(f"  running {name}...")
        result, bad = _run_suite(run, name, n_cycles, n_long)
        results[name] = result
        if isinstance(result, harness.BoundCheckReport):
            rows.extend({"check": name, **row} for row in result.rows())
        say(f"  {'✗' if bad else '✓'} {name}")
        if bad:
            failed.append(name)
    report = {"model": run.model, "checks": results, "failed": failed}
    emit("verify", report, run.raw, run.master_seed, run.output_dir, run.output_format, say, rows=rows)
    return EXIT_FAILED if failed else EXIT_OK


def resources_command(
    run: RunConfig,
    say: Console,
    value_bits: int = config.DEFAULT_VALUE_BITS,
    output_bits: int = config.DEFAULT_OUTPUT_BITS,
) -> int:
    say(f"=== resources: {run.model} ===")
    plan = harness.plan_model(run, quiet=say.quiet)
    params = run.params
    if run.model == "gg1":
        report = resources.resource_report(
            plan.M, value_bits, value_bits, output_bits, run.seed_bits, run.eps_tot, run.alpha_Q
        )
    elif run.model == "maxweight":
        report = resources.wireless_resource_report(
            params.K, plan.M, params.A_max, params.mu_max, run.seed_bits, output_bits, run.eps_tot, run.alpha_Q
        )
    else:
        report = resources.jsq_resource_report(
            params.K, plan.M, value_bits, run.seed_bits, output_bits, run.eps_tot, run.alpha_Q
        )
    say(f"  qubits:       {report.total_Q}")
    say(f"  oracle gates: {report.Tf_gates}")
    say(f"  QAE gates:    {report.TQAE_gates}")
    emit("resources", report.to_dict(), run.raw, run.master_seed, run.output_dir, run.output_format, say)
    return EXIT_OK


def qae_scaling_command(
    say: Console,
    a_true: float = config.DEFAULT_SCALING_AMPLITUDE,
    eps_grid: Sequence[float] = config.DEFAULT_SCALING_EPS,
    delta: float = config.DEFAULT_SCALING_DELTA,
    runs: int = config.DEFAULT_SCALING_RUNS,
    master_seed: int = config.DEFAULT_MASTER_SEED,
    raw_config: Optional[dict[str, Any]] = None,
    out: Optional[str] = None,
    fmt: str = "csv",
) -> int:
    say(f"=== qae-scaling: a={a_true}, {len(eps_grid)} accuracies x {runs} runs ===")
    rows, slopes = qae_scaling_study(a_true, eps_grid, delta, runs, master_seed)
    for row in rows:
        say(f"  eps={row.eps:<8g} {row.method:<5} median queries {row.median_queries:>14.0f}  hit rate {row.success_rate:.3f}")
    say(f"  slopes: iqae {slopes['iqae']:.3f}, mc {slopes['mc']:.3f}")
    report = {"a_true": a_true, "delta": delta, "runs": runs, "rows": rows, "slopes": slopes}
    emit(
        "qae-scaling",
        report,
        raw_config or {},
        master_seed,
        out,
        fmt,
        say,
        rows=[reports.plain(row) for row in rows],
        columns=("eps", "method", "median_queries", "success_rate", "runs"),
    )
    return EXIT_OK
