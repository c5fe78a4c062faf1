"""Command-line interface, a thin client over the HTTP service.

Commands build a request, send it to the service (in-process by
default, or to ``--server http://host:port``), and format the response.
Exit codes: 0 success, 1 usage or service error, 2 session aborted.

The default seed is 42; runs with the same flags reproduce bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import sys

import click

from .client import LOCAL_SERVER, ServiceClient, ServiceError
from .session import DEFAULT_SEED

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ABORTED = 2

_FORMATS = click.Choice(["text", "json", "csv"])
_SCOPES = {"channel": "quantum_channel_only", "all-qubits": "all_qubits"}


def _canonical(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False)


def _csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_value(v) for v in row])
    return buffer.getvalue().rstrip("\n")


def _table_text(header: list[str], rows: list[list]) -> str:
    cells = [[_csv_value(v) for v in row] for row in rows]
    widths = [
        max([len(header[i])] + [len(row[i]) for row in cells])
        for i in range(len(header))
    ]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip()]
    for row in cells:
        lines.append("  ".join(v.ljust(widths[i]) for i, v in enumerate(row)).rstrip())
    return "\n".join(lines)


def _parse_eve(ctx, param, value: str) -> dict:
    if value == "none":
        return {"kind": "none"}
    if value == "intercept-resend-b92":
        return {"kind": "intercept_resend_b92"}
    prefix = "intercept-resend-ghz:"
    if value.startswith(prefix):
        tail = value[len(prefix):]
        if tail in ("0", "1", "2"):
            return {"kind": "intercept_resend_ghz", "target_qubit": int(tail)}
        raise click.BadParameter(
            f"target qubit must be 0, 1, or 2, got {tail!r}", ctx=ctx, param=param
        )
    raise click.BadParameter(
        "expected none, intercept-resend-b92, or intercept-resend-ghz:<qubit>",
        ctx=ctx,
        param=param,
    )


def _parse_batches(ctx, param, value: str | None) -> list[int] | None:
    if value is None:
        return None
    try:
        batches = [int(p) for p in value.split(",") if p]
    except ValueError:
        raise click.BadParameter(
            f"expected a comma-separated list of integers, got {value!r}",
            ctx=ctx,
            param=param,
        )
    if not batches or any(b < 1 for b in batches):
        raise click.BadParameter("batch counts must be >= 1", ctx=ctx, param=param)
    return batches


def _shared_options(fn):
    """Options common to run, compare, and sweep (noise and s excluded)."""
    decorators = [
        click.option("--rounds", type=click.IntRange(min=1), default=1000,
                     show_default=True, help="Number of protocol rounds."),
        click.option("--seed", type=click.IntRange(min=0), default=DEFAULT_SEED,
                     show_default=True,
                     help="Session seed; the fixed default makes runs reproducible."),
        click.option("--noise-scope", type=click.Choice(sorted(_SCOPES)),
                     default="channel", show_default=True,
                     help="Apply noise to the transmitted register as a whole or per qubit."),
        click.option("--eve", callback=_parse_eve, default="none", show_default=True,
                     help="Eavesdropper: none, intercept-resend-b92, or intercept-resend-ghz:<qubit>."),
        click.option("--coin", type=click.Choice(["shared", "two-coin"]),
                     default="shared", show_default=True,
                     help="One shared coin flip, or two flips discarding disagreements."),
        click.option("--security-n", type=click.IntRange(min=1), default=128,
                     show_default=True, help="Nominal key length n for the entropy bound."),
        click.option("--check-tolerance",
                     type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True),
                     default=0.25, show_default=True,
                     help="Allowed deviation of check-round mean products."),
        click.option("--min-check-samples", type=click.IntRange(min=0), default=16,
                     show_default=True, help="Evidence floor per check combination."),
        click.option("--qber-threshold",
                     type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True),
                     default=0.15, show_default=True,
                     help="Abort when the sifted error rate exceeds this."),
        click.option("--eve-first", is_flag=True, default=False,
                     help="Let Eve act before channel noise instead of after."),
        click.option("--server", default=LOCAL_SERVER, show_default=True,
                     help="Service URL, or 'local' to run in-process."),
        click.option("--format", "fmt", type=_FORMATS, default="text",
                     show_default=True, help="Output format."),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


def _base_payload(rounds, seed, noise_p, noise_scope, eve, coin, security_s,
                  security_n, check_tolerance, min_check_samples, qber_threshold,
                  eve_first) -> dict:
    return {
        "rounds": rounds,
        "seed": seed,
        "noise": {"p": noise_p, "apply_to": _SCOPES[noise_scope]},
        "eve": eve,
        "security": {"s": security_s, "n": security_n},
        "coin_mode": "two_coin" if coin == "two-coin" else "shared",
        "check_tolerance": check_tolerance,
        "min_check_samples": min_check_samples,
        "qber_threshold": qber_threshold,
        "eve_before_noise": eve_first,
    }


@click.group()
def cli() -> None:
    """Hybrid GHZ/B92 key-distribution simulator."""


@cli.command()
@_shared_options
@click.option("--noise", "noise_p", type=click.FloatRange(0.0, 1.0), default=0.0,
              show_default=True, help="Depolarizing probability.")
@click.option("--security-s", type=click.IntRange(min=1, max=64), default=20,
              show_default=True, help="Security exponent s.")
@click.option("--protocol", type=click.Choice(["combined", "ghz", "b92"]),
              default="combined", show_default=True,
              help="Run the full hybrid or pin every round to one branch.")
@click.option("--log", "log_path", type=click.Path(dir_okay=False, writable=True),
              default=None, help="Write a JSONL round log to this file.")
def run(noise_p, security_s, protocol, log_path, fmt, server, **common) -> int:
    """Run one session and report keys, checks, and the verdict."""
    payload = _base_payload(noise_p=noise_p, security_s=security_s, **common)
    payload["protocol"] = protocol
    payload["include_round_log"] = log_path is not None
    response = ServiceClient(server).run(payload)
    report = response["report"]
    if log_path is not None:
        with open(log_path, "w", encoding="utf-8") as fh:
            for line in response["round_log"]:
                fh.write(line + "\n")
    if fmt == "json":
        click.echo(_canonical(report))
    elif fmt == "csv":
        click.echo(_run_csv(report))
    else:
        click.echo(_run_text(report))
    return EXIT_ABORTED if report["verdict"]["status"] == "aborted" else EXIT_OK


def _run_text(report: dict) -> str:
    counts = report["counts"]
    verdict = report["verdict"]
    rates = report["empirical_rates"]
    analytics = report["analytics"]
    status = verdict["status"]
    if verdict["reason"]:
        status += f" ({verdict['reason']})"
    lines = [f"session: {status}"]
    lines.append(
        "rounds: {total} (ghz {g}, b92 {b}, coin-discarded {d})".format(
            total=counts["total_rounds"],
            g=counts["ghz_rounds"],
            b=counts["b92_rounds"],
            d=counts["coin_discarded_rounds"],
        )
    )
    lines.append(
        "fidelity: {f:.6f} (security: {ok})".format(
            f=report["fidelity_used"],
            ok="violated" if verdict["reason"] == "fidelity" else "ok",
        )
    )
    check = report["check_report"]
    lines.append(
        f"correlation check: {'passed' if check['passed'] else 'failed'}"
        f" (tolerance {check['tolerance']})"
    )
    for stat in check["combinations"]:
        mean = stat["mean_product"]
        mean_text = "unsampled" if mean is None else f"mean {mean:+.3f}"
        lines.append(f"  {stat['combination']}: n={stat['sample_count']} {mean_text}")
    agreement = report["ghz_key_agreement"]
    lines.append(
        "ghz key bits: {n}{agree}".format(
            n=len(report["keys"]["ghz_key_bits"]),
            agree="" if agreement is None else f" (receiver agreement {agreement:.3f})",
        )
    )
    qber = report["qber"]
    lines.append(
        "b92 sifted bits: {n}{q}".format(
            n=len(report["keys"]["b92_alice_bits"]),
            q="" if qber is None else f" (qber {qber:.3f})",
        )
    )
    lines.append(
        "combined key bits: {n} ({r:.4f} bits/round)".format(
            n=len(report["keys"]["combined_key_bits"]),
            r=rates["combined_bits_per_round"],
        )
    )
    lines.append(
        "analytics: conclusive-prob stated {a:.3f} realized-rate {p:.3f};"
        " combined-rate stated {cs:.4f} procedural {cp:.4f};"
        " entropy bound {e:.3e} bits".format(
            a=analytics["b92_conclusive_probability_analytic"],
            p=analytics["b92_sift_rate_procedural"],
            cs=analytics["combined_rate_factor_stated"],
            cp=analytics["combined_rate_factor_procedural"],
            e=analytics["entropy_bound_bits"],
        )
    )
    return "\n".join(lines)


def _run_csv(report: dict) -> str:
    counts = report["counts"]
    check = report["check_report"]
    rates = report["empirical_rates"]
    analytics = report["analytics"]
    keys = report["keys"]
    rows: list[list] = [
        ["session", "schema_version", report["schema_version"]],
        ["session", "verdict", report["verdict"]["status"]],
        ["session", "abort_reason", report["verdict"]["reason"]],
        ["session", "total_rounds", counts["total_rounds"]],
        ["session", "coin_discarded_rounds", counts["coin_discarded_rounds"]],
        ["session", "fidelity_used", report["fidelity_used"]],
        ["session", "qber", report["qber"]],
        ["ghz", "rounds", counts["ghz_rounds"]],
        ["ghz", "key_rounds", counts["ghz_key_rounds"]],
        ["ghz", "check_rounds", counts["ghz_check_rounds"]],
        ["ghz", "discarded_rounds", counts["ghz_discarded_rounds"]],
        ["ghz", "key_bits", len(keys["ghz_key_bits"])],
        ["ghz", "key_rate", rates["ghz_key_rate"]],
        ["ghz", "key_agreement", report["ghz_key_agreement"]],
        ["ghz", "check_passed", check["passed"]],
    ]
    for stat in check["combinations"]:
        combo = stat["combination"]
        rows.append(["ghz", f"check_{combo}_samples", stat["sample_count"]])
        rows.append(["ghz", f"check_{combo}_mean", stat["mean_product"]])
    rows.extend(
        [
            ["b92", "rounds", counts["b92_rounds"]],
            ["b92", "conclusive_rounds", counts["b92_conclusive_rounds"]],
            ["b92", "sifted_bits", len(keys["b92_alice_bits"])],
            ["b92", "sift_rate", rates["b92_sift_rate"]],
            [
                "b92",
                "conclusive_probability_analytic",
                analytics["b92_conclusive_probability_analytic"],
            ],
            ["b92", "sift_rate_procedural", analytics["b92_sift_rate_procedural"]],
            ["combined", "key_bits", len(keys["combined_key_bits"])],
            ["combined", "bits_per_round", rates["combined_bits_per_round"]],
            ["combined", "rate_factor_stated", analytics["combined_rate_factor_stated"]],
            [
                "combined",
                "rate_factor_procedural",
                analytics["combined_rate_factor_procedural"],
            ],
            ["combined", "entropy_bound_bits", analytics["entropy_bound_bits"]],
        ]
    )
    return _csv_text(["protocol", "metric", "value"], rows)


@cli.command()
@_shared_options
@click.option("--noise", "noise_p", type=click.FloatRange(0.0, 1.0), default=0.0,
              show_default=True, help="Depolarizing probability.")
@click.option("--security-s", type=click.IntRange(min=1, max=64), default=20,
              show_default=True, help="Security exponent s.")
@click.option("--batches", callback=_parse_batches, default=None,
              help="Comma-separated batch counts; emit per-batch key yields "
                   "instead of the protocol table.")
def compare(noise_p, security_s, batches, fmt, server, **common) -> int:
    """Compare combined, GHZ-only, and B92-only yields on one seed."""
    payload = _base_payload(noise_p=noise_p, security_s=security_s, **common)
    if batches is not None:
        payload["batches"] = batches
    response = ServiceClient(server).compare(payload)
    if fmt == "json":
        click.echo(_canonical(response))
        return EXIT_OK
    if response.get("batch_tables") is not None:
        header = ["label", "num_batches", "batch_index", "rounds", "key_bits",
                  "cumulative_key_bits"]
        rows = [
            [t["label"], t["num_batches"], r["batch_index"], r["rounds"],
             r["key_bits"], r["cumulative_key_bits"]]
            for t in response["batch_tables"]
            for r in t["rows"]
        ]
    else:
        header = ["label", "protocol", "total_rounds", "seed", "key_bits",
                  "bits_per_round", "verdict", "abort_reason"]
        rows = [[r[h] for h in header] for r in response["rows"]]
    click.echo(_csv_text(header, rows) if fmt == "csv" else _table_text(header, rows))
    return EXIT_OK


def _parse_point_or_range(ctx, param, value: str):
    """A flag that is either a fixed number or a START:STOP:STEP range."""
    if ":" not in value:
        try:
            return float(value)
        except ValueError:
            raise click.BadParameter(f"expected a number, got {value!r}",
                                     ctx=ctx, param=param)
    parts = value.split(":")
    if len(parts) != 3:
        raise click.BadParameter(f"expected START:STOP:STEP, got {value!r}",
                                 ctx=ctx, param=param)
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise click.BadParameter(f"range bounds must be numbers, got {value!r}",
                                 ctx=ctx, param=param)
    if step <= 0:
        raise click.BadParameter("range step must be positive", ctx=ctx, param=param)
    if start > stop:
        raise click.BadParameter("range start must not exceed stop",
                                 ctx=ctx, param=param)
    return start, stop, step


@cli.command()
@_shared_options
@click.option("--noise", "noise_spec", callback=_parse_point_or_range, default="0.0",
              show_default=True,
              help="Depolarizing probability: fixed value or START:STOP:STEP sweep range.")
@click.option("--security-s", "s_spec", callback=_parse_point_or_range, default="20",
              show_default=True,
              help="Security exponent: fixed value or START:STOP:STEP sweep range.")
@click.option("--protocol", type=click.Choice(["combined", "ghz", "b92"]),
              default="combined", show_default=True)
def sweep(noise_spec, s_spec, protocol, fmt, server, **common) -> int:
    """Sweep noise or the security exponent and tabulate the outcomes."""
    noise_is_range = isinstance(noise_spec, tuple)
    s_is_range = isinstance(s_spec, tuple)
    if noise_is_range == s_is_range:
        raise click.UsageError(
            "give exactly one of --noise or --security-s as a START:STOP:STEP range"
        )
    if noise_is_range:
        parameter = "noise"
        start, stop, step = noise_spec
        noise_p, security_s = start, int(s_spec)
        if float(s_spec) != int(s_spec):
            raise click.UsageError("--security-s must be an integer")
    else:
        parameter = "security_s"
        start, stop, step = s_spec
        noise_p, security_s = float(noise_spec), int(start)
    payload = _base_payload(noise_p=noise_p, security_s=security_s, **common)
    payload["protocol"] = protocol
    payload["parameter"] = parameter
    payload["start"], payload["stop"], payload["step"] = start, stop, step
    response = ServiceClient(server).sweep(payload)
    if fmt == "json":
        click.echo(_canonical(response))
        return EXIT_OK
    header = ["p", "s", "ghz_fidelity", "b92_fidelity", "combined_fidelity",
              "security_ok", "verdict", "abort_reason", "ghz_key_bits",
              "b92_sifted_bits", "combined_key_bits", "qber"]
    rows = [[r[h] for h in header] for r in response["rows"]]
    click.echo(_csv_text(header, rows) if fmt == "csv" else _table_text(header, rows))
    return EXIT_OK


@cli.command()
@click.option("--server", default=LOCAL_SERVER, show_default=True,
              help="Service URL, or 'local' to run in-process.")
@click.option("--format", "fmt", type=_FORMATS, default="text", show_default=True)
def paradox(server, fmt) -> int:
    """Show the check-round expectations against the local-realist bound."""
    response = ServiceClient(server).paradox()
    if fmt == "json":
        click.echo(_canonical(response))
    elif fmt == "csv":
        rows: list[list] = [
            [e["combination"], e["value"]] for e in response["expectations"]
        ]
        rows.append(["quantum_product", response["quantum_product"]])
        rows.append(["lhv_product", response["lhv_product"]])
        click.echo(_csv_text(["name", "value"], rows))
    else:
        lines = ["combination  expectation"]
        for e in response["expectations"]:
            lines.append(f"{e['combination']:<12} {e['value']:+.1f}")
        lines.append(f"quantum product: {response['quantum_product']:+.1f}")
        lines.append(f"local-realist product: {response['lhv_product']:+d}")
        click.echo("\n".join(lines))
    return EXIT_OK


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port) -> int:
    """Serve the HTTP API."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """Run the CLI with explicit exit-code mapping."""
    try:
        result = cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    except ServiceError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    return result if isinstance(result, int) else EXIT_OK


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))
