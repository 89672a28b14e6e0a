"""Operator CLI: a thin client of the HTTP service.

Every command builds the same request a remote client would send.  Without
``--server`` the requests run against an in-process instance of the app
(same routing, validation and error mapping, no socket); with ``--server``
they go to a running service.

Exit codes: 0 success, 1 argument/usage errors, 2 dataset format errors,
3 calibration errors, 4 prediction reconciliation errors.
"""

from __future__ import annotations

import asyncio
import json
import sys
import time
from typing import Optional

import click
import httpx

EXIT_CODES = {
    "argument": 1,
    "format": 2,
    "calibration": 3,
    "reconciliation": 4,
}


async def _request(server: Optional[str], path: str, payload: dict) -> httpx.Response:
    if server:
        async with httpx.AsyncClient(base_url=server, timeout=600.0) as client:
            return await client.post(path, json=payload)
    from .service import create_app

    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(transport=transport, base_url="http://service",
                                 timeout=600.0) as client:
        return await client.post(path, json=payload)


def _post(ctx: click.Context, path: str, payload: dict) -> dict:
    response = asyncio.run(_request(ctx.obj.get("server"), path, payload))
    if response.status_code >= 400:
        try:
            body = response.json()
        except json.JSONDecodeError:
            body = {"category": "argument", "detail": response.text}
        category = body.get("category", "argument")
        detail = body.get("detail", str(body))
        click.echo(f"error ({category}): {detail}", err=True)
        sys.exit(EXIT_CODES.get(category, 1))
    return response.json()


def _config_payload(config_path: Optional[str]) -> dict:
    if not config_path:
        return {}
    from .estimator import parse_config_text

    try:
        text = open(config_path, "r", encoding="utf-8").read()
        pipeline_cfg, estimator_cfg = parse_config_text(text)
    except (OSError, ValueError) as exc:
        click.echo(f"error (argument): cannot read config {config_path}: {exc}", err=True)
        sys.exit(EXIT_CODES["argument"])
    return {
        "pipeline": {
            "smoothing_window": pipeline_cfg.smoothing_window,
            "variance_window": pipeline_cfg.variance_window,
            "onset_threshold": pipeline_cfg.onset_threshold,
            "frame_interval_ms": pipeline_cfg.frame_interval_ms,
        },
        "estimator": {
            "t_null": estimator_cfg.t_null,
            "t_onset": estimator_cfg.t_onset,
            "dt_obstruct": estimator_cfg.dt_obstruct,
            "r_branch": estimator_cfg.r_branch,
        },
    }


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Base URL of a running service; default runs in-process.")
@click.pass_context
def main(ctx: click.Context, server: Optional[str]) -> None:
    """Tactile grasp-state perception toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.option("--out", "--dataset", "out", required=True, metavar="PATH",
              help="Output dataset path (.tgd).")
@click.option("--seed", default=None, type=int, help="Generator seed.")
@click.option("--noise-sd", default=None, type=float, help="Gaussian noise sd.")
@click.option("--kind", type=click.Choice(["benchmark", "sweep"]), default="benchmark")
@click.option("--per-class", default=10, type=int,
              help="Recordings per class for sweep datasets.")
@click.pass_context
def generate(ctx: click.Context, out: str, seed: Optional[int],
             noise_sd: Optional[float], kind: str, per_class: int) -> None:
    """Synthesize a labeled benchmark or scenario sweep."""
    payload: dict = {"path": out, "kind": kind, "per_class": per_class}
    if seed is not None:
        payload["seed"] = seed
    if noise_sd is not None:
        payload["noise_sd"] = noise_sd
    body = _post(ctx, "/datasets/generate", payload)
    histogram = " ".join(f"{k}={v}" for k, v in sorted(body["class_histogram"].items()))
    click.echo(f"wrote {body['recordings']} recordings to {body['path']} ({histogram})")
    click.echo(f"payload crc32 {body['payload_crc32']}")


@main.command()
@click.option("--dataset", required=True, metavar="PATH")
@click.option("--out", "out", default=None, metavar="PATH",
              help="Write the calibrated config text here.")
@click.pass_context
def calibrate(ctx: click.Context, dataset: str, out: Optional[str]) -> None:
    """Grid-search estimator thresholds on a labeled dataset."""
    payload: dict = {"dataset": dataset}
    if out:
        payload["save_config"] = out
    body = _post(ctx, "/estimator/calibrate", payload)
    click.echo(body["config_text"], nl=False)
    if out:
        click.echo(f"# written to {out}")


@main.command()
@click.option("--dataset", required=True, metavar="PATH")
@click.option("--id", "recording_id", required=True, metavar="RID")
@click.option("--config", "config_path", default=None, metavar="PATH")
@click.pass_context
def classify(ctx: click.Context, dataset: str, recording_id: str,
             config_path: Optional[str]) -> None:
    """Classify one recording and print the decision trace."""
    payload: dict = {"dataset": dataset, "recording_id": recording_id}
    config = _config_payload(config_path)
    if config:
        payload["config"] = config
    body = _post(ctx, "/recordings/classify", payload)
    trace = body["trace"]
    state = body["state"] + (f" {body['finger']}" if body["finger"] is not None else "")
    click.echo(f"recording {body['recording_id']}: {state}")
    if body["label"]:
        click.echo(f"label: {body['label']}")
    click.echo("per-finger max variance: "
               + " ".join(f"{v:.3e}" for v in trace["per_finger_max"]))
    click.echo("onsets: " + " ".join(str(o) for o in trace["onsets"]))
    click.echo(f"span: [{trace['span'][0]}, {trace['span'][1]})")
    click.echo(f"thresholds: t_null={trace['t_null']:.3e} t_onset={trace['t_onset']:.3e} "
               f"dt_obstruct={trace['dt_obstruct']} r_branch={trace['r_branch']}")


@main.command()
@click.option("--dataset", required=True, metavar="PATH")
@click.option("--id", "recording_id", required=True, metavar="RID")
@click.option("--config", "config_path", default=None, metavar="PATH")
@click.option("--max-retries", default=2, type=int)
@click.option("--speed", type=click.Choice(["max", "real"]), default="max",
              help="real paces the event log at the frame interval.")
@click.pass_context
def replay(ctx: click.Context, dataset: str, recording_id: str,
           config_path: Optional[str], max_retries: int, speed: str) -> None:
    """Stream a recording through pipeline, estimator and controller."""
    payload: dict = {"dataset": dataset, "recording_id": recording_id,
                     "max_retries": max_retries}
    config = _config_payload(config_path)
    if config:
        payload["config"] = config
    body = _post(ctx, "/controller/replay", payload)
    interval_s = body["frame_interval_ms"] / 1000.0
    last_frame = 0
    for event in body["events"]:
        if speed == "real":
            time.sleep(max(0, event["frame"] - last_frame) * interval_s)
            last_frame = event["frame"]
        actions = ",".join(event["actions"]) or "-"
        click.echo(f"frame {event['frame']:>4}  {event['event']:<28} "
                   f"-> {event['phase']:<12} {actions}")
    click.echo(f"final {body['final_phase']} after {body['attempts']} attempt(s), "
               f"complete={'yes' if body['complete'] else 'no'}")


@main.command()
@click.option("--dataset", required=True, metavar="PATH")
@click.option("--predictions", default=None, metavar="PATH",
              help="External predictions file; default runs the rule estimator.")
@click.option("--config", "config_path", default=None, metavar="PATH")
@click.option("--report", default=None, metavar="PATH",
              help="Write the machine-readable report here.")
@click.pass_context
def evaluate(ctx: click.Context, dataset: str, predictions: Optional[str],
             config_path: Optional[str], report: Optional[str]) -> None:
    """Score predictions against dataset labels."""
    payload: dict = {"dataset": dataset}
    if predictions:
        payload["predictions"] = predictions
    if report:
        payload["report"] = report
    config = _config_payload(config_path)
    if config:
        payload["config"] = config
    body = _post(ctx, "/evaluate", payload)
    click.echo(body["table"], nl=False)
    if report:
        click.echo(f"report written to {report}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8077, type=int)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("tactile_grasp.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
