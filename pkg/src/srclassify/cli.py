"""Command-line client for the classification service.

Every command talks to the HTTP API: by default against an in-process
instance of the app, or against a running server when ``--url`` is given.
``serve`` starts that server. Results go to stdout; progress and errors go
to stderr.
"""

from __future__ import annotations

from pathlib import Path

import click

from .classifiers import CLASSIFIER_KINDS


class InProcessHTTP:
    """Synchronous requests against an ASGI app without opening a socket."""

    def __init__(self, app):
        self._app = app

    def get(self, path: str):
        return self._request("GET", path)

    def post(self, path: str, json: dict | None = None):
        return self._request("POST", path, json=json)

    def _request(self, method: str, path: str, **kwargs):
        import asyncio

        import httpx

        async def go():
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://service", timeout=None
            ) as client:
                return await client.request(method, path, **kwargs)

        return asyncio.run(go())


class ServiceClient:
    """Small HTTP wrapper: in-process app by default, remote with a base URL."""

    def __init__(self, url: str | None = None):
        if url:
            import httpx

            self._client = httpx.Client(base_url=url, timeout=None)
        else:
            from .service.app import create_app

            self._client = InProcessHTTP(create_app())

    def get(self, path: str) -> dict:
        return self._finish(self._client.get(path))

    def post(self, path: str, payload: dict) -> dict:
        return self._finish(self._client.post(path, json=payload))

    @staticmethod
    def _finish(response) -> dict:
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except Exception:
                detail = response.text
            raise click.ClickException(str(detail))
        return response.json()


def _read_text(path: str, what: str) -> str:
    p = Path(path)
    if not p.exists():
        raise click.ClickException(f"{what} file not found: {path}")
    return p.read_text(encoding="utf-8")


def _parse_hyperparams(text: str) -> dict[str, int]:
    """Parse 'n_pop=50,n_gens=30' style parameter lists."""
    params: dict[str, int] = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise click.ClickException(f"bad --params entry {chunk!r}; expected name=value")
        name, value = (part.strip() for part in chunk.split("=", 1))
        try:
            params[name] = int(value)
        except ValueError:
            raise click.ClickException(f"--params value for {name!r} must be an integer")
    return params


@click.group()
@click.option("--url", default=None, help="Base URL of a running service; defaults to in-process.")
@click.pass_context
def main(ctx: click.Context, url: str | None) -> None:
    """Evolved symbolic-regression classifiers: fit, predict, benchmark, tally."""
    ctx.obj = url


def _client(ctx: click.Context) -> ServiceClient:
    return ServiceClient(ctx.obj)


@main.command()
@click.option("--data", required=True, help="Training CSV path.")
@click.option("--label", required=True, help="Label column name or zero-based index.")
@click.option("--classifier", "kind", required=True, type=click.Choice(CLASSIFIER_KINDS))
@click.option("--params", default="", help="Hyperparameters, e.g. 'n_pop=50,n_gens=30'.")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--out", required=True, help="Where to write the fitted model file.")
@click.option("--test-fraction", default=0.2, type=float, show_default=True)
@click.pass_context
def fit(ctx, data, label, kind, params, seed, out, test_fraction):
    """Fit one classifier on a CSV dataset and save the model."""
    payload = {
        "csv_text": _read_text(data, "data"),
        "label_column": label,
        "classifier": {"kind": kind, "hyperparams": _parse_hyperparams(params)},
        "seed": seed,
        "test_fraction": test_fraction,
    }
    result = _client(ctx).post("/fit", payload)
    Path(out).write_text(result["model"], encoding="utf-8")
    click.echo(f"train balanced accuracy: {result['train_balanced_accuracy']:.4f}")
    click.echo(f"test balanced accuracy:  {result['test_balanced_accuracy']:.4f}")
    click.echo(f"model written to {out}", err=True)


@main.command()
@click.option("--model", "model_path", required=True, help="Model file from `fit`.")
@click.option("--data", required=True, help="CSV with the model's feature columns.")
@click.pass_context
def predict(ctx, model_path, data):
    """Print one predicted label per data row."""
    payload = {
        "model": _read_text(model_path, "model"),
        "csv_text": _read_text(data, "data"),
    }
    result = _client(ctx).post("/predict", payload)
    for label in result["labels"]:
        click.echo(label)


@main.command()
@click.option("--config", "config_path", required=True, help="Benchmark config file.")
@click.pass_context
def benchmark(ctx, config_path):
    """Run the replicated benchmark described by a config file.

    Emits the records (tab-separated) on stdout and, when the config sets
    ``records = <path>``, writes them there as well. Progress goes to stderr.
    """
    from .protocol import dataset_id_for, parse_benchmark_config_text

    try:
        file_config = parse_benchmark_config_text(_read_text(config_path, "config"))
    except ValueError as exc:
        raise click.ClickException(str(exc))

    taken: set[str] = set()
    datasets = []
    for path, label in file_config.datasets:
        datasets.append(
            {
                "dataset_id": dataset_id_for(path, taken),
                "csv_text": _read_text(path, "dataset"),
                "label_column": label,
            }
        )
    cfg = file_config.config
    payload = {
        "datasets": datasets,
        "n_replicates": cfg.n_replicates,
        "n_trials": cfg.n_trials,
        "sampler": cfg.sampler,
        "base_seed": cfg.base_seed,
        "test_fraction": cfg.test_fraction,
        "time_budget_s": cfg.time_budget_s,
        "classifiers": list(cfg.classifiers),
    }
    result = _client(ctx).post("/benchmark", payload)
    for line in result["log"]:
        click.echo(line, err=True)
    click.echo(result["records_text"], nl=False)
    if file_config.records_out:
        Path(file_config.records_out).write_text(result["records_text"], encoding="utf-8")
        click.echo(f"records written to {file_config.records_out}", err=True)


@main.command()
@click.option("--records", "records_path", required=True, help="Records file from `benchmark`.")
@click.pass_context
def tally(ctx, records_path):
    """Print the per-classifier win percentages for a records file."""
    result = _client(ctx).post("/tally", {"records_text": _read_text(records_path, "records")})
    for line in result["lines"]:
        click.echo(line)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, type=int, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("srclassify.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
