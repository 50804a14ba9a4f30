"""Command-line client for the simulator service.

Subcommands mirror the service endpoints; by default requests run
against an in-process application instance, so no server is needed.
Point ``--server`` at a running instance (see ``mzbec serve``) to farm
the computation out over HTTP; the output bytes are identical either
way because rendering happens client side from structured rows.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure
(per-point details land in an ``<out>.errors.json`` sidecar).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import io as _io
from .errors import ConfigurationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_WINDOW_DEFAULT = (-math.pi / 4, math.pi / 4)


def _int_list(text):
    try:
        return [int(part) for part in str(text).split(",") if part != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {exc}")


def _float_list(text):
    try:
        return [float(part) for part in str(text).split(",") if part != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {exc}")


def _float_pair(text):
    values = _float_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError("expected exactly two comma-separated numbers")
    return tuple(values)


# flag name -> (argparse kwargs builder, coercion for config-file values)
_PARSERS = {
    "int": (dict(type=int), int),
    "float": (dict(type=float), float),
    "str": (dict(type=str), str),
    "int_list": (dict(type=_int_list), lambda v: _int_list(v) if isinstance(v, str) else [int(x) for x in v]),
    "float_list": (dict(type=_float_list), lambda v: _float_list(v) if isinstance(v, str) else [float(x) for x in v]),
    "float_pair": (dict(type=_float_pair), lambda v: _float_pair(v) if isinstance(v, str) else tuple(float(x) for x in v)),
    "flag": (dict(action="store_true"), bool),
}

_COMMON = [
    ("--out", "out", "str", None, "output file path (default: stdout)"),
    ("--format", "format", "str", None, "output format: csv or json"),
    ("--config", "config", "str", None, "JSON config file mirroring these flags"),
    ("--server", "server", "str", None, "base URL of a running service (default: in-process)"),
]

_METHOD_HELP = "sensitivity method: CRLB, CFI, or Bayesian"

_SUBCOMMANDS = {
    "scaling": {
        "help": "sensitivity versus atom number at fixed controls",
        "default_format": "csv",
        "flags": [
            ("--n-atoms", "n_atoms", "int_list", [50, 100, 200, 400], "comma-separated even atom numbers"),
            ("--u0n", "u0n", "float", 1.0, "interaction strength U0*N, held constant over the scan"),
            ("--t-bs", "t_bs", "float", 2.0, "beam-splitter duration"),
            ("--t-phase", "t_phase", "float", 10.0, "phase accumulation duration"),
            ("--theta", "theta", "float", 0.01, "evaluation phase"),
            ("--xi", "xi", "float", 0.0, "input squeezing: 1 binomial, <0.02 twin Fock"),
            ("--sigma", "sigma", "float", 0.0, "detection-error width (outcome-index units)"),
            ("--method", "method", "str", "CFI", _METHOD_HELP),
            ("--seed", "seed", "int", 0, "master seed (Bayesian rows)"),
            ("--trials", "trials", "int", 500, "Monte-Carlo trials (Bayesian)"),
            ("--m", "m", "int", 20, "measurements per trial (Bayesian)"),
            ("--window", "window", "float_pair", _WINDOW_DEFAULT, "posterior grid window lo,hi (Bayesian)"),
            ("--n-grid", "n_grid", "int", 1001, "posterior grid points (Bayesian)"),
        ],
    },
    "prefactor": {
        "help": "scaling scan plus log-log prefactor fit",
        "default_format": "json",
        "flags": None,  # shares the scaling flag set, filled in below
    },
    "te-scan": {
        "help": "sensitivity versus phase accumulation time",
        "default_format": "csv",
        "flags": [
            ("--n-atoms", "n_atoms", "int", 100, "even atom number"),
            ("--u0n", "u0n", "float", 1.0, "interaction strength U0*N"),
            ("--t-bs", "t_bs", "float", 1.0, "beam-splitter duration"),
            ("--t-phase", "t_phase", "float_list", [float(t) for t in range(1, 41)], "comma-separated accumulation times"),
            ("--theta", "theta", "float", 0.01, "evaluation phase"),
            ("--xi", "xi", "float", 0.0, "input squeezing"),
            ("--sigma", "sigma", "float", 0.0, "detection-error width"),
            ("--seed", "seed", "int", 0, "seed recorded in rows"),
        ],
    },
    "xi-scan": {
        "help": "sensitivity versus input number squeezing",
        "default_format": "csv",
        "flags": [
            ("--n-atoms", "n_atoms", "int", 100, "even atom number"),
            ("--u0n", "u0n", "float", 1.0, "interaction strength U0*N"),
            ("--t-bs", "t_bs", "float", 20.0, "beam-splitter duration"),
            ("--t-phase", "t_phase", "float_list", [1.0], "comma-separated accumulation times"),
            ("--xi", "xi", "float_list", [1.0, 0.8, 0.6, 0.4, 0.3, 0.25, 0.2, 0.15, 0.1, 0.05, 0.01], "comma-separated squeezing targets in (0,1]"),
            ("--method", "method", "str", "CFI", "CRLB or CFI"),
            ("--theta", "theta", "float", 0.01, "evaluation phase (CFI)"),
            ("--seed", "seed", "int", 0, "seed recorded in rows"),
        ],
    },
    "probmap": {
        "help": "outcome probability map over a phase grid (JSON)",
        "default_format": "json",
        "flags": [
            ("--n-atoms", "n_atoms", "int", 100, "even atom number"),
            ("--u0n", "u0n", "float", 1.0, "interaction strength U0*N"),
            ("--t-bs", "t_bs", "float", 1.0, "beam-splitter duration"),
            ("--t-phase", "t_phase", "float", 1.0, "phase accumulation duration"),
            ("--xi", "xi", "float", 0.0, "input squeezing"),
            ("--theta", "theta", "float_list", [0.01], "comma-separated phases"),
            ("--theta-range", "theta_range", "str", None, "lo,hi,count uniform phase grid (overrides --theta)"),
        ],
    },
    "bayes": {
        "help": "Monte-Carlo Bayesian phase estimation",
        "default_format": "json",
        "flags": [
            ("--n-atoms", "n_atoms", "int", 100, "even atom number"),
            ("--u0n", "u0n", "float", 1.0, "interaction strength U0*N"),
            ("--t-bs", "t_bs", "float", 1.0, "beam-splitter duration"),
            ("--t-phase", "t_phase", "float", 1.0, "phase accumulation duration"),
            ("--xi", "xi", "float", 0.0, "input squeezing"),
            ("--theta", "theta", "float", 0.01, "true phase to estimate"),
            ("--m", "m", "int", 20, "measurements per trial"),
            ("--trials", "trials", "int", 500, "Monte-Carlo trials"),
            ("--seed", "seed", "int", 0, "master seed"),
            ("--window", "window", "float_pair", _WINDOW_DEFAULT, "posterior grid window lo,hi"),
            ("--n-grid", "n_grid", "int", 1001, "posterior grid points"),
            ("--estimator", "estimator", "str", "posterior_mean", "posterior_mean, map, or max_likelihood"),
            ("--sigma", "sigma", "float", 0.0, "detection-error width"),
            ("--include-estimates", "include_estimates", "flag", False, "return per-trial estimates"),
        ],
    },
    "husimi": {
        "help": "Husimi projection on a Bloch-sphere grid (JSON)",
        "default_format": "json",
        "flags": [
            ("--n-atoms", "n_atoms", "int", 100, "even atom number"),
            ("--xi", "xi", "float", 0.0, "input squeezing"),
            ("--n-polar", "n_polar", "int", 61, "polar grid points"),
            ("--n-azimuth", "n_azimuth", "int", 121, "azimuth grid points"),
            ("--evolve", "evolve", "flag", False, "project the interferometer output instead of the input"),
            ("--u0n", "u0n", "float", 1.0, "interaction strength U0*N (with --evolve)"),
            ("--t-bs", "t_bs", "float", 1.0, "beam-splitter duration (with --evolve)"),
            ("--t-phase", "t_phase", "float", 1.0, "accumulation duration (with --evolve)"),
            ("--theta", "theta", "float", 0.0, "phase (with --evolve)"),
        ],
    },
}
_SUBCOMMANDS["prefactor"]["flags"] = _SUBCOMMANDS["scaling"]["flags"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mzbec",
        description="Two-mode BEC interferometer sensitivity toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, spec in _SUBCOMMANDS.items():
        p = sub.add_parser(name, help=spec["help"])
        for flag, dest, kind, _default, help_text in spec["flags"]:
            kwargs, _ = _PARSERS[kind]
            p.add_argument(flag, dest=dest, help=help_text, default=None, **kwargs)
        for flag, dest, kind, default, help_text in _COMMON:
            kwargs, _ = _PARSERS[kind]
            p.add_argument(flag, dest=dest, help=help_text, default=default, **kwargs)
    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _load_config(path):
    try:
        with open(path) as handle:
            config = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}")
    if not isinstance(config, dict):
        raise ConfigurationError("config file must hold a flat JSON object")
    return config


def _effective(args, command):
    """Merge CLI flags over config-file values over defaults."""
    config = _load_config(args.config) if args.config else {}
    values = {}
    for _flag, dest, kind, default, _help in _SUBCOMMANDS[command]["flags"]:
        cli_value = getattr(args, dest)
        if cli_value is not None:
            values[dest] = cli_value
        elif dest in config:
            _, coerce = _PARSERS[kind]
            try:
                values[dest] = coerce(config[dest])
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigurationError(f"config key {dest!r}: {exc}")
        else:
            values[dest] = default
    for key in ("out", "format", "server"):
        cli_value = getattr(args, key)
        values[key] = cli_value if cli_value is not None else config.get(key)
    if values["format"] is None:
        values["format"] = _SUBCOMMANDS[command]["default_format"]
    if values["format"] not in ("csv", "json"):
        raise ConfigurationError(f"format must be csv or json, got {values['format']!r}")
    return values


class _Client:
    """POST requests either in process or to a remote server."""

    def __init__(self, server):
        self._server = server
        self._transport_errors = ()
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=3600.0)
            self._transport_errors = (httpx.HTTPError,)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DeprecationWarning)
                from fastapi.testclient import TestClient

            from .service.app import app

            self._client = TestClient(app)

    def post(self, path, payload):
        try:
            response = self._client.post(path, json=payload)
        except self._transport_errors as exc:
            raise ConfigurationError(f"cannot reach server {self._server}: {exc}")
        try:
            body = response.json()
        except ValueError:
            body = {"detail": response.text}
        return response.status_code, body


def _emit(values, text):
    if values["out"]:
        _io.write_text(values["out"], text)
    else:
        sys.stdout.write(text)


def _finish(values, text, errors):
    """Write the main output, then the failure sidecar if needed."""
    _emit(values, text)
    if errors:
        if values["out"]:
            path = _io.write_errors_sidecar(values["out"], errors)
            print(f"{len(errors)} point(s) failed; details in {path}", file=sys.stderr)
        else:
            for entry in errors:
                print(f"point failed: {entry}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _check_status(status, body):
    """Map HTTP errors onto exit codes; None means success."""
    if status == 200:
        return None
    detail = body.get("detail", body)
    if status == 422:
        print(f"invalid configuration: {detail}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"computation failed ({status}): {detail}", file=sys.stderr)
    return EXIT_NUMERICAL


def _run_scaling(values, client, with_fit):
    payload = {
        "n_values": values["n_atoms"],
        "u0n": values["u0n"],
        "t_bs": values["t_bs"],
        "t_phase": values["t_phase"],
        "theta": values["theta"],
        "xi_in": values["xi"],
        "sigma": values["sigma"],
        "method": values["method"],
        "seed": values["seed"],
        "m": values["m"],
        "trials": values["trials"],
        "window": list(values["window"]),
        "n_grid": values["n_grid"],
    }
    path = "/prefactor" if with_fit else "/scaling"
    status, body = client.post(path, payload)
    code = _check_status(status, body)
    if code is not None:
        return code
    if values["format"] == "csv":
        text = _io.render_rows_csv(body["rows"])
        if with_fit:
            print(f"fit: {_io.render_json(body['fit']).strip()}", file=sys.stderr)
    else:
        text = _io.render_json(body)
    return _finish(values, text, body.get("errors", []))


def _run_te_scan(values, client):
    payload = {
        "n_atoms": values["n_atoms"],
        "u0n": values["u0n"],
        "t_bs": values["t_bs"],
        "t_phase_values": values["t_phase"],
        "theta": values["theta"],
        "xi_in": values["xi"],
        "sigma": values["sigma"],
        "seed": values["seed"],
    }
    status, body = client.post("/te-scan", payload)
    code = _check_status(status, body)
    if code is not None:
        return code
    if values["format"] == "csv":
        text = _io.render_rows_csv(body["rows"])
        print(
            f"t_e_best={_io.fmt(body['t_e_best'])} t_e_worst={_io.fmt(body['t_e_worst'])}",
            file=sys.stderr,
        )
    else:
        text = _io.render_json(body)
    return _finish(values, text, [])


def _run_xi_scan(values, client):
    payload = {
        "n_atoms": values["n_atoms"],
        "u0n": values["u0n"],
        "t_bs": values["t_bs"],
        "t_phase_values": values["t_phase"],
        "xi_values": values["xi"],
        "method": values["method"],
        "theta": values["theta"],
        "seed": values["seed"],
    }
    status, body = client.post("/xi-scan", payload)
    code = _check_status(status, body)
    if code is not None:
        return code
    if values["format"] == "csv":
        text = _io.render_rows_csv(body["rows"], _io.XI_COLUMNS)
    else:
        text = _io.render_json(body)
    return _finish(values, text, body.get("errors", []))


def _run_probmap(values, client):
    if values["format"] == "csv":
        raise ConfigurationError("probability maps are JSON only")
    thetas = values["theta"]
    if values["theta_range"]:
        parts = _float_list(values["theta_range"])
        if len(parts) != 3 or int(parts[2]) < 2:
            raise ConfigurationError("--theta-range must be lo,hi,count with count >= 2")
        lo, hi, count = parts[0], parts[1], int(parts[2])
        step = (hi - lo) / (count - 1)
        thetas = [lo + step * k for k in range(count)]
    payload = {
        "n_atoms": values["n_atoms"],
        "u0n": values["u0n"],
        "t_bs": values["t_bs"],
        "t_phase": values["t_phase"],
        "xi_in": values["xi"],
        "theta_values": thetas,
    }
    status, body = client.post("/probmap", payload)
    code = _check_status(status, body)
    if code is not None:
        return code
    return _finish(values, _io.render_json(body), [])


def _run_bayes(values, client):
    payload = {
        "n_atoms": values["n_atoms"],
        "u0n": values["u0n"],
        "t_bs": values["t_bs"],
        "t_phase": values["t_phase"],
        "xi_in": values["xi"],
        "theta_true": values["theta"],
        "m": values["m"],
        "trials": values["trials"],
        "seed": values["seed"],
        "window": list(values["window"]),
        "n_grid": values["n_grid"],
        "estimator": values["estimator"],
        "sigma": values["sigma"],
        "include_estimates": bool(values["include_estimates"]),
    }
    status, body = client.post("/bayes", payload)
    code = _check_status(status, body)
    if code is not None:
        return code
    if values["format"] == "csv":
        text = _io.render_rows_csv([body["row"]])
    else:
        if body.get("estimates") is None:
            body.pop("estimates", None)
        text = _io.render_json(body)
    return _finish(values, text, [])


def _run_husimi(values, client):
    if values["format"] == "csv":
        raise ConfigurationError("Husimi grids are JSON only")
    payload = {
        "n_atoms": values["n_atoms"],
        "xi_in": values["xi"],
        "n_polar": values["n_polar"],
        "n_azimuth": values["n_azimuth"],
        "evolve": bool(values["evolve"]),
        "u0n": values["u0n"],
        "t_bs": values["t_bs"],
        "t_phase": values["t_phase"],
        "theta": values["theta"],
    }
    status, body = client.post("/husimi", payload)
    code = _check_status(status, body)
    if code is not None:
        return code
    return _finish(values, _io.render_json(body), [])


_RUNNERS = {
    "scaling": lambda v, c: _run_scaling(v, c, with_fit=False),
    "prefactor": lambda v, c: _run_scaling(v, c, with_fit=True),
    "te-scan": _run_te_scan,
    "xi-scan": _run_xi_scan,
    "probmap": _run_probmap,
    "bayes": _run_bayes,
    "husimi": _run_husimi,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK
    try:
        values = _effective(args, args.command)
        client = _Client(values["server"])
        return _RUNNERS[args.command](values, client)
    except ConfigurationError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
