"""Command-line interface: demix run | diagnose | sweep."""

import argparse
import json
import math
import sys

from .config import ConfigError, load_config
from .runner import EXIT_CONFIG, diagnose_dir, execute


def _json_safe(obj):
    """Strict-JSON view of a result: non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demix",
        description="Minimizing-movement demixing solver with estimate diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a run config (jko | pde_compare | diagnose)")
    run.add_argument("config", help="path to a JSON run config")
    run.add_argument("--out", default=None, help="override the output directory")

    diag = sub.add_parser("diagnose", help="re-check a stored trajectory directory")
    diag.add_argument("trajectory_dir", help="directory produced by a jko run")

    sweep = sub.add_parser("sweep", help="run the config's sweep overrides")
    sweep.add_argument("config", help="path to a JSON run config with a sweep list")
    sweep.add_argument("--out", default=None, help="override the output directory")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "diagnose":
            result = diagnose_dir(args.trajectory_dir)
        else:
            config = load_config(args.config)
            if args.command == "sweep" and config.raw["mode"] != "sweep":
                raise ConfigError(["sweep command requires mode == 'sweep'"])
            result = execute(config, args.out)
    except ConfigError as exc:
        print(json.dumps({"error": str(exc), "problems": exc.problems}, indent=2),
              file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(_json_safe(result), indent=2, sort_keys=True, default=float))
    return int(result.get("status", 0))


if __name__ == "__main__":
    sys.exit(main())
