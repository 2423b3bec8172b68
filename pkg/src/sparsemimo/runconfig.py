"""Flat key-value run configuration files and run manifests.

The config format is deliberately minimal and diff-friendly: one
``key = value`` pair per line, ``#`` comments, blank lines ignored.
Values are parsed as int, then float, then string; comma-separated values
become tuples.  A RunManifest is itself a config file (with ``subcommand``,
``version``, ``master_seed`` and ``outputs`` keys), so re-running with
``--config <manifest>`` reproduces the original run.
"""

from __future__ import annotations

from dataclasses import dataclass


class ConfigError(ValueError):
    pass


def _parse_scalar(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_value(text: str):
    """int | float | str, or a tuple thereof when commas are present."""
    text = text.strip()
    if "," in text:
        return tuple(_parse_scalar(t.strip()) for t in text.split(",") if t.strip())
    return _parse_scalar(text)


def format_value(value) -> str:
    if isinstance(value, (tuple, list)):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """key -> parsed value; malformed lines raise with file/line diagnostics."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = parse_value(val)
    return out


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def merge_config(config: dict, overrides: dict) -> dict:
    """Config values overlaid with explicitly-set overrides (overrides win)."""
    out = dict(config)
    for key, val in overrides.items():
        if val is not None:
            out[key] = val
    return out


@dataclass(frozen=True)
class RunManifest:
    """Fully-resolved record of one CLI run, written alongside its outputs."""

    subcommand: str
    version: str
    master_seed: int
    config: dict
    outputs: tuple[str, ...]

    def to_text(self) -> str:
        lines = [f"subcommand = {self.subcommand}",
                 f"version = {self.version}",
                 f"master_seed = {self.master_seed}"]
        for key in sorted(self.config):
            if key in ("subcommand", "version", "master_seed", "outputs"):
                continue
            lines.append(f"{key} = {format_value(self.config[key])}")
        lines.append(f"outputs = {format_value(self.outputs)}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())
