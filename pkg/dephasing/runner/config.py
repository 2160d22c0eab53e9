# runner/config.py
"""
Run configuration files.

The format is flat key=value text with dotted block prefixes:

    params.n_total = 1e5
    params.lambda_coupling = 5.0
    solver.dt = 1e-3

Section headers are accepted as a shorthand for the prefix, and a run
manifest (JSON) can stand in for a configuration file.
"""
import configparser
import json
import logging
from pathlib import Path

from rest_framework import serializers

from .serializers import BLOCKS, RunConfigSerializer

logger = logging.getLogger(__name__)

TOP_SECTION = "__top__"


def _parser():
    parser = configparser.ConfigParser(
        interpolation=None,
        default_section="__defaults__",
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=("#",),
    )
    parser.optionxform = str
    return parser


def _nest(flat):
    """{"params.n_total": "1e5"} -> {"params": {"n_total": "1e5"}}."""
    nested = {}
    for key, value in flat.items():
        block, dot, name = key.partition(".")
        if not dot or not name:
            raise serializers.ValidationError(
                {key: "Keys need a block prefix, e.g. params.n_total."}
            )
        nested.setdefault(block, {})[name] = value
    return nested


def parse_config_text(text):
    """
    Parses configuration text into nested blocks of raw strings.

    Raises:
        serializers.ValidationError: If the text is not valid key=value
            syntax or a key lacks its block prefix.
    """
    parser = _parser()
    try:
        parser.read_string(f"[{TOP_SECTION}]\n{text}")
    except configparser.Error as error:
        raise serializers.ValidationError({"config": str(error)})
    flat = {}
    for section in parser.sections():
        prefix = "" if section == TOP_SECTION else f"{section}."
        for key, value in parser.items(section):
            flat[prefix + key] = value
    return _nest(flat)


def parse_overrides(overrides):
    """Turns ["params.n_total=1e5", ...] into nested blocks of raw strings."""
    flat = {}
    for item in overrides or ():
        key, equals, value = item.partition("=")
        if not equals or not key.strip():
            raise serializers.ValidationError({"set": f"Expected key=value, got {item!r}."})
        flat[key.strip()] = value.strip()
    return _nest(flat)


def merge(base, overrides):
    merged = {block: dict(values) for block, values in base.items()}
    for block, values in overrides.items():
        merged.setdefault(block, {}).update(values)
    return merged


def flatten_config(config):
    """
    Resolved configuration as dotted key=value text values.

    None entries are dropped so that the text re-validates to the same
    configuration; floats keep their repr.
    """
    flat = {}
    for block in BLOCKS:
        for name, value in config.get(block, {}).items():
            if value is None:
                continue
            flat[f"{block}.{name}"] = repr(value) if isinstance(value, float) else str(value)
    return flat


def read_raw(path):
    """
    Reads a configuration file or a run manifest into nested raw blocks.

    Raises:
        serializers.ValidationError: If the file is missing or unreadable.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise serializers.ValidationError({"config": f"Cannot read {path}: {error.strerror}."})
    if path.suffix == ".json":
        try:
            manifest = json.loads(text)
        except json.JSONDecodeError as error:
            raise serializers.ValidationError({"config": f"Invalid manifest: {error}."})
        return _nest(flatten_config(manifest.get("config", {})))
    return parse_config_text(text)


def load_config(path=None, overrides=None):
    """
    Reads, merges and validates a run configuration.

    Args:
        path (str or Path, optional): Configuration file or run manifest.
        overrides (Sequence[str], optional): "key=value" items applied last.

    Returns:
        dict: Validated blocks with every default filled in.

    Raises:
        serializers.ValidationError: On syntax errors, unknown keys or
            out-of-range values.
    """
    raw = read_raw(path) if path is not None else {}
    raw = merge(raw, parse_overrides(overrides))
    logger.debug("config: %d blocks from %s", len(raw), path or "defaults")
    return _validated(raw)


def with_overrides(config, overrides):
    """A validated copy of `config` with "key=value" overrides applied."""
    return _validated(merge(_nest(flatten_config(config)), parse_overrides(overrides)))


def _validated(raw):
    serializer = RunConfigSerializer(data=raw)
    serializer.is_valid(raise_exception=True)
    return _plain(serializer.validated_data)


def _plain(value):
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    return value
