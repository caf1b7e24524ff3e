"""Plain-text configuration files (key=value with sections) for the CLI.

Values given on the command line override file values; the effective
configuration is echoed into the run manifest.
"""

import configparser
import dataclasses

from .errors import BadInput
from .sampler import ChainConfig

__all__ = ["load_config", "chain_config_from", "effective_config_dict"]

_BOOL_FIELDS = {"learn_error_variances", "use_normalization", "standardize_norm_draws"}
_INT_FIELDS = {"n_iter", "burn_in", "k_norm", "n_prime", "seed", "divergence_window"}
_FLOAT_FIELDS = {
    "prop_sd_corr",
    "prop_sd_sigma",
    "prop_sd_gamma",
    "prior_corr_sd",
    "sigma_max",
}


def load_config(path):
    """Parse a sectioned key=value file into a {section: {key: str}} map."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except (configparser.Error, OSError) as exc:
        raise BadInput(f"config {path}: {exc}") from None
    return {section: dict(parser.items(section)) for section in parser.sections()}


def _coerce(key, raw):
    if key in _BOOL_FIELDS:
        low = str(raw).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise BadInput(f"chain.{key}: expected a boolean, got {raw!r}")
    try:
        if key in _INT_FIELDS:
            return int(raw)
        if key in _FLOAT_FIELDS:
            return float(raw)
    except ValueError:
        raise BadInput(f"chain.{key}: bad value {raw!r}") from None
    return str(raw)


def chain_config_from(file_map, overrides=None):
    """Build a validated ChainConfig from the [chain] section plus overrides."""
    fields = {f.name for f in dataclasses.fields(ChainConfig)}
    values = {}
    for key, raw in (file_map.get("chain") or {}).items():
        if key not in fields:
            raise BadInput(f"chain.{key}: unknown configuration key")
        values[key] = _coerce(key, raw)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in fields:
            raise BadInput(f"{key}: unknown chain option")
        values[key] = val
    return ChainConfig(**values).validate()


def effective_config_dict(cfg):
    """ChainConfig as a plain dict for the manifest."""
    return dataclasses.asdict(cfg)
