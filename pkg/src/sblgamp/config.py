"""Flat ``key = value`` configuration files with dotted section keys.

Example::

    # full-size nmse sweep
    sweep.n = 500
    sweep.trials = 1000
    sweep.snr_db = 20
    em.tol_outer = 1e-10
    gamp.damping = 1.0

Unknown keys are errors. :func:`format_config` writes every key, so its
output (the run manifest) reproduces a sweep exactly when read back.
"""

from __future__ import annotations

import math
from dataclasses import replace

from .bench import SOLVERS, SweepConfig
from .model import DomainError


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


def _float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"expected a finite number, got {text!r}")
    return v


def _int(text):
    return int(text, 10)


def _bool(text):
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _auto(parse):
    def inner(text):
        return None if text.lower() == "auto" else parse(text)
    return inner


def _noiseless_or_float(text):
    return None if text.lower() == "noiseless" else _float(text)


def _list(parse):
    def inner(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        return tuple(parse(t) for t in items)
    return inner


def solver_name(text):
    name = text.strip().replace("-", "_")
    if name not in SOLVERS:
        raise ValueError(f"unknown solver {text!r}")
    return name


def _fmt(v):
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    return str(v)


# key -> (section, field, parser, formatter override)
_KEYS = {
    "sweep.solvers": ("sweep", "solvers", _list(solver_name), None),
    "sweep.n": ("sweep", "n", _int, None),
    "sweep.m_over_n": ("sweep", "m_over_n", _list(_float), None),
    "sweep.n_list": ("sweep", "n_list", _list(_int), None),
    "sweep.k": ("sweep", "k", _int, None),
    "sweep.m_ratio": ("sweep", "m_ratio", _float, None),
    "sweep.k_ratio": ("sweep", "k_ratio", _float, None),
    "sweep.trials": ("sweep", "trials", _int, None),
    "sweep.threshold": ("sweep", "threshold", _float, None),
    "sweep.snr_db": ("sweep", "snr_db", _noiseless_or_float, lambda v: "noiseless" if v is None else repr(v)),
    "sweep.nonzero_dist": ("sweep", "nonzero_dist", str, None),
    "sweep.seed": ("sweep", "master_seed", _int, None),
    "sweep.workers": ("sweep", "workers", _int, None),
    "prior.a": ("prior", "a", _float, None),
    "prior.b": ("prior", "b", _float, None),
    "prior.c": ("prior", "c", _float, None),
    "prior.d": ("prior", "d", _float, None),
    "em.tol_outer": ("em", "tol_outer", _float, None),
    "em.max_em_iters": ("em", "max_em_iters", _auto(_int), None),
    "em.alpha0": ("em", "alpha0", _float, None),
    "em.gamma0": ("em", "gamma0", _auto(_float), None),
    "em.eps0": ("em", "eps0", _float, None),
    "em.warm_start": ("em", "warm_start", _bool, None),
    "gamp.epsilon": ("gamp", "epsilon", _auto(_float), None),
    "gamp.max_iters": ("gamp", "max_iters", _int, None),
    "gamp.damping": ("gamp", "damping", _float, None),
}
KEYS = tuple(_KEYS)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Split config text into ``{key: raw value}``; raises :class:`ConfigError` listing every bad line."""
    raw, problems = {}, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{source}:{lineno}: expected 'key = value', got {line!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            problems.append(f"{source}:{lineno}: unknown key {key!r}")
        elif key in raw:
            problems.append(f"{source}:{lineno}: duplicate key {key!r}")
        else:
            raw[key] = value
    if problems:
        raise ConfigError(problems)
    return raw


def build_config(kind: str, raw: dict | None = None, overrides: dict | None = None) -> SweepConfig:
    """Resolve a :class:`SweepConfig` from defaults, parsed file values and typed overrides.

    ``overrides`` maps keys to already-typed values (from command-line flags).
    All problems are collected and raised together.
    """
    problems = []
    sections = {"sweep": {}, "prior": {}, "em": {}, "gamp": {}}
    for key, text in (raw or {}).items():
        section, name, parse, _ = _KEYS[key]
        try:
            sections[section][name] = parse(text)
        except ValueError as exc:
            problems.append(f"{key}: {exc}")
    for key, value in (overrides or {}).items():
        section, name, _, _ = _KEYS[key]
        sections[section][name] = value

    base = SweepConfig.defaults(kind)
    built = {}
    for section, current in (("prior", base.prior), ("gamp", base.em.gamp), ("em", base.em)):
        values = sections[section]
        if section == "em" and "gamp" in built:
            values = {**values, "gamp": built["gamp"]}
        try:
            built[section] = replace(current, **values)
        except DomainError as exc:
            problems.extend(f"{section}: {p}" for p in str(exc).split("; "))
            built[section] = current
    cfg = replace(base, prior=built["prior"], em=built["em"], **sections["sweep"])
    problems.extend(cfg.problems())
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(kind: str, path=None, overrides: dict | None = None) -> SweepConfig:
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError([f"{path}: cannot read ({exc.strerror})"]) from None
        raw = parse_config_text(text, str(path))
    return build_config(kind, raw, overrides)


def config_values(cfg: SweepConfig) -> dict:
    """Every key with its resolved typed value."""
    sources = {"sweep": cfg, "prior": cfg.prior, "em": cfg.em, "gamp": cfg.em.gamp}
    return {key: getattr(sources[section], name) for key, (section, name, _, _) in _KEYS.items()}


def format_config(cfg: SweepConfig, header: str | None = None) -> str:
    lines = [f"# {header}"] if header else []
    for key, value in config_values(cfg).items():
        fmt = _KEYS[key][3] or _fmt
        lines.append(f"{key} = {fmt(value)}")
    return "\n".join(lines) + "\n"

