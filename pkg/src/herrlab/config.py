"""Run configuration files.

Sections and keys (every key is optional unless noted)::

    [run]        builtin, m, window, workers, frobenius, twist
    [field]      p, f, e, defining_poly, pi          (all required if the section is present)
    [frobenius]  kind, series
    [module]     rank, phi[i][j], gamma<k>[i][j], delta<k>[i][j]
    [generators] gammas, deltas
    [schedule]   N, n, psi_N, psi_n
    [lemmas]     m_values, n_max, N_max
    [duality]    builtin, config

Series values are literals ``[(exponent, coefficient), ...]``.  Matrix entries
take integers or ring-basis coordinate lists; the Frobenius series takes
integers or power-basis coordinate lists so it can be lifted exactly.
Unknown sections or keys are rejected with their line and column.
"""

import configparser
import hashlib
import json
import re

from .errors import ParseError, ValidationError
from .local_ring import FieldParams
from .pipeline import BUILTINS, PipelineConfig

SCHEMA = {
    "run": {"builtin", "m", "window", "workers", "frobenius", "twist"},
    "field": {"p", "f", "e", "defining_poly", "pi"},
    "frobenius": {"kind", "series"},
    "module": {"rank"},
    "generators": {"gammas", "deltas"},
    "schedule": {"N", "n", "psi_N", "psi_n"},
    "lemmas": {"m_values", "n_max", "N_max"},
    "duality": {"builtin", "config"},
}
_MATRIX_KEY = re.compile(r"^(phi|gamma\d+|delta\d+)\[(\d+)\]\[(\d+)\]$")
_SECTION = re.compile(r"^\s*\[([^\]]*)\]")
_KEY = re.compile(r"^(\s*)([^=:#;\s][^=:]*?)\s*[=:]\s*")


def _locations(text):
    """(section, key) -> (line, column of the value), 1-based."""
    out, section = {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION.match(line)
        if m:
            section = m.group(1).strip()
            out[(section, None)] = (lineno, line.index("[") + 1)
            continue
        if line.strip().startswith(("#", ";")) or not line.strip() or line[:1].isspace():
            continue
        m = _KEY.match(line)
        if m and section is not None:
            out[(section, m.group(2).strip())] = (lineno, m.end() + 1)
    return out


class RawConfig:
    """Parsed sections with source locations for error messages."""

    def __init__(self, text, source="<config>"):
        self.text, self.source = text, source
        cp = configparser.ConfigParser(interpolation=None, delimiters=("=", ":"),
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=None)
        cp.optionxform = str
        try:
            cp.read_string(text, source=source)
        except configparser.MissingSectionHeaderError as exc:
            raise ParseError("key outside of any section", exc.lineno, 1) from exc
        except configparser.DuplicateOptionError as exc:
            raise ParseError(f"duplicate key {exc.option!r}", exc.lineno, 1) from exc
        except configparser.DuplicateSectionError as exc:
            raise ParseError(f"duplicate section {exc.section!r}", exc.lineno, 1) from exc
        except configparser.ParsingError as exc:
            lineno, _ = exc.errors[0]
            raise ParseError("line is neither a section, a key nor a comment", lineno, 1) from exc
        self.loc = _locations(text)
        self.sections = {s: dict(cp[s]) for s in cp.sections()}
        for s, keys in self.sections.items():
            if s not in SCHEMA:
                raise ParseError(f"unknown section [{s}]", *self.loc.get((s, None), (None, None)))
            for k in keys:
                if k not in SCHEMA[s] and not (s == "module" and _MATRIX_KEY.match(k)):
                    raise ParseError(f"unknown key {k!r} in [{s}]", *self.where(s, k))

    def where(self, section, key):
        return self.loc.get((section, key), (None, None))

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def int(self, section, key, default=None):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return int(raw.strip())
        except ValueError:
            raise ParseError(f"{key} must be an integer, got {raw.strip()!r}", *self.where(section, key)) from None

    def ints(self, section, key, default=None):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return tuple(int(x) for x in raw.replace(",", " ").split())
        except ValueError:
            raise ParseError(f"{key} must be a list of integers", *self.where(section, key)) from None


def _generator_list(raw, cfg, key, paired):
    """'4, 7' for gammas or '-1:2' (unit:order) for deltas."""
    out = []
    for item in filter(None, (x.strip() for x in raw.split(","))):
        try:
            if paired:
                u, o = item.split(":")
                out.append((int(u), int(o)))
            else:
                out.append(int(item))
        except ValueError:
            raise ParseError(f"malformed {key} entry {item!r}", *cfg.where("generators", key)) from None
    return out


def parse_config_text(text, source="<config>"):
    """PipelineConfig plus the raw sections (needed by lemma and duality runs)."""
    raw = RawConfig(text, source)
    builtin = raw.get("run", "builtin")
    if builtin is not None:
        builtin = builtin.strip()
        if builtin not in BUILTINS:
            raise ValidationError(f"unknown builtin {builtin!r}; choose from {sorted(BUILTINS)}")
        cfg = PipelineConfig.builtin(builtin)
    else:
        cfg = PipelineConfig(case="custom")
    cfg.m = raw.int("run", "m", cfg.m)
    cfg.window = raw.int("run", "window", cfg.window)
    cfg.workers = raw.int("run", "workers", cfg.workers)
    for key in ("frobenius", "twist"):
        val = raw.get("run", key)
        if val is not None:
            setattr(cfg, key, val.strip())
    if "field" in raw.sections:
        missing = SCHEMA["field"] - set(raw.sections["field"])
        if missing:
            raise ValidationError(f"[field] is missing {sorted(missing)}")
        params = FieldParams(raw.int("field", "p"), raw.int("field", "f"), raw.int("field", "e"),
                             raw.ints("field", "defining_poly"), raw.ints("field", "pi"))
        params.validate()
        cfg.custom_field = params
        cfg.field = "custom"
    kind = raw.get("frobenius", "kind")
    if kind is not None:
        cfg.frobenius = kind.strip()
    series = raw.get("frobenius", "series")
    if series is not None:
        cfg.frobenius = "custom"
        cfg.frobenius_series = (series, raw.where("frobenius", "series"))
    sched = {"N": "N_levels", "n": "n_levels", "psi_N": "psi_N_levels", "psi_n": "psi_n_levels"}
    for key, attr in sched.items():
        val = raw.ints("schedule", key)
        if val is not None:
            setattr(cfg, attr, val)
    if raw.get("generators", "gammas") is not None:
        cfg.gammas = _generator_list(raw.get("generators", "gammas"), raw, "gammas", False)
    if raw.get("generators", "deltas") is not None:
        cfg.deltas = _generator_list(raw.get("generators", "deltas"), raw, "deltas", True)
    module = raw.sections.get("module", {})
    if module:
        cfg.rank = raw.int("module", "rank", 1)
        entries = {}
        for k, v in module.items():
            m = _MATRIX_KEY.match(k)
            if m:
                name, i, j = m.group(1), int(m.group(2)), int(m.group(3))
                if i >= cfg.rank or j >= cfg.rank:
                    raise ValidationError(f"{k} is outside a rank-{cfg.rank} matrix")
                entries[(name, i, j)] = (v, raw.where("module", k))
        cfg.matrix_entries = entries
    if cfg.field == "custom" and cfg.gammas is None and cfg.custom_field.degree > 1:
        raise ValidationError("a field other than Q_p needs [generators] gammas and deltas")
    cfg.validate()
    return cfg, raw


def parse_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config_text(text, str(path))


def canonical_json(doc):
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(cfg):
    return hashlib.sha256(canonical_json(cfg.echo()).encode()).hexdigest()
