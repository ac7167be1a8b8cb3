"""Plain-text run configuration: ``section.key = value`` lines, ``#`` comments.

Reserved sections are ``run`` and ``correlate``; any other
section names a metric whose parameters are overridden, e.g.
``rouge_we_1.threshold = 0.75``.  Relative paths resolve against the config
file's directory.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

RESERVED = ("run", "correlate")
KEYS = {f"run.{k}": k for k in (
    "dataset", "outputs", "metrics", "embeddings", "synonyms", "external_scores",
    "annotations", "out", "parallelism", "multi_ref_policy")}
KEYS.update({f"correlate.{k}": k for k in ("level", "coefficient", "expert_only", "round")})
LIST_KEYS = ("outputs", "metrics", "external_scores")
PATH_KEYS = ("dataset", "outputs", "embeddings", "synonyms", "external_scores",
             "annotations", "out")


class ConfigError(ValueError):
    pass


def parse_value(raw: str):
    low = raw.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for kind in (int, float):
        try:
            return kind(raw)
        except ValueError:
            pass
    return raw


def parse_config_text(text: str, origin: str = "<config>") -> dict[str, dict]:
    sections: dict[str, dict] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'section.key = value'")
        lhs, rhs = (s.strip() for s in line.split("=", 1))
        if "." not in lhs:
            raise ConfigError(f"{origin}:{lineno}: key {lhs!r} lacks a section")
        section, key = lhs.rsplit(".", 1)
        sections.setdefault(section, {})[key] = rhs
    return sections


@dataclass
class RunConfig:
    dataset: str | None = None
    outputs: list[str] = field(default_factory=list)
    metrics: list[str] | None = None
    overrides: dict[str, dict] = field(default_factory=dict)
    embeddings: str | None = None
    synonyms: str | None = None
    external_scores: list[str] = field(default_factory=list)
    annotations: str | None = None
    out: str = "results"
    parallelism: int = 1
    multi_ref_policy: str = "max"
    level: str = "system"
    coefficient: str = "kendall_tau_b"
    expert_only: bool = False
    round: int | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _split_list(raw: str) -> list[str]:
    return [p.strip() for p in raw.split(",") if p.strip()]


def load_config(path: str | None = None, **cli_overrides) -> RunConfig:
    """Read a config file (optional) and apply CLI overrides (``None`` values
    are ignored)."""
    cfg = RunConfig()
    base = Path(".")
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {path} not found")
        base = p.parent
        sections = parse_config_text(p.read_text(encoding="utf-8"), str(path))
        for section, values in sections.items():
            if section not in RESERVED:
                cfg.overrides[section] = {k: parse_value(v) for k, v in values.items()}
                continue
            for key, raw in values.items():
                name = KEYS.get(f"{section}.{key}")
                if name is None:
                    raise ConfigError(f"{path}: unknown key {section}.{key}")
                if name in LIST_KEYS:
                    value = _split_list(raw)
                    if name in PATH_KEYS:
                        value = [str(base / v) for v in value]
                elif name in PATH_KEYS:
                    value = str(base / raw)
                else:
                    value = parse_value(raw)
                setattr(cfg, name, value)
    for key, value in cli_overrides.items():
        if value is None:
            continue
        if key == "metrics" and isinstance(value, str):
            value = _split_list(value)
        setattr(cfg, key, value)
    return cfg
