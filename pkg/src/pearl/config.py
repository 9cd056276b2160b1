"""Task configuration files: INI-style text with typed accessors.

A config keeps every value as the exact text it was written with, so
``parse(serialize(cfg)) == cfg`` holds by construction.  Typed views
(:meth:`TaskConfig.task_params`, :meth:`TaskConfig.policy`, ...) convert on
access and report problems with the offending section, key and line.

Sections::

    [task]            name plus constructor overrides for the task
    [weights]         theta = comma-separated weights
    [policy]          PolicyConfig fields
    [training]        TrainingConfig fields, margin, speed_limit
    [training.task]   task overrides for the training environment
    [disturbance]     mean, std (scalars or per-axis lists)
    [run]             seed, trials, horizon
    [preference.NAME] one section per preference, replacing the task's own
"""
from __future__ import annotations

import configparser
import inspect
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import GaussianDisturbance
from .features import ATTRACTOR, REPELLER, Preference

__all__ = ["ConfigError", "TaskConfig", "parse_config", "load_config", "serialize_config",
           "parse_value", "PRESETS_DIR", "preset_path"]

PRESETS_DIR = Path(__file__).parent / "presets"

KNOWN_SECTIONS = ("task", "weights", "policy", "training", "training.task", "disturbance", "run")
PREF_KEYS = {"kind", "agents", "part", "axes", "target", "point", "reference", "other_agents",
             "other_part", "other_axes", "offset", "beta", "variant"}


class ConfigError(ValueError):
    """Malformed configuration; carries the section, key and line when known."""

    def __init__(self, message: str, section: str | None = None, key: str | None = None,
                 line: int | None = None, source: str = "<config>"):
        self.section, self.key, self.line, self.source = section, key, line, source
        where = source
        if line is not None:
            where += f":{line}"
        if section is not None:
            where += f" [{section}]"
        if key is not None:
            where += f" {key}"
        super().__init__(f"{where}: {message}")


def parse_value(text: str):
    """Interpret a config value: bool, int, float, vector (``,``), matrix (``;``) or string."""
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", ""):
        return None
    if ";" in t:
        return [tuple(float(x) for x in row.split(",")) for row in t.split(";") if row.strip()]
    if "," in t:
        try:
            return tuple(float(x) for x in t.split(","))
        except ValueError:
            return tuple(x.strip() for x in t.split(","))
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


@dataclass
class TaskConfig:
    sections: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict, compare=False, repr=False)
    source: str = field(default="<config>", compare=False, repr=False)

    # -- raw access -------------------------------------------------------
    def get(self, section: str, key: str, default=None):
        raw = self.sections.get(section, {}).get(key)
        if raw is None:
            return default
        return parse_value(raw)

    def set(self, section: str, key: str, value) -> None:
        if isinstance(value, (list, tuple, np.ndarray)):
            value = ", ".join(repr(float(v)) for v in np.ravel(value))
        self.sections.setdefault(section, {})[key] = str(value)

    def error(self, message, section=None, key=None) -> ConfigError:
        return ConfigError(message, section, key, self.lines.get((section, key)) or self.lines.get((section, None)),
                           self.source)

    # -- typed views ------------------------------------------------------
    @property
    def task_name(self) -> str:
        name = self.get("task", "name")
        if not name:
            raise self.error("missing task name", "task", "name")
        from .tasks import TASKS

        if name not in TASKS:
            raise self.error(f"unknown task {name!r}; expected one of {sorted(TASKS)}", "task", "name")
        return name

    def _kwargs(self, section: str, target, skip=("name",)) -> dict:
        params = inspect.signature(target).parameters
        out = {}
        for key, raw in self.sections.get(section, {}).items():
            if key in skip:
                continue
            # dotted keys such as prey_params.spiral_rate build a nested dict
            head, _, sub = key.partition(".")
            if head not in params:
                raise self.error(f"unknown field for {getattr(target, '__name__', target)}", section, key)
            try:
                val = parse_value(raw)
            except ValueError as exc:
                raise self.error(f"cannot parse {raw!r}: {exc}", section, key) from None
            if sub:
                out.setdefault(head, {})[sub] = val
            else:
                out[key] = val
        return out

    def task_params(self, section: str = "task") -> dict:
        from .tasks import TASKS

        return self._kwargs(section, TASKS[self.task_name])

    def make_task(self, training: bool = False, theta=None):
        from .tasks import TASKS, training_obstacle_task

        cls = TASKS[self.task_name]
        params = self.task_params()
        if training:
            params.update(self._kwargs("training.task", cls, skip=()))
        if theta is None:
            theta = self.theta
        if theta is not None:
            params = self._with_theta(params, theta)
        try:
            if training and self.task_name == "obstacles" and "static_obstacles" not in params:
                task = training_obstacle_task(**params)
            else:
                task = cls(**params)
        except (TypeError, ValueError) as exc:
            raise self.error(str(exc), "task") from None
        prefs = self.preferences(task)
        if prefs is not None:
            task.prefs = prefs
            if hasattr(task, "pole_prefs"):
                task.pole_prefs = prefs
        if task.theta is not None and len(task.theta) != len(task.prefs):
            raise self.error(f"{len(task.theta)} weights for {len(task.prefs)} preferences", "weights", "theta")
        return task

    def _with_theta(self, params, theta):
        theta = np.asarray(theta, float)
        if self.task_name == "pendulum":
            params["theta_pole"] = theta
        else:
            params["theta"] = theta
        return params

    @property
    def theta(self):
        val = self.get("weights", "theta")
        if val is None:
            return None
        arr = np.atleast_1d(np.asarray(val, dtype=float))
        if not np.all(np.isfinite(arr)):
            raise self.error("weights must be finite", "weights", "theta")
        return arr

    def policy(self, method: str | None = None):
        from .policies import PolicyConfig

        kw = self._kwargs("policy", PolicyConfig, skip=())
        if method is not None:
            kw["method"] = method
        for key in ("lower", "upper"):
            if isinstance(kw.get(key), tuple):
                kw[key] = np.asarray(kw[key], float)
        try:
            return PolicyConfig(**kw)
        except ValueError as exc:
            raise self.error(str(exc), "policy") from None

    def training(self):
        from .learning import TrainingConfig

        kw = self._kwargs("training", TrainingConfig, skip=("margin", "speed_limit"))
        try:
            return TrainingConfig(**kw)
        except ValueError as exc:
            raise self.error(str(exc), "training") from None

    def disturbance(self, n_action: int) -> GaussianDisturbance | None:
        if "disturbance" not in self.sections:
            return None
        mean = self.get("disturbance", "mean", 0.0)
        std = self.get("disturbance", "std", 0.0)
        try:
            return GaussianDisturbance(np.broadcast_to(np.asarray(mean, float), (n_action,)).copy(),
                                       np.asarray(std, float))
        except ValueError as exc:
            raise self.error(str(exc), "disturbance") from None

    def run(self, key: str, default=None):
        return self.get("run", key, default)

    def preferences(self, task) -> list[Preference] | None:
        names = [s for s in self.sections if s.startswith("preference.")]
        if not names:
            return None
        return [self._preference(s, task) for s in names]

    def _preference(self, section: str, task) -> Preference:
        sec = self.sections[section]
        for key in sec:
            if key not in PREF_KEYS:
                raise self.error("unknown preference field", section, key)
        layout = task.layout

        def agents(key):
            raw = sec.get(key, "all").strip()
            names = layout.names if raw == "all" else [a.strip() for a in raw.split(",") if a.strip()]
            if not names:
                raise self.error("agent set is empty", section, key)
            unknown = [a for a in names if a not in layout.names]
            if unknown:
                raise self.error(f"unknown agents {unknown}", section, key)
            return names

        kind = sec.get("kind", "").strip()
        if kind not in (ATTRACTOR, REPELLER):
            raise self.error(f"kind must be {ATTRACTOR!r} or {REPELLER!r}", section, "kind")
        part = sec.get("part", "position").strip()
        axes = sec.get("axes", "").strip() or None
        if axes is not None and not re.fullmatch(r"[xyz]+", axes):
            raise self.error("axes must be letters from 'xyz'", section, "axes")
        try:
            index = layout.select(agents("agents"), part, axes)
            kw = dict(kind=kind, index=index, target=sec.get("target", "point").strip(),
                      name=section.split(".", 1)[1])
            if "point" in sec:
                kw["point"] = np.atleast_1d(np.asarray(parse_value(sec["point"]), float))
            if "reference" in sec:
                kw["reference"] = sec["reference"].strip()
            if "offset" in sec:
                kw["offset"] = np.atleast_1d(np.asarray(parse_value(sec["offset"]), float))
            if "beta" in sec:
                kw["beta"] = float(sec["beta"])
            if "variant" in sec:
                kw["variant"] = sec["variant"].strip()
            if kw["target"] == "relation":
                kw["other"] = layout.select(agents("other_agents"), sec.get("other_part", part).strip(),
                                            sec.get("other_axes", "").strip() or axes)
            return Preference(**kw)
        except ConfigError:
            raise
        except (ValueError, KeyError) as exc:
            raise self.error(str(exc), section) from None


def _line_index(text: str) -> dict:
    lines, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = no
        elif section and s and not s.startswith(("#", ";")) and ("=" in s or ":" in s):
            key = re.split(r"[=:]", s, 1)[0].strip().lower()
            lines[(section, key)] = no
    return lines


def parse_config(text: str, source: str = "<config>") -> TaskConfig:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",), empty_lines_in_values=False)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError(str(exc).splitlines()[0], line=line, source=source) from None
    sections = {s: dict(cp[s]) for s in cp.sections()}
    cfg = TaskConfig(sections, _line_index(text), source)
    for s in sections:
        if s not in KNOWN_SECTIONS and not s.startswith("preference."):
            raise cfg.error("unknown section", s)
    if "task" not in sections:
        raise ConfigError("missing [task] section", source=source)
    _ = cfg.task_name
    return cfg


def load_config(path) -> TaskConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return parse_config(text, str(path))


def serialize_config(cfg: TaskConfig) -> str:
    out = []
    for section, items in cfg.sections.items():
        out.append(f"[{section}]")
        out.extend(f"{k} = {v}" for k, v in items.items())
        out.append("")
    return "\n".join(out)


def preset_path(name: str) -> Path:
    p = PRESETS_DIR / f"{name}.cfg"
    if not p.exists():
        raise ConfigError(f"no preset named {name!r}", source=str(p))
    return p
