"""Experiment configuration: flat ``section.key = value`` text files.

Grammar, one setting per line::

    # comment (also allowed after a value)
    problem = burgers1d
    mesh.n_elements = 21
    time.t_final = 2/pi
    time.output_times = 1/pi, 1.5/pi

Numbers accept arithmetic on literals, ``pi`` and ``sqrt2``. Kernel
scalings are multiples of the element width; ``auto`` means 1 in 1D and
``sqrt2`` in 2D. Lists are comma
separated, booleans are ``true``/``false``. Unknown keys are errors.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, fields
from pathlib import Path

PROBLEMS = ("burgers1d", "burgers2d", "advect2d")
CORRECTIONS = ("none", "local", "siac", "blend")
BLEND_SECOND = ("local", "siac")
INITIAL = ("sine_offset", "table")
STEPPERS = ("fe", "ssprk22", "ssprk33", "rk44")
FLUXES = ("central", "llf")


class ConfigError(ValueError):
    """Malformed or unsupported configuration."""


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "sqrt2": math.sqrt(2.0)}


def eval_number(text: str) -> float:
    """Evaluate a restricted arithmetic expression such as ``1.5/pi``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        raise ConfigError(f"unsupported expression {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse number {text!r}") from exc


def _to_bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _to_int(text):
    value = eval_number(text)
    if float(value) != int(value):
        raise ConfigError(f"expected an integer, got {text!r}")
    return int(value)


def _to_float(text):
    return float(eval_number(text))


def _to_scaling(text):
    return None if text.strip().lower() == "auto" else _to_float(text)


def _fmt_scaling(value):
    return "auto" if value is None else repr(value)


def _to_str(text):
    return text.strip()


def _list_of(conv):
    def parse(text):
        items = [s for s in (t.strip() for t in text.split(",")) if s]
        return tuple(conv(s) for s in items)
    return parse


@dataclass
class ExperimentConfig:
    problem: str = "burgers1d"
    a: float = 0.0
    b: float = 2.0
    n_elements: int = 21
    nx: int = 8
    ny: int = 8
    p: int = 5
    flux: str = "llf"
    correction: str = "none"
    blend_second: str = "local"
    blend_clamp: bool = True
    moments: int = 1
    spline_order: int = 1
    scaling: float | None = None
    line_angle: float = math.pi / 4
    second_moments: int = 3
    second_spline_order: int = 2
    second_scaling: float | None = None
    dissipation: bool = False
    c_E: float = 10.0
    c_max: float = 1.0
    stepper: str = "ssprk33"
    relaxation: bool = True
    cfl: float = 0.1
    t_final: float = 2 / math.pi
    output_times: tuple = ()
    initial: str = "sine_offset"
    initial_path: str = ""
    output_dir: str = "out"
    conv_Ns: tuple = (20, 40, 80, 160, 320)
    conv_degrees: tuple = (1, 2, 3, 4)
    conv_modes: tuple = ("none", "local", "k11", "k32")
    conv_t_final: float = 1 / (2 * math.pi)
    conv_cfl: float = 0.1
    conv_stepper: str = "rk44"
    fourier_points: int = 512
    fv_cells: int = 2000
    fv_cfl: float = 0.4

    @property
    def dim(self) -> int:
        return 1 if self.problem == "burgers1d" else 2

    def validate(self) -> "ExperimentConfig":
        _choice("problem", self.problem, PROBLEMS)
        _choice("flux", self.flux, FLUXES)
        _choice("correction.mode", self.correction, CORRECTIONS)
        _choice("correction.second", self.blend_second, BLEND_SECOND)
        _choice("time.stepper", self.stepper, STEPPERS)
        _choice("initial.name", self.initial, INITIAL)
        _choice("convergence.stepper", self.conv_stepper, STEPPERS)
        if not self.b > self.a:
            raise ConfigError("domain.b must exceed domain.a")
        if not 1 <= self.p <= 20:
            raise ConfigError("basis.p must be in 1..20")
        if min(self.n_elements, self.nx, self.ny) < 1:
            raise ConfigError("element counts must be positive")
        if min(self.moments, self.spline_order, self.second_moments, self.second_spline_order) < 1:
            raise ConfigError("kernel moments and spline order must be at least 1")
        if any(s is not None and s <= 0 for s in (self.scaling, self.second_scaling)):
            raise ConfigError("kernel scaling must be positive")
        if self.c_E < 0 or self.c_max < 0:
            raise ConfigError("dissipation parameters must be nonnegative")
        if self.cfl <= 0 or self.conv_cfl <= 0 or self.fv_cfl <= 0:
            raise ConfigError("CFL numbers must be positive")
        if self.t_final <= 0 or self.conv_t_final <= 0:
            raise ConfigError("final times must be positive")
        if self.relaxation and self.stepper == "fe":
            raise ConfigError("relaxation is not available for forward Euler")
        if self.initial == "table":
            if self.dim != 1:
                raise ConfigError("tabulated initial data is supported in 1D only")
            if not Path(self.initial_path).is_file():
                raise ConfigError(f"initial table {self.initial_path!r} does not exist")
        for mode in self.conv_modes:
            if mode not in ("none", "local") and not _is_kernel_name(mode):
                raise ConfigError(f"unknown convergence mode {mode!r} (none, local or k<moments><order>)")
        if list(self.conv_Ns) != sorted(set(self.conv_Ns)):
            raise ConfigError("convergence.Ns must be strictly increasing")
        if self.fv_cells < 10:
            raise ConfigError("fv.n_cells must be at least 10")
        return self


def _choice(key, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{key} must be one of {', '.join(allowed)}; got {value!r}")


def _is_kernel_name(name: str) -> bool:
    return len(name) == 3 and name[0] == "k" and name[1:].isdigit() and "0" not in name[1:]


def kernel_from_name(name: str) -> tuple[int, int]:
    """``"k32"`` -> ``(3, 2)``: moments (r + 1) and spline order."""
    if not _is_kernel_name(name):
        raise ConfigError(f"not a kernel name: {name!r}")
    return int(name[1]), int(name[2])


# dotted key -> (attribute, parser, formatter)
_fmt_list = lambda xs: ", ".join(repr(x) if isinstance(x, float) else str(x) for x in xs)  # noqa: E731
_fmt_bool = lambda v: "true" if v else "false"  # noqa: E731
KEYS = {
    "problem": ("problem", _to_str, str),
    "domain.a": ("a", _to_float, repr),
    "domain.b": ("b", _to_float, repr),
    "mesh.n_elements": ("n_elements", _to_int, str),
    "mesh.nx": ("nx", _to_int, str),
    "mesh.ny": ("ny", _to_int, str),
    "basis.p": ("p", _to_int, str),
    "flux": ("flux", _to_str, str),
    "correction.mode": ("correction", _to_str, str),
    "correction.second": ("blend_second", _to_str, str),
    "correction.clamp": ("blend_clamp", _to_bool, _fmt_bool),
    "kernel.moments": ("moments", _to_int, str),
    "kernel.spline_order": ("spline_order", _to_int, str),
    "kernel.scaling": ("scaling", _to_scaling, _fmt_scaling),
    "kernel.line_angle": ("line_angle", _to_float, repr),
    "kernel2.moments": ("second_moments", _to_int, str),
    "kernel2.spline_order": ("second_spline_order", _to_int, str),
    "kernel2.scaling": ("second_scaling", _to_scaling, _fmt_scaling),
    "dissipation.enabled": ("dissipation", _to_bool, _fmt_bool),
    "dissipation.c_E": ("c_E", _to_float, repr),
    "dissipation.c_max": ("c_max", _to_float, repr),
    "time.stepper": ("stepper", _to_str, str),
    "time.relaxation": ("relaxation", _to_bool, _fmt_bool),
    "time.cfl": ("cfl", _to_float, repr),
    "time.t_final": ("t_final", _to_float, repr),
    "time.output_times": ("output_times", _list_of(_to_float), _fmt_list),
    "initial.name": ("initial", _to_str, str),
    "initial.path": ("initial_path", _to_str, str),
    "output.dir": ("output_dir", _to_str, str),
    "convergence.Ns": ("conv_Ns", _list_of(_to_int), _fmt_list),
    "convergence.degrees": ("conv_degrees", _list_of(_to_int), _fmt_list),
    "convergence.modes": ("conv_modes", _list_of(_to_str), _fmt_list),
    "convergence.t_final": ("conv_t_final", _to_float, repr),
    "convergence.cfl": ("conv_cfl", _to_float, repr),
    "convergence.stepper": ("conv_stepper", _to_str, str),
    "filter.fourier_points": ("fourier_points", _to_int, str),
    "fv.n_cells": ("fv_cells", _to_int, str),
    "fv.cfl": ("fv_cfl", _to_float, repr),
}


def parse_config(text: str, base_dir: str | Path | None = None) -> ExperimentConfig:
    """Parse config text; ``initial.path`` is resolved against ``base_dir``."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, conv, _ = KEYS[key]
        try:
            values[attr] = conv(value)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    cfg = ExperimentConfig(**values)
    if cfg.initial_path and base_dir is not None and not Path(cfg.initial_path).is_absolute():
        cfg.initial_path = str(Path(base_dir) / cfg.initial_path)
    return cfg.validate()


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, (attr, _, fmt) in KEYS.items():
        lines.append(f"{key} = {fmt(getattr(cfg, attr))}")
    return "\n".join(lines) + "\n"


def config_dict(cfg: ExperimentConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
