"""Ordered, probabilistic, deterministic transform composition.

A :class:`PipelineConfig` holds three ordered groups of
:class:`TransformSpec` — geometric, novel, baseline intensity — applied in
that order (``order_mode="shuffle_non_geometric"`` keeps geometric first and
applies a seeded permutation of everything after it).

Randomness contract: every spec owns one substream keyed by
``(global_seed, splitmix64-chain(sample_id, epoch, position))`` where
``position`` is the spec's index in the *configured* order — shuffling
reorders application, never randomness.  Each spec first consumes one
Bernoulli gate draw from its own substream, applied or not, so changing one
probability never shifts another transform's draws.

The JSON schema is strict: unknown keys anywhere are config errors, reported
with their path (e.g. ``novel[2].params.alpha_range``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields as dc_fields, replace
from pathlib import Path
from time import perf_counter
from typing import Any, Callable

import numpy as np

from . import baseline, novel
from ._checks import check_prob
from .errors import ConfigError, InternalError
from .rng import RngStream, derive_substream
from .volume import Sample

_MASK64 = (1 << 64) - 1
_SHUFFLE_TAG = _MASK64  # position tag for the order permutation stream
_ORDER_MODES = ("fixed", "shuffle_non_geometric")


@dataclass(frozen=True)
class _Entry:
    name: str
    kind: str  # "geometric" | "novel" | "intensity"
    params_cls: type
    default_probability: float
    apply: Callable[[Sample, RngStream, Any], Sample]


def _registry() -> dict[str, _Entry]:
    e = _Entry
    entries = [
        e("random_spatial", "geometric", baseline.SpatialParams, 1.0,
          lambda s, rng, p: baseline.random_spatial(s, rng, p)),
        # the novel transforms, in canonical application order
        e("intensity_inversion", "novel", novel.InversionParams, 0.2,
          lambda s, rng, p: s.with_image(novel.intensity_inversion(s.image))),
        e("scharr_filter", "novel", novel.ScharrParams, 0.2,
          lambda s, rng, p: s.with_image(novel.scharr_filter(s.image))),
        e("redistribute_seg", "novel", novel.RedistributeSegParams, 0.2,
          lambda s, rng, p: novel.redistribute_seg(
              s, rng, p.alpha_range, p.bins, p.include_background)),
        e("random_conv", "novel", novel.RandomConvParams, 0.2,
          lambda s, rng, p: s.with_image(novel.random_conv(
              s.image, rng, p.kernel_sizes, p.weight_sigma))),
        e("histogram_equalization", "novel", novel.HistEqParams, 0.2,
          lambda s, rng, p: s.with_image(novel.histogram_equalization(s.image, p.bins))),
        e("bias_field", "novel", novel.BiasFieldParams, 0.2,
          lambda s, rng, p: s.with_image(novel.bias_field(
              s.image, rng, p.order, p.coeff_range))),
        e("unsharp_masking", "novel", novel.UnsharpParams, 0.2,
          lambda s, rng, p: s.with_image(novel.unsharp_masking(
              s.image, rng, p.sigma_range, p.amount_range))),
        e("function_transform", "novel", novel.FunctionTransformParams, 0.2,
          lambda s, rng, p: s.with_image(novel.function_transform(
              s.image, rng, p.functions))),
        # baseline intensity defaults
        e("gaussian_noise", "intensity", baseline.NoiseParams, 0.1,
          lambda s, rng, p: s.with_image(baseline.gaussian_noise(s.image, rng, p.sigma_range))),
        e("gaussian_blur", "intensity", baseline.BlurParams, 0.2,
          lambda s, rng, p: s.with_image(baseline.gaussian_blur(s.image, rng, p.sigma_range))),
        e("simulate_low_resolution", "intensity", baseline.LowResParams, 0.25,
          lambda s, rng, p: s.with_image(baseline.simulate_low_resolution(
              s.image, rng, p.factor_range))),
        e("brightness_contrast", "intensity", baseline.BrightnessContrastParams, 0.15,
          lambda s, rng, p: s.with_image(baseline.brightness_contrast(
              s.image, rng, p.brightness_range, p.contrast_range))),
        e("gamma_correction", "intensity", baseline.GammaParams, 0.3,
          lambda s, rng, p: s.with_image(baseline.gamma_correction(
              s.image, rng, p.gamma_range))),
    ]
    return {entry.name: entry for entry in entries}


REGISTRY: dict[str, _Entry] = _registry()
NOVEL_TRANSFORMS: tuple[str, ...] = tuple(n for n, e in REGISTRY.items() if e.kind == "novel")
BASELINE_INTENSITY_TRANSFORMS: tuple[str, ...] = tuple(
    n for n, e in REGISTRY.items() if e.kind == "intensity"
)


@dataclass(frozen=True)
class TransformSpec:
    """One pipeline step: a registered transform, its gate probability, and
    its parameter block."""

    name: str
    probability: float
    params: Any

    def __post_init__(self) -> None:
        entry = REGISTRY.get(self.name)
        if entry is None:
            raise ValueError(f"unknown transform name {self.name!r}; known: {sorted(REGISTRY)}")
        check_prob(f"{self.name} probability", self.probability)
        if not isinstance(self.params, entry.params_cls):
            raise ValueError(
                f"{self.name} expects params of type {entry.params_cls.__name__}, "
                f"got {type(self.params).__name__}"
            )


def default_spec(name: str, probability: float | None = None) -> TransformSpec:
    """A spec with the transform's default params (and default probability
    unless overridden)."""
    entry = REGISTRY.get(name)
    if entry is None:
        raise ValueError(f"unknown transform name {name!r}; known: {sorted(REGISTRY)}")
    prob = entry.default_probability if probability is None else probability
    return TransformSpec(name, prob, entry.params_cls())


@dataclass(frozen=True)
class PipelineConfig:
    """Ordered transform groups plus ordering mode and global seed."""

    geometric: tuple[TransformSpec, ...] = ()
    novel: tuple[TransformSpec, ...] = ()
    baseline_intensity: tuple[TransformSpec, ...] = ()
    order_mode: str = "fixed"
    global_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "geometric", tuple(self.geometric))
        object.__setattr__(self, "novel", tuple(self.novel))
        object.__setattr__(self, "baseline_intensity", tuple(self.baseline_intensity))
        object.__setattr__(self, "global_seed", int(self.global_seed) & _MASK64)
        if self.order_mode not in _ORDER_MODES:
            raise ValueError(f"order_mode must be one of {_ORDER_MODES}, got {self.order_mode!r}")
        for spec in self.geometric:
            if REGISTRY[spec.name].kind != "geometric":
                raise ValueError(f"{spec.name!r} is not a geometric transform")
        for spec in self.novel + self.baseline_intensity:
            if REGISTRY[spec.name].kind == "geometric":
                raise ValueError(f"geometric transform {spec.name!r} must go in the geometric group")

    @property
    def specs(self) -> tuple[TransformSpec, ...]:
        """All specs in configured order (the order that keys substreams)."""
        return self.geometric + self.novel + self.baseline_intensity


def make_default_config(global_seed: int = 0) -> PipelineConfig:
    """The canonical pipeline: spatial, the eight novel transforms at p=0.2,
    then the baseline intensity set at its standard probabilities."""
    return PipelineConfig(
        geometric=(default_spec("random_spatial"),),
        novel=tuple(default_spec(n) for n in NOVEL_TRANSFORMS),
        baseline_intensity=tuple(default_spec(n) for n in BASELINE_INTENSITY_TRANSFORMS),
        order_mode="fixed",
        global_seed=global_seed,
    )


# ---------------------------------------------------------------------------
# ablation variants


def ablation_variants() -> tuple[str, ...]:
    """Names of the standard ablation setups."""
    return ("base", "ours", "ours_base_disabled", "ours_random_order") + tuple(
        f"base_plus_{name}" for name in NOVEL_TRANSFORMS
    )


def make_ablation_config(base_seed: int, variant: str) -> PipelineConfig:
    """Materialize one ablation setup: the full pipeline, the baseline-only
    pipeline, novel-only, shuffled ordering, or baseline plus a single novel
    transform at probability 0.5."""
    cfg = make_default_config(base_seed)
    if variant == "ours":
        return cfg
    if variant == "base":
        return replace(cfg, novel=())
    if variant == "ours_base_disabled":
        disabled = tuple(replace(s, probability=0.0) for s in cfg.baseline_intensity)
        return replace(cfg, baseline_intensity=disabled)
    if variant == "ours_random_order":
        return replace(cfg, order_mode="shuffle_non_geometric")
    if variant.startswith("base_plus_"):
        name = variant[len("base_plus_"):]
        if name in NOVEL_TRANSFORMS:
            return replace(cfg, novel=(default_spec(name, probability=0.5),))
    raise ValueError(f"unknown ablation variant {variant!r}; choose from {ablation_variants()}")


# ---------------------------------------------------------------------------
# JSON config schema


def config_to_dict(cfg: PipelineConfig) -> dict:
    def spec_dict(spec: TransformSpec) -> dict:
        params = {}
        for f in dc_fields(spec.params):
            v = getattr(spec.params, f.name)
            params[f.name] = list(v) if isinstance(v, tuple) else v
        return {"name": spec.name, "probability": spec.probability, "params": params}

    return {
        "global_seed": cfg.global_seed,
        "order_mode": cfg.order_mode,
        "geometric": [spec_dict(s) for s in cfg.geometric],
        "novel": [spec_dict(s) for s in cfg.novel],
        "baseline_intensity": [spec_dict(s) for s in cfg.baseline_intensity],
    }


def _params_from_dict(name: str, raw: dict, ctx: str):
    entry = REGISTRY[name]
    known = {f.name for f in dc_fields(entry.params_cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"{ctx}.params: unknown key {key!r} for {name} (known: {sorted(known)})")
        kwargs[key] = tuple(value) if isinstance(value, list) else value
    try:
        return entry.params_cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{ctx}.params: {exc}") from exc


def _spec_from_dict(raw, ctx: str) -> TransformSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"{ctx}: expected an object, got {type(raw).__name__}")
    unknown = set(raw) - {"name", "probability", "params"}
    if unknown:
        raise ConfigError(f"{ctx}: unknown key(s) {sorted(unknown)}")
    name = raw.get("name")
    if not isinstance(name, str) or name not in REGISTRY:
        raise ConfigError(f"{ctx}: unknown transform name {name!r} (known: {sorted(REGISTRY)})")
    prob = raw.get("probability", REGISTRY[name].default_probability)
    if isinstance(prob, bool) or not isinstance(prob, (int, float)):
        raise ConfigError(f"{ctx}.probability: expected a number, got {prob!r}")
    params_raw = raw.get("params", {})
    if not isinstance(params_raw, dict):
        raise ConfigError(f"{ctx}.params: expected an object")
    params = _params_from_dict(name, params_raw, ctx)
    try:
        return TransformSpec(name, float(prob), params)
    except ValueError as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc


def config_from_dict(doc) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"config root must be an object, got {type(doc).__name__}")
    allowed = {"global_seed", "order_mode", "geometric", "novel", "baseline_intensity"}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown config key(s) {sorted(unknown)}")
    seed = doc.get("global_seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"global_seed: expected an integer, got {seed!r}")
    order_mode = doc.get("order_mode", "fixed")
    groups = {}
    for group in ("geometric", "novel", "baseline_intensity"):
        raw = doc.get(group, [])
        if not isinstance(raw, list):
            raise ConfigError(f"{group}: expected a list")
        groups[group] = tuple(
            _spec_from_dict(entry, f"{group}[{i}]") for i, entry in enumerate(raw)
        )
    try:
        return PipelineConfig(
            geometric=groups["geometric"],
            novel=groups["novel"],
            baseline_intensity=groups["baseline_intensity"],
            order_mode=order_mode,
            global_seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> PipelineConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def save_config(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")


# ---------------------------------------------------------------------------
# application


@dataclass(frozen=True)
class TraceEvent:
    """One pipeline step as it actually ran."""

    name: str
    position: int
    applied: bool
    ms: float


def transform_stream(cfg: PipelineConfig, sample_id: int, epoch: int, position: int) -> RngStream:
    """The substream owned by the spec at ``position`` in configured order."""
    return RngStream(cfg.global_seed, derive_substream(sample_id, epoch, position))


def apply_pipeline(
    sample: Sample,
    cfg: PipelineConfig,
    sample_id: int = 0,
    epoch: int = 0,
    trace: list[TraceEvent] | None = None,
) -> Sample:
    """Run the configured pipeline on one sample.

    Pure in ``(sample, cfg, sample_id, epoch)``: two calls with equal inputs
    produce bit-identical outputs.  Pass a list as ``trace`` to receive one
    :class:`TraceEvent` per spec in application order.
    """
    specs = cfg.specs
    n_geo = len(cfg.geometric)
    order = list(range(len(specs)))
    if cfg.order_mode == "shuffle_non_geometric" and len(specs) - n_geo > 1:
        stream = RngStream(cfg.global_seed, derive_substream(sample_id, epoch, _SHUFFLE_TAG))
        tail = stream.permutation(len(specs) - n_geo)
        order = order[:n_geo] + [n_geo + int(t) for t in tail]
    out = sample
    for position in order:
        spec = specs[position]
        rng = transform_stream(cfg, sample_id, epoch, position)
        applied = rng.random() < spec.probability  # gate always consumes one draw
        start = perf_counter()
        if applied:
            out = REGISTRY[spec.name].apply(out, rng, spec.params)
        if trace is not None:
            trace.append(TraceEvent(spec.name, position, applied, (perf_counter() - start) * 1e3))
    if not np.isfinite(out.image.voxels).all():
        raise InternalError("pipeline produced non-finite voxels")
    return out
