"""Modular simple-recurrent-network engine.

A network is a set of named hidden modules over one shared input. Every
hidden unit has time-delay connections to the other hidden units *within
its module* only; each module carries its own context (previous hidden
activation), reset to zeros at word boundaries. Named output heads read
from configurable subsets of the modules.

Internally all modules are packed into a single hidden vector and all
heads into a single output vector, with 0/1 masks enforcing the block
structure on the recurrent and output weight matrices. This keeps the
per-phone update a handful of dense matrix operations, which the kernels
module compiles.

Training is Elman-style truncated backpropagation: the context is treated
as a constant input, so gradients never flow across time steps. The loss
is the halved summed squared error over all heads, minimized online (one
update per phone) with momentum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

MODEL_FORMAT_VERSION = 1

PHONE_COPY_HEAD = "phone_copy"
ROOT_HEAD = "root"


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


@dataclass(frozen=True)
class ModuleSpec:
    name: str
    width: int


@dataclass(frozen=True)
class HeadSpec:
    name: str
    width: int
    sources: tuple[str, ...]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    seed: int
    learning_rate: float = 0.1
    momentum: float = 0.9

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: input width, hidden modules, and output heads.

    Structural rules, checked at construction:

    - module and head names are unique; all widths are positive
    - every head reads from at least one existing module
    - a ``phone_copy`` head reads from all modules and matches the input
      width
    - a ``root`` head reads from exactly one module; the other
      single-purpose heads (the inflection heads) read from exactly one
      module, share it, and it is not the root module
    """

    input_width: int
    modules: tuple[ModuleSpec, ...]
    heads: tuple[HeadSpec, ...]
    init_range: float = 0.5

    def __post_init__(self) -> None:
        if self.input_width < 1:
            raise ValueError("input_width must be >= 1")
        if not self.modules:
            raise ValueError("at least one hidden module required")
        if not self.heads:
            raise ValueError("at least one output head required")
        if self.init_range <= 0:
            raise ValueError("init_range must be positive")
        names = [m.name for m in self.modules]
        if len(set(names)) != len(names):
            raise ValueError("duplicate module names")
        head_names = [h.name for h in self.heads]
        if len(set(head_names)) != len(head_names):
            raise ValueError("duplicate head names")
        for m in self.modules:
            if m.width < 1:
                raise ValueError(f"module {m.name!r} has zero width")
        root_source: str | None = None
        inflection_sources: set[str] = set()
        for h in self.heads:
            if h.width < 1:
                raise ValueError(f"head {h.name!r} has zero width")
            if not h.sources:
                raise ValueError(f"head {h.name!r} reads from no module")
            if len(set(h.sources)) != len(h.sources):
                raise ValueError(f"head {h.name!r} lists a source twice")
            for s in h.sources:
                if s not in names:
                    raise ValueError(f"head {h.name!r} reads from unknown "
                                     f"module {s!r}")
            if h.name == PHONE_COPY_HEAD:
                if set(h.sources) != set(names):
                    raise ValueError("phone_copy must read from all modules")
                if h.width != self.input_width:
                    raise ValueError("phone_copy width must equal input "
                                     "width")
            elif h.name == ROOT_HEAD:
                if len(h.sources) != 1:
                    raise ValueError("root head must read from exactly one "
                                     "module")
                root_source = h.sources[0]
            else:
                if len(h.sources) != 1:
                    raise ValueError(f"inflection head {h.name!r} must read "
                                     "from exactly one module")
                inflection_sources.add(h.sources[0])
        if len(inflection_sources) > 1:
            raise ValueError("inflection heads must share one module")
        if root_source is not None and root_source in inflection_sources:
            raise ValueError("root and inflection heads must read from "
                             "different modules")

    @property
    def hidden_width(self) -> int:
        return sum(m.width for m in self.modules)

    @property
    def output_width(self) -> int:
        return sum(h.width for h in self.heads)

    def module_slice(self, name: str) -> slice:
        start = 0
        for m in self.modules:
            if m.name == name:
                return slice(start, start + m.width)
            start += m.width
        raise KeyError(name)

    def head_slice(self, name: str) -> slice:
        start = 0
        for h in self.heads:
            if h.name == name:
                return slice(start, start + h.width)
            start += h.width
        raise KeyError(name)

    def recurrent_mask(self) -> np.ndarray:
        mask = np.zeros((self.hidden_width, self.hidden_width))
        for m in self.modules:
            s = self.module_slice(m.name)
            mask[s, s] = 1.0
        return mask

    def output_mask(self) -> np.ndarray:
        mask = np.zeros((self.output_width, self.hidden_width))
        for h in self.heads:
            hs = self.head_slice(h.name)
            for source in h.sources:
                mask[hs, self.module_slice(source)] = 1.0
        return mask


@dataclass
class Network:
    """Packed weights, masks, momentum state, and per-module context."""

    spec: NetworkSpec
    w_in: np.ndarray
    w_rec: np.ndarray
    w_out: np.ndarray
    b_h: np.ndarray
    b_out: np.ndarray
    m_rec: np.ndarray
    m_out: np.ndarray
    ctx: np.ndarray
    v_in: np.ndarray
    v_rec: np.ndarray
    v_out: np.ndarray
    vb_h: np.ndarray
    vb_out: np.ndarray
    _last_x: np.ndarray | None = field(default=None, repr=False)
    _last_h: np.ndarray | None = field(default=None, repr=False)
    _prev_ctx: np.ndarray | None = field(default=None, repr=False)

    def head_values(self, y: np.ndarray) -> dict[str, np.ndarray]:
        return {h.name: y[self.spec.head_slice(h.name)].copy()
                for h in self.spec.heads}

    def module_state(self, name: str) -> np.ndarray:
        return self.ctx[self.spec.module_slice(name)].copy()


def init_network(spec: NetworkSpec, seed: int) -> Network:
    """Fresh network with weights uniform in [-r, +r] and zero contexts.

    Draw order is fixed (w_in, w_rec, w_out, b_h, b_out) so a seed pins
    every weight. Masked-out entries are zeroed after drawing.
    """
    rng = np.random.default_rng(seed)
    r = spec.init_range
    h, f, o = spec.hidden_width, spec.input_width, spec.output_width
    m_rec = spec.recurrent_mask()
    m_out = spec.output_mask()
    return Network(
        spec=spec,
        w_in=rng.uniform(-r, r, (h, f)),
        w_rec=rng.uniform(-r, r, (h, h)) * m_rec,
        w_out=rng.uniform(-r, r, (o, h)) * m_out,
        b_h=rng.uniform(-r, r, h),
        b_out=rng.uniform(-r, r, o),
        m_rec=m_rec,
        m_out=m_out,
        ctx=np.zeros(h),
        v_in=np.zeros((h, f)),
        v_rec=np.zeros((h, h)),
        v_out=np.zeros((o, h)),
        vb_h=np.zeros(h),
        vb_out=np.zeros(o),
    )


def reset_context(net: Network) -> None:
    """Zero every module's context, as at the start of a word."""
    net.ctx[:] = 0.0


def forward_step(net: Network, x: np.ndarray) -> dict[str, np.ndarray]:
    """One phone presentation; updates contexts, returns per-head outputs."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.spec.input_width,):
        raise ValueError(f"expected input of shape ({net.spec.input_width},),"
                         f" got {x.shape}")
    h = sigmoid(net.w_in @ x + net.w_rec @ net.ctx + net.b_h)
    y = sigmoid(net.w_out @ h + net.b_out)
    net._prev_ctx = net.ctx.copy()
    net._last_x = x
    net._last_h = h
    net.ctx = h.copy()
    return net.head_values(y)


def _pack_targets(spec: NetworkSpec, targets: Mapping[str, np.ndarray],
                  ) -> np.ndarray:
    t = np.empty(spec.output_width)
    seen = set()
    for head in spec.heads:
        if head.name not in targets:
            raise ValueError(f"missing target for head {head.name!r}")
        v = np.asarray(targets[head.name], dtype=float)
        if v.shape != (head.width,):
            raise ValueError(f"target for {head.name!r} has shape {v.shape}, "
                             f"expected ({head.width},)")
        t[spec.head_slice(head.name)] = v
        seen.add(head.name)
    extra = set(targets) - seen
    if extra:
        raise ValueError(f"targets for unknown heads: {sorted(extra)}")
    return t


def _raw_gradients(net: Network, x: np.ndarray, ctx: np.ndarray,
                   t: np.ndarray):
    """Loss and gradients of one step at fixed (x, ctx), no state change.

    Loss is 0.5 * sum over heads of squared error. The context enters as
    a constant input (truncation depth 1).
    """
    h = sigmoid(net.w_in @ x + net.w_rec @ ctx + net.b_h)
    y = sigmoid(net.w_out @ h + net.b_out)
    e = y - t
    err = 0.5 * float(e @ e)
    d_out = e * y * (1.0 - y)
    d_h = (net.w_out.T @ d_out) * h * (1.0 - h)
    g_out = np.outer(d_out, h) * net.m_out
    g_in = np.outer(d_h, x)
    g_rec = np.outer(d_h, ctx) * net.m_rec
    return err, g_in, g_rec, g_out, d_h, d_out


def backward_step(net: Network, targets: Mapping[str, np.ndarray],
                  config: TrainConfig) -> float:
    """Momentum update from the error of the step just run; returns its loss."""
    if net._last_x is None or net._prev_ctx is None:
        raise RuntimeError("backward_step requires a preceding forward_step")
    t = _pack_targets(net.spec, targets)
    err, g_in, g_rec, g_out, gb_h, gb_out = _raw_gradients(
        net, net._last_x, net._prev_ctx, t)
    lr, mom = config.learning_rate, config.momentum
    for v, g, w in ((net.v_in, g_in, net.w_in),
                    (net.v_rec, g_rec, net.w_rec),
                    (net.v_out, g_out, net.w_out),
                    (net.vb_h, gb_h, net.b_h),
                    (net.vb_out, gb_out, net.b_out)):
        v *= mom
        v -= lr * g
        w += v
    net._last_x = None
    return err


def gradient_check(spec: NetworkSpec, seed: int,
                   epsilon: float = 1e-5) -> float:
    """Max relative gap between analytic and central-difference gradients.

    Only entries allowed by the block masks participate: masked-out
    positions are structurally absent, so perturbing them changes the
    loss without any corresponding analytic term. ``epsilon`` is both
    the perturbation size and the floor of the relative denominator.
    """
    net = init_network(spec, seed)
    rng = np.random.default_rng(seed + 1)
    x = rng.uniform(0.0, 1.0, spec.input_width)
    ctx = rng.uniform(0.0, 1.0, spec.hidden_width)
    t = (rng.uniform(size=spec.output_width) < 0.5).astype(float)

    def loss() -> float:
        h = sigmoid(net.w_in @ x + net.w_rec @ ctx + net.b_h)
        y = sigmoid(net.w_out @ h + net.b_out)
        e = y - t
        return 0.5 * float(e @ e)

    _, g_in, g_rec, g_out, gb_h, gb_out = _raw_gradients(net, x, ctx, t)
    worst = 0.0
    blocks = ((net.w_in, g_in, None), (net.w_rec, g_rec, net.m_rec),
              (net.w_out, g_out, net.m_out), (net.b_h, gb_h, None),
              (net.b_out, gb_out, None))
    for w, g, mask in blocks:
        flat_w, flat_g = w.ravel(), g.ravel()
        flat_m = None if mask is None else mask.ravel()
        for i in range(flat_w.size):
            if flat_m is not None and flat_m[i] == 0.0:
                continue
            orig = flat_w[i]
            flat_w[i] = orig + epsilon
            up = loss()
            flat_w[i] = orig - epsilon
            down = loss()
            flat_w[i] = orig
            numeric = (up - down) / (2.0 * epsilon)
            gap = abs(flat_g[i] - numeric) / max(abs(numeric), epsilon)
            worst = max(worst, gap)
    return worst


# ---------------------------------------------------------------------------
# hierarchical clocking

@dataclass(frozen=True)
class ClockedNetworkSpec:
    """Two-level architecture: a per-phone level and a per-syllable level.

    The segment module is a recurrent module stepped on every phone, its
    context persisting across the whole word. The accumulator is a
    recurrent module also stepped per phone, but its context is reset at
    each syllable start, so its state at a syllable's end is a summary of
    that syllable alone. The syllable module is stepped once per syllable
    on that summary, with its own context replaced by the all-zero
    boundary pattern before every step. The word head reads the segment
    state and the latest syllable state at every phone step.
    """

    input_width: int
    segment_width: int
    accumulator_width: int
    syllable_width: int
    head_width: int = 1
    init_range: float = 0.5

    def __post_init__(self) -> None:
        for name in ("input_width", "segment_width", "accumulator_width",
                     "syllable_width", "head_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.init_range <= 0:
            raise ValueError("init_range must be positive")


@dataclass
class ClockedNetwork:
    spec: ClockedNetworkSpec
    w_in_seg: np.ndarray
    w_rec_seg: np.ndarray
    b_seg: np.ndarray
    w_in_acc: np.ndarray
    w_rec_acc: np.ndarray
    b_acc: np.ndarray
    w_in_syl: np.ndarray
    w_rec_syl: np.ndarray
    b_syl: np.ndarray
    w_head: np.ndarray
    b_head: np.ndarray


@dataclass(frozen=True)
class ClockedTrace:
    """Everything observable about one clocked forward pass."""

    segment_steps: int
    syllable_steps: int
    outputs: np.ndarray
    final_output: np.ndarray
    syllable_inputs: tuple[np.ndarray, ...]
    syllable_contexts_before: tuple[np.ndarray, ...]
    syllable_states: tuple[np.ndarray, ...]
    segment_states: tuple[np.ndarray, ...]


def init_clocked_network(spec: ClockedNetworkSpec, seed: int,
                         ) -> ClockedNetwork:
    rng = np.random.default_rng(seed)
    r = spec.init_range
    f, ns, na, ny = (spec.input_width, spec.segment_width,
                     spec.accumulator_width, spec.syllable_width)
    return ClockedNetwork(
        spec=spec,
        w_in_seg=rng.uniform(-r, r, (ns, f)),
        w_rec_seg=rng.uniform(-r, r, (ns, ns)),
        b_seg=rng.uniform(-r, r, ns),
        w_in_acc=rng.uniform(-r, r, (na, f)),
        w_rec_acc=rng.uniform(-r, r, (na, na)),
        b_acc=rng.uniform(-r, r, na),
        w_in_syl=rng.uniform(-r, r, (ny, na)),
        w_rec_syl=rng.uniform(-r, r, (ny, ny)),
        b_syl=rng.uniform(-r, r, ny),
        w_head=rng.uniform(-r, r, (spec.head_width, ns + ny)),
        b_head=rng.uniform(-r, r, spec.head_width),
    )


def forward_clocked(net: ClockedNetwork,
                    syllables: Sequence[np.ndarray]) -> ClockedTrace:
    """Run one word given as encoded syllables (each an (n, F) array).

    The phone-level modules step on every row; the syllable module steps
    exactly once per syllable. Raises if the partition is empty or
    contains an empty syllable, since the clock is undefined then.
    """
    spec = net.spec
    if len(syllables) == 0:
        raise ValueError("word must contain at least one syllable")
    mats = []
    for s in syllables:
        m = np.atleast_2d(np.asarray(s, dtype=float))
        if m.shape[0] == 0 or m.shape[1] != spec.input_width:
            raise ValueError("each syllable must be a non-empty sequence of "
                             f"width-{spec.input_width} phone vectors")
        mats.append(m)

    seg = np.zeros(spec.segment_width)
    syl_state = np.zeros(spec.syllable_width)
    outputs = []
    seg_states = []
    syl_inputs = []
    syl_ctx_before = []
    syl_states = []
    n_steps = 0
    for m in mats:
        acc = np.zeros(spec.accumulator_width)
        for x in m:
            seg = sigmoid(net.w_in_seg @ x + net.w_rec_seg @ seg + net.b_seg)
            acc = sigmoid(net.w_in_acc @ x + net.w_rec_acc @ acc + net.b_acc)
            outputs.append(sigmoid(
                net.w_head @ np.concatenate([seg, syl_state]) + net.b_head))
            seg_states.append(seg.copy())
            n_steps += 1
        ctx = np.zeros(spec.syllable_width)
        syl_ctx_before.append(ctx.copy())
        syl_inputs.append(acc.copy())
        syl_state = sigmoid(net.w_in_syl @ acc + net.w_rec_syl @ ctx
                            + net.b_syl)
        syl_states.append(syl_state.copy())
    final = sigmoid(net.w_head @ np.concatenate([seg, syl_state])
                    + net.b_head)
    return ClockedTrace(
        segment_steps=n_steps,
        syllable_steps=len(mats),
        outputs=np.stack(outputs),
        final_output=final,
        syllable_inputs=tuple(syl_inputs),
        syllable_contexts_before=tuple(syl_ctx_before),
        syllable_states=tuple(syl_states),
        segment_states=tuple(seg_states),
    )


# ---------------------------------------------------------------------------
# model files

def _spec_to_doc(spec: NetworkSpec) -> dict:
    return {
        "input_width": spec.input_width,
        "modules": [{"name": m.name, "width": m.width} for m in spec.modules],
        "heads": [{"name": h.name, "width": h.width,
                   "sources": list(h.sources)} for h in spec.heads],
        "init_range": spec.init_range,
    }


def _spec_from_doc(doc: Mapping) -> NetworkSpec:
    return NetworkSpec(
        input_width=doc["input_width"],
        modules=tuple(ModuleSpec(m["name"], m["width"])
                      for m in doc["modules"]),
        heads=tuple(HeadSpec(h["name"], h["width"], tuple(h["sources"]))
                    for h in doc["heads"]),
        init_range=doc["init_range"],
    )


def model_to_json(net: Network, provenance: Mapping | None = None) -> str:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "spec": _spec_to_doc(net.spec),
        "weights": {
            "w_in": net.w_in.tolist(),
            "w_rec": net.w_rec.tolist(),
            "w_out": net.w_out.tolist(),
            "b_h": net.b_h.tolist(),
            "b_out": net.b_out.tolist(),
        },
        "provenance": dict(provenance or {}),
    }
    return json.dumps(doc, sort_keys=True)


def model_from_json(text: str) -> tuple[Network, dict]:
    doc = json.loads(text)
    version = doc.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    spec = _spec_from_doc(doc["spec"])
    net = init_network(spec, seed=0)
    w = doc["weights"]
    for name in ("w_in", "w_rec", "w_out", "b_h", "b_out"):
        arr = np.asarray(w[name], dtype=float)
        current = getattr(net, name)
        if arr.shape != current.shape:
            raise ValueError(f"{name} has shape {arr.shape}, expected "
                             f"{current.shape}")
        setattr(net, name, arr)
    reset_context(net)
    return net, doc["provenance"]


def save_model(net: Network, path: str | Path,
               provenance: Mapping | None = None) -> None:
    Path(path).write_text(model_to_json(net, provenance), encoding="utf-8")


def load_model(path: str | Path) -> tuple[Network, dict]:
    return model_from_json(Path(path).read_text(encoding="utf-8"))
