"""Self-check suites: spectral theorem, gradient correctness, metric identities.

Each suite returns a list of records ``{"suite", "check", "passed", ...}``
suitable for one JSON line each.
"""

from __future__ import annotations

import math

import numpy as np

from afa.augment import WaveDraw, apply_waves, make_wave, spectral_delta_check, wave_for_bin
from afa.nn.layers import Branch, Conv2d, DualNorm, Linear
from afa.nn.losses import ace_loss, ce_loss, jsd_from_logits
from afa.nn.model import Model, ModelSpec
from afa.oracles import central_difference, flip_prob_literal, mce_literal, t5d_literal
from afa.robustness.metrics import (
    CorruptionErrorTable,
    flip_prob_from_predictions,
    mce,
    mfr,
    mt5d,
    t5d_from_rankings,
)
from afa.tensor_core import Rng, dft2, dft2_bruteforce, idft2, sample_exponential

GRAD_TOL = 1e-3
SPECTRAL_TOL = 1e-5


def _record(suite, check, passed, **detail):
    return {"suite": suite, "check": check, "passed": bool(passed), **detail}


# ---------------------------------------------------------------------------
# fft
# ---------------------------------------------------------------------------


def random_integer_pair(rng, m: int) -> tuple[int, int]:
    """A nonzero bin (kx, ky) with |kx| <= m/2 and 0 <= ky <= m/2."""
    while True:
        kx = rng.integers(m + 1) - m // 2
        ky = rng.integers(m // 2 + 1)
        if (kx, ky) != (0, 0):
            return int(kx), int(ky)


def spectral_theorem_checks(seed: int = 0, count: int = 20, sizes=(8, 16, 32)):
    """Energy concentration of integer-pair waves and additivity of AFA in the spectrum."""
    rng = Rng(seed).child("spectral")
    out = []
    for t in range(count):
        m = sizes[t % len(sizes)]
        kx, ky = random_integer_pair(rng, m)
        f, omega = wave_for_bin(kx, ky)
        sigma = sample_exponential(rng, 10.0)
        report = spectral_delta_check(f, omega, m, sigma)
        x = rng.uniform((3, m, m)).astype(np.float32)
        xa = apply_waves(x, [WaveDraw(f, omega, sigma)] * 3, clamp=False)
        wave = make_wave(f, omega, m)
        worst = 0.0
        for c in range(3):
            sx = dft2(x[c])
            resid = dft2(xa[c]) - sx - sigma * dft2(wave)
            worst = max(worst, float(np.max(np.abs(resid)) / np.max(np.abs(sx))))
        out.append(
            _record(
                "fft", f"spectral_delta[{t}]", report["passed"] and worst <= SPECTRAL_TOL,
                M=m, bin=[kx, ky], peak_fraction=report["peak_fraction"], additivity_rel_err=worst,
            )
        )
    return out


def fft_suite(seed: int = 0):
    rng = Rng(seed).child("fft")
    out = []
    for m in (4, 8):
        g = rng.uniform((m, m))
        err = float(np.max(np.abs(dft2(g) - dft2_bruteforce(g))))
        out.append(_record("fft", f"dft2_vs_bruteforce[M={m}]", err <= 1e-9 * m * m, max_abs_err=err))
    for s in range(10):
        r = rng.child("seed", s)
        p, q = r.uniform((16, 16)), r.uniform((16, 16))
        a, b = 4 * r.uniform() - 2, 4 * r.uniform() - 2
        lhs, fp, fq = dft2(a * p + b * q), a * dft2(p), b * dft2(q)
        lin = float(np.max(np.abs(lhs - fp - fq)) / (np.max(np.abs(fp)) + np.max(np.abs(fq))))
        parseval = abs(np.sum(p * p) * p.size - np.sum(np.abs(dft2(p)) ** 2)) / np.sum(np.abs(dft2(p)) ** 2)
        trip = float(np.max(np.abs(idft2(dft2(p)) - p)))
        out.append(_record("fft", f"linearity[{s}]", lin <= 1e-5, rel_err=lin))
        out.append(_record("fft", f"parseval[{s}]", parseval <= 1e-5, rel_err=float(parseval)))
        out.append(_record("fft", f"round_trip[{s}]", trip <= 1e-6, max_abs_err=trip))
    return out + spectral_theorem_checks(seed)


# ---------------------------------------------------------------------------
# grad
# ---------------------------------------------------------------------------


def _rel_err(analytic, numeric) -> float:
    """Max-abs discrepancy relative to the largest numeric gradient entry."""
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    return float(np.max(np.abs(analytic - numeric)) / max(np.max(np.abs(numeric)), 1e-8))


def _sample_indices(rng, shape, count=12):
    size = int(np.prod(shape))
    flat = np.unique(rng.integers(size, min(count, size)))
    return [np.unravel_index(int(i), shape) for i in flat]


def _check_array(rng, loss_fn, arr, analytic, count=12):
    idx = _sample_indices(rng, arr.shape, count)
    numeric = np.array([central_difference(loss_fn, arr, i) for i in idx])
    return _rel_err(np.array([analytic[i] for i in idx]), numeric)


def _layer_check(layer, params, x, rng, branch=Branch.MAIN, training=True):
    """Gradient error of ``sum(out * R)`` for the layer's parameters and input."""
    buffers = {}
    if isinstance(layer, DualNorm):
        for name, shape in layer.buffer_shapes().items():
            buffers[name] = np.full(shape, 1.0 if name.endswith("var") else 0.0)
    out, _ = layer.forward(x, params, buffers, branch, training)
    proj = rng.normal(out.shape)

    def loss():
        return float(np.sum(layer.forward(x, params, buffers, branch, training)[0] * proj))

    _, cache = layer.forward(x, params, buffers, branch, training)
    dx, grads = layer.backward(proj, cache, params)
    errs = {"input": _check_array(rng, loss, x, dx)}
    for name, g in grads.items():
        errs[name] = _check_array(rng, loss, params[name], g)
    return errs


def grad_suite(seeds=(0, 1, 2, 3, 4)):
    out = []
    for seed in seeds:
        rng = Rng(seed).child("grad")
        x = rng.normal((3, 2, 6, 6))
        conv = Conv2d("c", 2, 3, 3, 2)
        params = {conv.weight: rng.normal((3, 2, 3, 3))}
        errs = _layer_check(conv, params, x, rng)
        out.append(_record("grad", f"conv[seed={seed}]", max(errs.values()) <= GRAD_TOL, rel_err=errs))

        for branch in Branch:
            norm = DualNorm("n", 3)
            params = {k: rng.normal(s) for k, s in norm.param_shapes().items()}
            errs = _layer_check(norm, params, rng.normal((4, 3, 3, 3)), rng, branch)
            idle = [k for k in params if f".{branch.value}." not in k]
            out.append(
                _record("grad", f"dual_norm_{branch.value}[seed={seed}]", max(errs.values()) <= GRAD_TOL
                        and not any(k in errs for k in idle), rel_err=errs)
            )

        lin = Linear("l", 5, 4)
        params = {lin.weight: rng.normal((4, 5)), lin.bias: rng.normal((4,))}
        errs = _layer_check(lin, params, rng.normal((3, 5)), rng)
        out.append(_record("grad", f"linear[seed={seed}]", max(errs.values()) <= GRAD_TOL, rel_err=errs))

        z = rng.normal((4, 5))
        y = rng.integers(5, 4)
        _, g = ce_loss(z, y)
        err = _check_array(rng, lambda: ce_loss(z, y)[0], z, g, 20)
        out.append(_record("grad", f"softmax_ce[seed={seed}]", err <= GRAD_TOL, rel_err=err))

        za, zb = rng.normal((4, 5)), rng.normal((4, 5))
        _, ga, gb = ace_loss(za, zb, y)
        err = max(
            _check_array(rng, lambda: ace_loss(za, zb, y)[0], za, ga, 20),
            _check_array(rng, lambda: ace_loss(za, zb, y)[0], zb, gb, 20),
        )
        out.append(_record("grad", f"ace[seed={seed}]", err <= GRAD_TOL, rel_err=err))

        zs = [rng.normal((4, 5)) * 2 for _ in range(3)]
        _, gs = jsd_from_logits(*zs)
        err = max(_check_array(rng, lambda: jsd_from_logits(*zs)[0], z_k, g_k, 20) for z_k, g_k in zip(zs, gs))
        out.append(_record("grad", f"jsd[seed={seed}]", err <= GRAD_TOL, rel_err=err))

        out.append(_model_check(seed))
    return out


def _model_check(seed):
    """End to end: ACE through MAIN and AUX on a float64 two-conv model."""
    rng = Rng(seed).child("model")
    spec = ModelSpec((3, 6, 6), ((4, 3, 1), (5, 3, 2)), 3)
    model = Model(spec, seed=seed, dtype=np.float64)
    for name in model.params:
        if name.endswith((".gamma", ".beta")):
            model.params[name] = model.params[name] + 0.3 * rng.normal(model.params[name].shape)
    x_main, x_aux = rng.normal((4, 3, 6, 6)), rng.normal((4, 3, 6, 6))
    y = rng.integers(3, 4)

    def loss():
        zm = model.forward(x_main, Branch.MAIN, True)
        za = model.forward(x_aux, Branch.AUX, True)
        return ace_loss(zm, za, y)[0]

    zm = model.forward(x_main, Branch.MAIN, True)
    tm = model.tape
    za = model.forward(x_aux, Branch.AUX, True)
    ta = model.tape
    _, gm, ga = ace_loss(zm, za, y)
    grads = model.backward(gm, tm)
    for k, v in model.backward(ga, ta).items():
        grads[k] += v
    errs = {name: _check_array(rng, loss, model.params[name], grads[name], 6) for name in sorted(model.params)}
    return _record("grad", f"model_ace[seed={seed}]", max(errs.values()) <= GRAD_TOL, rel_err=errs)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def _random_table(rng, kinds):
    errors = {(k, s): 0.05 + 0.9 * rng.uniform() for k in kinds for s in range(1, 6)}
    return CorruptionErrorTable(errors, 0.1)


def metrics_suite(seed: int = 0, instances: int = 50):
    rng = Rng(seed).child("metrics")
    kinds = ["a", "b", "c"]
    out = []
    table = _random_table(rng, kinds)
    self_mce = mce(table, table)
    out.append(_record("metrics", "self_mCE", self_mce == 100.0, value=self_mce))
    fps = {k: 0.05 + rng.uniform() for k in kinds}
    out.append(_record("metrics", "self_mFR", mfr(fps, fps) == 1.0, value=mfr(fps, fps)))
    t5 = {k: 0.1 + 3 * rng.uniform() for k in kinds}
    out.append(_record("metrics", "self_mT5D", mt5d(t5, t5) == 1.0, value=mt5d(t5, t5)))
    other = _random_table(rng, kinds)
    fast, slow = mce(other, table), mce_literal(other.errors, table.errors, kinds)
    out.append(_record("metrics", "mCE_vs_literal", math.isclose(fast, slow, rel_tol=1e-12), value=fast))

    mismatches = []
    for t in range(instances):
        r = rng.child("instance", t)
        m, n, k = 1 + r.integers(4), 2 + r.integers(5), 5 + r.integers(4)
        preds = r.integers(3, (m, n))
        related = bool(t % 2)
        rankings = np.stack([np.stack([r.permutation(k) for _ in range(n)]) for _ in range(m)])
        if flip_prob_from_predictions(preds, related) != flip_prob_literal(preds, related):
            mismatches.append(("flip", t))
        if t5d_from_rankings(rankings) != t5d_literal(rankings):
            mismatches.append(("t5d", t))
    out.append(_record("metrics", "vectorized_vs_literal", not mismatches, instances=instances, mismatches=mismatches))
    return out


SUITES = {"fft": fft_suite, "grad": grad_suite, "metrics": metrics_suite}


def run_suite(name: str) -> list[dict]:
    return SUITES[name]()
