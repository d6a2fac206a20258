"""Shared random-instance generators and field fixtures."""

from __future__ import annotations

import numpy as np

from semicalib import (
    Frame,
    MetricTensor,
    TwoForm,
    comass_exact,
    complement_basis,
    gram_schmidt,
)


def random_pd_metric(rng, n: int, cond_range=(0.5, 2.0)) -> MetricTensor:
    """Well-conditioned random SPD metric: random rotation of a bounded diagonal."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return MetricTensor(q @ np.diag(rng.uniform(*cond_range, n)) @ q.T)


def random_two_form(rng, n: int) -> TwoForm:
    x = rng.standard_normal((n, n))
    return TwoForm(np.triu(x, 1) - np.triu(x, 1).T)


def unit_comass_form(g: MetricTensor, omega: TwoForm) -> TwoForm:
    """Rescale a nonzero form to exact comass 1 with respect to g."""
    c = comass_exact(g, omega).value
    assert c > 0, "cannot normalize the zero form"
    return TwoForm(omega.entries / c)


def dual_wedge(g: MetricTensor, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Coefficient matrix of the wedge of the g-dual covectors of u and v."""
    a, b = g.entries @ u, g.entries @ v
    return np.outer(a, b) - np.outer(b, a)


def planted_form(rng, g: MetricTensor, blocks: int, rest_comass: float = 0.5):
    """Unit-comass form with `blocks` planted calibrated planes.

    Returns (form, planted_frame) where the frame holds the 2*blocks
    g-orthonormal vectors spanning the planted eigenvalue-1 planes; the
    remainder of the form lives on the g-orthogonal complement, scaled to
    comass `rest_comass` when there is room.
    """
    n = g.dim
    k = 2 * blocks
    assert k <= n
    planted = gram_schmidt(g, Frame(rng.standard_normal((k, n))))
    w = np.zeros((n, n))
    for i in range(blocks):
        w += dual_wedge(g, planted[2 * i], planted[2 * i + 1])
    comp = complement_basis(g, planted)
    if len(comp) >= 2 and rest_comass > 0:
        small = random_two_form(rng, len(comp))
        # push the complement-coordinate form into ambient coordinates
        d = g.entries @ comp.vectors.T
        rest = d @ small.entries @ d.T
        c = comass_exact(g, TwoForm(rest)).value
        if c > 0:
            w += rest * (rest_comass / c)
    return TwoForm(w), planted


def ramp_field_text(svals, coords_axis: int = 0) -> str:
    """n=4 field with omega = dx1^dx2 + s dx3^dx4 and identity metric."""
    lines = ["CALFIELD 1", "DIM 4", f"POINTS {len(svals)}"]
    for k, s in enumerate(svals):
        x = ["0"] * 4
        x[coords_axis] = str(k)
        lines += [
            f"P {k}",
            "X " + " ".join(x),
            "G 1 0 0 0 1 0 0 1 0 1",
            f"W 1 0 0 0 0 {float(s)!r}",
        ]
    return "\n".join(lines) + "\n"


def rotating_plane_field_text(thetas) -> str:
    """n=4 field whose calibrated plane rotates through the coordinates.

    omega(theta) is the dual wedge of (cos t e1 + sin t e3) and e2 with the
    identity metric, so the kernel rotates too; the default spectral frames
    flip sign along the path while hint propagation keeps them continuous.
    """
    lines = ["CALFIELD 1", "DIM 4", f"POINTS {len(thetas)}"]
    for k, th in enumerate(thetas):
        u1 = np.array([np.cos(th), 0.0, np.sin(th), 0.0])
        u2 = np.array([0.0, 1.0, 0.0, 0.0])
        w = np.outer(u1, u2) - np.outer(u2, u1)
        wu = [f"{float(w[i, j])!r}" for i in range(4) for j in range(i + 1, 4)]
        lines += [f"P {k}", f"X {k} 0 0 0", "G 1 0 0 0 1 0 0 1 0 1", "W " + " ".join(wu)]
    return "\n".join(lines) + "\n"


def constant_field_text(n: int, g_upper: str, w_upper: str, points: int) -> str:
    lines = ["CALFIELD 1", f"DIM {n}", f"POINTS {points}"]
    for k in range(points):
        lines += [
            f"P {k}",
            "X " + " ".join([str(k)] + ["0"] * (n - 1)),
            "G " + g_upper,
            "W " + w_upper,
        ]
    return "\n".join(lines) + "\n"
