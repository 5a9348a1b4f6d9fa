"""Dimension-four example comparing the state star product with the prequantum action.

Generators are ordered (theta^1, theta^2, bar theta^1, bar theta^2) with
q_{1 bar1} = q_{2 bar2} = 1/2, and P projects onto span(e_1, e_2).  For
f = bar theta^2 bar theta^1 and psi = theta^1 theta^2 G with the Gaussian
G = exp((1/2hbar)(bar theta^1 theta^1 + bar theta^2 theta^2)):

* f *_P psi = hbar^2 G, again a polarised state;
* the prequantum action gives
  (-bar theta^1 theta^1 bar theta^2 theta^2 + hbar bar theta^1 theta^1 +
  hbar bar theta^2 theta^2) G, which is not polarised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forms import Metric
from .multivector import Multivector, exp_even, wedge
from .polarization import Polarization

__all__ = ["ComplexFrameExample", "complex_frame_example"]


@dataclass(frozen=True)
class ComplexFrameExample:
    metric: Metric
    P: Polarization
    f: Multivector
    psi: Multivector
    expected_star: Multivector
    expected_prequantum: Multivector


def complex_frame_example(hbar: float) -> ComplexFrameExample:
    q = np.zeros((4, 4), dtype=complex)
    q[0, 2] = q[2, 0] = q[1, 3] = q[3, 1] = 0.5
    metric = Metric(q, definite=False)
    P = Polarization(np.diag([1.0, 1.0, 0.0, 0.0]).astype(complex), metric)
    # bar theta^mu is generator mu + 2
    f = Multivector.from_terms(4, {(4, 3): 1}, hbar=hbar)
    pair = {(3, 1): 1 / (2 * hbar), (4, 2): 1 / (2 * hbar)}
    G = exp_even(Multivector.from_terms(4, pair, hbar=hbar))
    psi = wedge(Multivector.monomial((1, 2), 4, hbar=hbar), G)
    pre = Multivector.from_terms(4, {(3, 1, 4, 2): -1, (3, 1): hbar, (4, 2): hbar}, hbar=hbar)
    return ComplexFrameExample(metric, P, f, psi, G * hbar ** 2, wedge(pre, G))
