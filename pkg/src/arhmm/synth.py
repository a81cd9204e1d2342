"""Synthetic regime-switching signals built from blocks of hidden states.

Two built-in scenarios (three and six variables, three states each) are
provided. State and variable indices are 0-based throughout.
"""

from dataclasses import dataclass, replace

import numpy as np

from arhmm.model import Dataset, Model, StateStructure


@dataclass(frozen=True)
class Equation:
    """``x_m = intercept + sum(w * x_u) + sum(eta_r * x_m[t-r]) + sigma * eps``.

    ``parents`` holds ``(u, w)`` pairs; ``sigma`` is a standard deviation.
    """

    intercept: float = 0.0
    parents: tuple = ()
    ar: tuple = ()
    sigma: float = 1.0


@dataclass(frozen=True)
class ScenarioSpec:
    equations: tuple
    blocks: tuple
    seed: int = 0
    burn_in: int = 100

    def __post_init__(self):
        eqs = tuple(tuple(row) for row in self.equations)
        object.__setattr__(self, "equations", eqs)
        object.__setattr__(self, "blocks", tuple((int(s), int(n)) for s, n in self.blocks))
        if any(len(row) != len(eqs[0]) for row in eqs):
            raise ValueError("every state needs one equation per variable")
        for i in range(len(eqs)):
            self.structure(i)
        for s, n in self.blocks:
            if not 0 <= s < len(eqs) or n <= 0:
                raise ValueError(f"invalid block ({s}, {n})")

    @property
    def n_states(self):
        return len(self.equations)

    @property
    def n_vars(self):
        return len(self.equations[0])

    @property
    def max_lag(self):
        return max(len(e.ar) for row in self.equations for e in row)

    @property
    def length(self):
        return sum(n for _, n in self.blocks)

    def structure(self, i):
        row = self.equations[i]
        return StateStructure([[u for u, _ in e.parents] for e in row], [len(e.ar) for e in row])

    def with_blocks(self, blocks):
        return replace(self, blocks=blocks)

    def with_seed(self, seed):
        return replace(self, seed=seed)


def _draw_row(x, t, row, order, eps):
    for m in order:
        e = row[m]
        v = e.intercept
        for u, w in e.parents:
            v += w * x[t, u]
        for r, eta in enumerate(e.ar, start=1):
            v += eta * x[t - r, m]
        x[t, m] = v + e.sigma * eps[m]


def sample(spec):
    """Generate the signal for ``spec.blocks``.

    ``burn_in`` rows are first drawn in the first block's state from a zero
    context and discarded. Lag context then carries across block boundaries,
    so every emitted row's lags are present in the returned signal.

    Returns
    -------
    dataset : Dataset
    path : ndarray of int
        True hidden state of every row.
    """
    rng = np.random.default_rng(spec.seed)
    lead = max(spec.max_lag, 1)
    total = spec.burn_in + spec.length
    eps = rng.standard_normal((total, spec.n_vars))
    x = np.zeros((lead + total, spec.n_vars))
    states = [spec.blocks[0][0]] * spec.burn_in
    for s, n in spec.blocks:
        states.extend([s] * n)
    orders = [spec.structure(i).topological_order() for i in range(spec.n_states)]
    for k, s in enumerate(states):
        _draw_row(x, lead + k, spec.equations[s], orders[s], eps[k])
    start = lead + spec.burn_in
    names = tuple(f"X{m + 1}" for m in range(spec.n_vars))
    return Dataset(x[start:], names), np.array(states[spec.burn_in :], dtype=int)


def spec_to_model(spec, max_lag=None, transition=None, initial=None):
    """Model holding the generating equations (variances are ``sigma**2``)."""
    n = spec.n_states
    return Model(
        transition=np.full((n, n), 1.0 / n) if transition is None else transition,
        initial=np.full(n, 1.0 / n) if initial is None else initial,
        structures=[spec.structure(i) for i in range(n)],
        coeffs=[
            [[e.intercept, *(w for _, w in e.parents), *e.ar] for e in row] for row in spec.equations
        ],
        variances=[[max(e.sigma**2, 1e-9) for e in row] for row in spec.equations],
        max_lag=spec.max_lag if max_lag is None else max_lag,
    )


E = Equation

SCENARIO_1 = (
    (E(1.0, sigma=1.0), E(2.0, sigma=1.0), E(3.0, sigma=1.0)),
    (E(2.0, sigma=3.0), E(1.0, ((2, 2.0),), sigma=5.0), E(4.0, sigma=4.0)),
    (
        E(1.0, ar=(0.1,), sigma=2.0),
        E(0.0, ((0, 5.0), (2, 4.0)), (0.7,), sigma=3.0),
        E(4.0, ((0, 2.0),), (0.99,), sigma=1.0),
    ),
)

SCENARIO_2 = (
    (
        E(1.5, sigma=1.5),
        E(2.5, sigma=2.0),
        E(4.5, sigma=3.0),
        E(3.5, sigma=8.0),
        E(6.5, sigma=6.0),
        E(1.5, sigma=0.5),
    ),
    (
        E(1.5, ar=(0.2,), sigma=3.5),
        E(0.0, ((2, 2.5),), sigma=2.0),
        E(0.0, ((4, 3.0),), (0.99,), sigma=4.0),
        E(1.5, ((0, 9.5),), sigma=2.0),
        E(6.5, ar=(0.99,), sigma=5.5),
        E(0.5, ((4, 6.8),), sigma=2.0),
    ),
    (
        E(1.5, ar=(0.999,), sigma=3.0),
        E(2.5, ((0, 5.0), (3, 8.0)), (0.888, 0.111), sigma=3.5),
        E(4.5, ((0, 1.5),), (0.999,), sigma=4.0),
        E(3.5, ((0, 1.5), (2, 2.0)), (0.1,), sigma=6.5),
        E(0.0, ((2, 5.0),), sigma=5.5),
        E(1.0, ((2, 3.5), (4, -4.5)), (0.8,), sigma=7.0),
    ),
)

BLOCK_LENGTH = 300

# training signal visits every state twice and every ordered pair of states
TRAIN_BLOCKS = tuple((s, BLOCK_LENGTH) for s in (0, 1, 2, 0, 2, 1))

TEST_BLOCKS = (
    tuple((s, BLOCK_LENGTH) for s in (0, 1, 2, 0, 1, 2)),
    tuple((s, BLOCK_LENGTH) for s in (2, 1, 0, 2, 1, 0)),
    tuple((s, 2 * BLOCK_LENGTH) for s in (0, 1, 2)),
    tuple((s, BLOCK_LENGTH // 2) for s in (1, 0, 2, 1, 2, 0, 1, 2, 0, 2, 0, 1)),
)


def builtin_scenarios(seed=0):
    """The three-variable and six-variable scenarios with the training block layout."""
    return (
        ScenarioSpec(SCENARIO_1, TRAIN_BLOCKS, seed=seed),
        ScenarioSpec(SCENARIO_2, TRAIN_BLOCKS, seed=seed),
    )


def parse_blocks(text):
    """Block layout from ``"train"``, ``"test1".."test4"`` or ``"state:length,..."``."""
    text = text.strip()
    if text == "train":
        return TRAIN_BLOCKS
    if text.startswith("test") and text[4:].isdigit():
        k = int(text[4:])
        if not 1 <= k <= len(TEST_BLOCKS):
            raise ValueError(f"unknown test layout {text!r}")
        return TEST_BLOCKS[k - 1]
    blocks = []
    for item in text.split(","):
        state, _, length = item.partition(":")
        try:
            blocks.append((int(state), int(length)))
        except ValueError:
            raise ValueError(f"bad block {item!r}; expected state:length") from None
    return tuple(blocks)
