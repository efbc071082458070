"""Rate coefficients, per-section reaction rates, and signed source terms.

Every reaction converts exactly one surface species into exactly one
other, so summing coverage sources over surfaces cancels term by term
and total site count is conserved by construction.  Wildcard
("any"-surface) decomposition channels act on each surface in the
mixture, including their own product surface: the product-surface term
changes no coverage but still consumes gas and deposits solid, which is
what makes decomposition non-self-limiting.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import (
    ArrheniusRate,
    ConstantRate,
    LinearAboveThresholdRate,
    ReactorConfig,
    WILDCARD_SURFACE,
)
from .constants import BOLTZMANN


def evaluate_k(rate_law, temperature: float) -> float:
    """Rate coefficient at ``temperature`` [K] for any supported law form."""
    if isinstance(rate_law, ConstantRate):
        return rate_law.k0
    if isinstance(rate_law, ArrheniusRate):
        return rate_law.prefactor * np.exp(
            -rate_law.activation_energy / (BOLTZMANN * temperature)
        )
    if isinstance(rate_law, LinearAboveThresholdRate):
        if temperature < rate_law.threshold:
            return 0.0
        return rate_law.slope * (temperature - rate_law.threshold)
    raise TypeError(f"unsupported rate law {rate_law!r}")


def reaction_rate(k: float, c, theta, sigma: float):
    """Surface reaction rate [mol/(m^2 s)]: ``k * c * theta * sigma``."""
    return k * c * theta * sigma


@dataclass(frozen=True)
class CompiledReaction:
    gas: int  # index of the gas reactant
    surface: int  # index of the surface reactant, -1 for wildcard
    product: int  # index of the surface product
    gas_products: tuple[tuple[int, float], ...]  # (chemical index, coefficient)
    solid_mass_delta: float  # [kg/mol of reaction events], signed
    rate_law: object


@dataclass(frozen=True)
class CompiledNetwork:
    reactions: tuple[CompiledReaction, ...]
    site_density: np.ndarray  # per surface [mol/m^2]


@lru_cache(maxsize=16)
def compile_network(config: ReactorConfig) -> CompiledNetwork:
    chem_index = {c.name: i for i, c in enumerate(config.chemicals)}
    surf_index = {s.name: i for i, s in enumerate(config.surfaces)}
    solids = {s.name: s for s in config.solids}

    compiled = []
    for r in config.reactions:
        mass = 0.0
        if r.solid_delta != 0.0:
            solid = solids[r.solid] if r.solid else config.solids[0]
            mass = r.solid_delta * solid.molar_mass
        compiled.append(
            CompiledReaction(
                gas=chem_index[r.gas_reactant],
                surface=(-1 if r.surface_reactant == WILDCARD_SURFACE
                         else surf_index[r.surface_reactant]),
                product=surf_index[r.surface_product],
                gas_products=tuple(
                    (chem_index[gp.chemical], gp.coefficient) for gp in r.gas_products
                ),
                solid_mass_delta=mass,
                rate_law=r.rate_law,
            )
        )
    sigma = np.array([s.site_density for s in config.surfaces])
    return CompiledNetwork(tuple(compiled), sigma)


def max_rate_coefficient(config: ReactorConfig, temperature: float) -> float:
    """Largest rate coefficient of any reaction at the given temperature."""
    net = compile_network(config)
    if not net.reactions:
        return 0.0
    return max(evaluate_k(rx.rate_law, temperature) for rx in net.reactions)


@dataclass
class SourceTerms:
    """Signed time derivatives contributed by surface chemistry.

    ``gas`` is mol/(m^3 s) per chemical per section and already carries
    the 4/d wall-coupling factor; ``coverage`` is 1/s per surface; and
    ``solid`` is kg/(m^2 s).
    """

    gas: np.ndarray
    coverage: np.ndarray
    solid: np.ndarray


def assemble_sources(state, config: ReactorConfig) -> SourceTerms:
    """Accumulate all reaction contributions for the current state.

    ``state`` needs ``concentrations`` (chemicals x sections),
    ``coverages`` (surfaces x sections), and ``reactor_temperature``.
    """
    net = compile_network(config)
    c = state.concentrations
    theta = state.coverages
    temperature = state.reactor_temperature

    gas_src = np.zeros_like(c)
    cov_src = np.zeros_like(theta)
    solid_src = np.zeros(c.shape[1])
    wall = 4.0 / config.geometry.diameter

    for rx in net.reactions:
        k = evaluate_k(rx.rate_law, temperature)
        if k == 0.0:
            continue
        kc = k * c[rx.gas]
        if not kc.any():
            continue
        if rx.surface >= 0:
            conversion = kc * theta[rx.surface]  # site fraction per second
            rate = conversion * net.site_density[rx.surface]  # mol/(m^2 s)
            cov_src[rx.surface] -= conversion
            cov_src[rx.product] += conversion
        else:
            # Wildcard: consume every surface at its own coverage; the
            # product-surface term cancels in coverage but not in gas/solid.
            per_surface = kc[None, :] * theta
            rate = (per_surface * net.site_density[:, None]).sum(axis=0)
            cov_src -= per_surface
            cov_src[rx.product] += per_surface.sum(axis=0)
        gas_src[rx.gas] -= wall * rate
        for idx, coeff in rx.gas_products:
            gas_src[idx] += coeff * wall * rate
        if rx.solid_mass_delta != 0.0:
            solid_src += rx.solid_mass_delta * rate
    return SourceTerms(gas_src, cov_src, solid_src)
