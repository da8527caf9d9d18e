"""Shared test helpers."""

import numpy as np

from ingarch.count_dists import Family
from ingarch.hmc import Chain


def make_chain(rows, family=Family.HGEOM, p=1, q=1):
    """Chain wrapper around an explicit draw matrix (constrained space)."""
    rows = np.asarray(rows, dtype=float)
    names = ["alpha0"]
    names += [f"alpha{i}" for i in range(1, p + 1)]
    names += [f"beta{j}" for j in range(1, q + 1)]
    if rows.shape[1] > len(names):
        names.append({Family.HGEOM: "phi", Family.GP: "kappa", Family.NB: "n"}[family])
    return Chain(
        draws=rows,
        unconstrained=np.full_like(rows, np.nan),
        param_names=names,
        family=family,
        p=p,
        q=q,
        accept_rate=1.0,
        energies=np.zeros(len(rows)),
        accepted=np.ones(len(rows), dtype=bool),
        divergences=0,
        step_size=0.1,
        mass_diag=np.ones(rows.shape[1]),
    )
