"""Backend selection for the hot kernels.

By default every function in ``mixbandit._impl`` is compiled with numba
(``njit(cache=True, nogil=True)``). Setting the environment variable
``MIXBANDIT_BACKEND=numpy`` before import keeps the pure Python/numpy
reference path instead; both backends execute the identical source and
produce bit-identical results. ``load_backend`` builds a fresh copy of
either backend for side-by-side benchmarking and parity tests.
"""

import importlib.util
import os
import sys

from . import _impl as _mod

_JIT_ORDER = [
    "vdot",
    "norm2",
    "chol_update",
    "chol_factor",
    "solve_lower",
    "solve_upper_t",
    "quad_form_inv",
    "quad_form",
    "spd_solve",
    "logdet",
    "ridge_solve",
    "constrained_ls",
    "radius_sq_formula",
    "iid_radius_sq_formula",
    "ingest_one",
    "simulate_bandit",
]


def _want_numba() -> bool:
    flag = os.environ.get("MIXBANDIT_BACKEND", "numba").strip().lower()
    return flag not in {"numpy", "python", "pure", "off", "0"}


def _jit_module(mod, cache: bool) -> None:
    import numba

    for name in _JIT_ORDER:
        setattr(mod, name, numba.njit(cache=cache, nogil=True)(getattr(mod, name)))


BACKEND = "numpy"
if _want_numba():
    try:
        _jit_module(_mod, cache=True)
        BACKEND = "numba"
    except ImportError:
        BACKEND = "numpy"


def load_backend(use_numba: bool):
    """Load an independent copy of the kernel module, jitted or pure.

    The returned module does not share state with the default backend, so a
    benchmark can time both in one process.
    """
    name = "mixbandit._impl_numba_copy" if use_numba else "mixbandit._impl_pure_copy"
    spec = importlib.util.spec_from_file_location(name, _mod.__file__)
    mod = importlib.util.module_from_spec(spec)
    sys.modules[name] = mod
    spec.loader.exec_module(mod)
    if use_numba:
        _jit_module(mod, cache=False)
    return mod


chol_update = _mod.chol_update
chol_factor = _mod.chol_factor
solve_lower = _mod.solve_lower
solve_upper_t = _mod.solve_upper_t
quad_form_inv = _mod.quad_form_inv
quad_form = _mod.quad_form
spd_solve = _mod.spd_solve
logdet = _mod.logdet
ridge_solve = _mod.ridge_solve
constrained_ls = _mod.constrained_ls
radius_sq_formula = _mod.radius_sq_formula
iid_radius_sq_formula = _mod.iid_radius_sq_formula
simulate_bandit = _mod.simulate_bandit
