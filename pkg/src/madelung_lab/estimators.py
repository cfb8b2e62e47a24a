"""scikit-learn style adapters over the functional core.

Each row of ``X`` is one field sampled on a 1D periodic grid of
``n_features`` points (a power of two) spanning ``length``.  ``fit`` only
validates shapes and records the grid, so the adapters slot into pipelines
and parameter searches without learning anything from data.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import statistics as stats
from .fields import DensityField, EnsembleState, PhysParams, WaveState, from_wave, make_grid, to_wave
from .transforms import k_scale

FEATURE_NAMES = ("delta_x", "Delta_x", "Delta_N", "Delta_p", "prod_exact", "prod_heisenberg")


class _GridMixin:
    def _fit_grid(self, n_points: int):
        self.grid_ = make_grid(1, [n_points], [self.length])
        self.params_ = PhysParams(self.mass, self.hbar)
        self.n_features_in_ = n_points

    @staticmethod
    def _complex_rows(X) -> np.ndarray:
        # check_array refuses complex input, so psi rows are validated here
        X = np.asarray(X, dtype=complex)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError(f"expected a non-empty 2D array, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("input contains NaN or infinity")
        return X

    def _check_width(self, X, width):
        if X.shape[1] != width:
            raise ValueError(f"expected {width} columns, got {X.shape[1]}")


class MadelungTransformer(_GridMixin, TransformerMixin, BaseEstimator):
    """psi rows -> [P | S] rows, with the inverse map back to psi."""

    def __init__(self, length: float = 20.0, hbar: float = 1.0, mass: float = 1.0):
        self.length = length
        self.hbar = hbar
        self.mass = mass

    def fit(self, X, y=None):
        X = self._complex_rows(X)
        self._fit_grid(X.shape[1])
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = self._complex_rows(X)
        self._check_width(X, self.n_features_in_)
        out = np.empty((X.shape[0], 2 * self.n_features_in_))
        for i, row in enumerate(X):
            state = from_wave(WaveState(self.grid_, row), self.params_)
            out[i] = np.concatenate([state.P.values, state.S.values])
        return out

    def inverse_transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_array(X)
        n = self.n_features_in_
        self._check_width(X, 2 * n)
        return np.array([to_wave(EnsembleState.from_arrays(self.grid_, r[:n], r[n:]), self.params_).values for r in X])


class UncertaintyFeatures(_GridMixin, TransformerMixin, BaseEstimator):
    """Rows of P (or [P | S] with ``with_phase``) -> uncertainty measures.

    Output columns follow ``FEATURE_NAMES``.
    """

    def __init__(self, length: float = 20.0, hbar: float = 1.0, mass: float = 1.0, with_phase: bool = False):
        self.length = length
        self.hbar = hbar
        self.mass = mass
        self.with_phase = with_phase

    def fit(self, X, y=None):
        X = check_array(X)
        n = X.shape[1] // 2 if self.with_phase else X.shape[1]
        self._fit_grid(n)
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_array(X)
        n = self.n_features_in_
        self._check_width(X, 2 * n if self.with_phase else n)
        rows = []
        for r in X:
            state = EnsembleState.from_arrays(self.grid_, r[:n], r[n:] if self.with_phase else None)
            rep = stats.uncertainty_report(state, self.params_)
            rows.append([rep.delta_x_fisher, rep.delta_x_rms, rep.delta_N, rep.delta_p, rep.product_exact, rep.product_heisenberg])
        return np.array(rows)

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURE_NAMES, dtype=object)


class KScaler(_GridMixin, TransformerMixin, BaseEstimator):
    """Density rows -> k^n P(k x); ``inverse_transform`` applies 1/k."""

    def __init__(self, k: float = 2.0, length: float = 20.0, hbar: float = 1.0, mass: float = 1.0):
        self.k = k
        self.length = length
        self.hbar = hbar
        self.mass = mass

    def fit(self, X, y=None):
        if not self.k > 0:
            raise ValueError("k must be positive")
        X = check_array(X)
        self._fit_grid(X.shape[1])
        return self

    def _apply(self, X, k):
        check_is_fitted(self, "grid_")
        X = check_array(X)
        self._check_width(X, self.n_features_in_)
        return np.array([k_scale(DensityField(self.grid_, r), k).values for r in X])

    def transform(self, X):
        return self._apply(X, self.k)

    def inverse_transform(self, X):
        return self._apply(X, 1.0 / self.k)
