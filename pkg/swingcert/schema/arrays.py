"""
numpy-backed field types for the data contract.

Models keep numpy arrays in memory and serialize them as plain JSON lists.
Complex vectors travel as ``[[re, im], ...]`` pairs.
"""
from typing import Annotated, Any

import numpy as np
from pydantic import BeforeValidator, PlainSerializer


def _as_real(value: Any) -> np.ndarray:
    return np.array(value, dtype=float)


def _as_int(value: Any) -> np.ndarray:
    return np.array(value, dtype=int)


def _as_complex(value: Any) -> np.ndarray:
    arr = np.asarray(value)
    if np.iscomplexobj(arr):
        return arr.astype(complex).reshape(-1)
    if arr.size == 0:
        return np.zeros(0, dtype=complex)
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr[:, 0] + 1j * arr[:, 1]
    return arr.astype(complex).reshape(-1)


def _real_to_list(arr: np.ndarray) -> list:
    return np.asarray(arr, dtype=float).tolist()


def _int_to_list(arr: np.ndarray) -> list:
    return np.asarray(arr, dtype=int).tolist()


def _complex_to_pairs(arr: np.ndarray) -> list:
    arr = np.asarray(arr, dtype=complex)
    return [[float(z.real), float(z.imag)] for z in arr]


RealArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_real),
    PlainSerializer(_real_to_list, return_type=list),
]

IntArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_int),
    PlainSerializer(_int_to_list, return_type=list),
]

ComplexVector = Annotated[
    np.ndarray,
    BeforeValidator(_as_complex),
    PlainSerializer(_complex_to_pairs, return_type=list),
]
