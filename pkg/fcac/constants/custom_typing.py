from __future__ import annotations


__all__ = (
    "NP_f8",
    "NP_xf8",
    "NP_xxf8",
    "NP_xxxf8",
    "NP_xi8",
    "NP_xb",
    "ShapeType",
    "ClassIdType",
    "SeedType"
)


import numpy as np


type _XD = int

type NP_f8 = np.ndarray[tuple[()], np.dtype[np.float64]]
type NP_xf8 = np.ndarray[tuple[_XD], np.dtype[np.float64]]
type NP_xxf8 = np.ndarray[tuple[_XD, _XD], np.dtype[np.float64]]
type NP_xxxf8 = np.ndarray[tuple[_XD, _XD, _XD], np.dtype[np.float64]]

type NP_xi8 = np.ndarray[tuple[_XD], np.dtype[np.int64]]
type NP_xb = np.ndarray[tuple[_XD], np.dtype[np.bool_]]

type ShapeType = tuple[int, ...]
type ClassIdType = int
type SeedType = int | tuple[int, ...]
