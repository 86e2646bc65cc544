"""Exact scalar domains and exact PSD certification."""

from .psd import PsdResult, exact_psd
from .quad import QuadScalar, quad_sign, sqrt_rational, squarefree_part

__all__ = ["PsdResult", "QuadScalar", "exact_psd", "quad_sign", "sqrt_rational", "squarefree_part"]
