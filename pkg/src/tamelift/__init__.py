"""Tame approximation of polynomial automorphisms and symplectomorphisms over Q.

Modules: ``polycore`` (sparse exact polynomials), ``endo`` (endomorphisms,
Jacobians, heights, brackets), ``tame`` (generators and words), ``approx``
(degree-by-degree approximation), ``weyl`` (Weyl algebra lifting and the
Moyal product), ``cli``.
"""

from .approx import anick_approximate, symp_approximate
from .endo import PolyEndo, compose, endo_height, formal_inverse, is_symplectic, jacobian
from .polycore import INF, Poly, Q
from .tame import TameWord, eval_word, invert_word
from .weyl import check_weyl_relations, classical_symbol, lift_word

__version__ = "0.1.0"
