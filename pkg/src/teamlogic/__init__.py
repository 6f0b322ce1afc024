"""Dependence logic with monotone generalized quantifiers: team semantics,
a natural-deduction kernel, normal forms, approximations and Skolem forms."""

from .model import Structure, WeakModel, builtin
from .normalform import NormalFormSentence, normalize
from .semantics import check_sentence, eval_team
from .syntax import Signature, parse, render
from .team import Team

__version__ = "0.1.0"

__all__ = [
    "NormalFormSentence", "Signature", "Structure", "Team", "WeakModel", "builtin",
    "check_sentence", "eval_team", "normalize", "parse", "render",
]
