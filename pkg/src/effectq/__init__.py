"""Sequential effect systems built on effect quantales: the algebra, an
indexed effect language, a System F-omega style checker, a monitored
small-step runtime and concrete instantiations."""

from .quantale import EffectQuantale, LawReport, check_laws, check_star_laws, derive_star_finite
from .effects import EffectSignature, equiv, normalize, subeffect
from .checker import Language, TypingError, infer
from .runtime import Instantiation, monitor_safety, run

__all__ = [
    "EffectQuantale", "EffectSignature", "Instantiation", "Language", "LawReport", "TypingError",
    "check_laws", "check_star_laws", "derive_star_finite", "equiv", "infer", "monitor_safety",
    "normalize", "run", "subeffect",
]
