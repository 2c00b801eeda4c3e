"""
jetdet: finite determinacy of germs on truncated power series rings.
"""

from .circle import FourierJet, circle_normalize
from .exceptions import JetDetError
from .ideal import IdealData, RightInverse, milnor_number, nu_exponent
from .jet import Jet, JetMap, parse_jet
from .lie import Derivation, exp, exp_product
from .normalizer import Certificate, normalize, verify_certificate

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "Derivation",
    "FourierJet",
    "IdealData",
    "Jet",
    "JetDetError",
    "JetMap",
    "RightInverse",
    "circle_normalize",
    "exp",
    "exp_product",
    "milnor_number",
    "normalize",
    "nu_exponent",
    "parse_jet",
    "verify_certificate",
]
