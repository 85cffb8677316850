"""Channel resolvability and wiretap security laboratory for discrete
memoryless multiple-access channels."""

__version__ = "0.1.0"

from .mac_model import Mac, WiretapMac, load_channel  # noqa: E402
from .prob_core import FiniteDistribution, JointDistribution  # noqa: E402

__all__ = ["FiniteDistribution", "JointDistribution", "Mac", "WiretapMac", "load_channel", "__version__"]
