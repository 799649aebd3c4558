"""Variable-length lossy source coding with overflow and excess-distortion budgets."""
__version__ = "0.1.0"

from .model import (  # noqa: E402
    DistortionSpec,
    Feasibility,
    FiniteSource,
    InfeasibleError,
    Instance,
    SchemaError,
    check_feasible,
    hamming,
    index_to_word,
    load_instance,
    make_instance,
    word_length,
)
from .smooth_entropy import majorizes, smooth_max_entropy, smooth_support_size  # noqa: E402
from .dball import (  # noqa: E402
    CodeTable,
    GreedyCover,
    build_deterministic_code,
    build_stochastic_code,
    g_value,
    greedy_cover,
)
from .evaluator import CodeReport, converse_audit, evaluate_code, majorization_audit, simulate  # noqa: E402
from .blocklength import BudgetExceeded, expand, g_rate, sandwich, sweep  # noqa: E402
from .asymptotics import gaussian_approx, q_function, q_inverse, rate_distortion  # noqa: E402
