"""
Configuration classes for the super star product engine.
"""
from dataclasses import dataclass, field


@dataclass
class ResourceLimits:
    """Guardrails that keep scenarios at desk scale."""
    max_odd_dimension: int = 4
    max_budget: int = 2_000_000  # bound on 4^d * N * D^(2m)

    def __post_init__(self):
        """Validate limits after initialization."""
        if self.max_odd_dimension < 0:
            raise ValueError("max_odd_dimension must be non-negative")
        if self.max_budget <= 0:
            raise ValueError("max_budget must be positive")

    def cost(self, m: int, d: int, nu_order: int, jet_degree: int) -> int:
        """Estimated work for a scenario."""
        return (4 ** d) * max(nu_order, 1) * max(jet_degree, 1) ** (2 * m)


@dataclass
class EngineSettings:
    """Application settings."""
    limits: ResourceLimits = field(default_factory=ResourceLimits)

    # Extra nu orders used inside the super product
    nu_margin_per_odd: int = 2

    # Reporting
    report_timings: bool = False
    log_level: str = "INFO"
    seed: int = 0

    def __post_init__(self):
        """Validate settings after initialization."""
        if self.nu_margin_per_odd < 1:
            raise ValueError("nu_margin_per_odd must be at least 1")
        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR"):
            raise ValueError("log_level must be DEBUG, INFO, WARNING or ERROR")
        self.log_level = self.log_level.upper()

    def nu_margin(self, d: int) -> int:
        """Working nu orders added on top of the requested order for odd dimension d."""
        return self.nu_margin_per_odd * d + (1 if d else 0)
