"""Two-stage interactive rail network design: non-cooperative regional design,
co-investment and Nash-bargaining payoff sharing."""

__version__ = "0.1.0"
