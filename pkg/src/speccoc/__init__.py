"""
speccoc

Spectral cocycle toolkit for substitution and S-adic systems:
- substitutions, telescoped directive sequences and Perron-Frobenius data
- the spectral cocycle and its pointwise Lyapunov exponents
- twisted Birkhoff sums, G_R estimates and local-dimension reports
- Rauzy-Veech / Zorich induction as a source of directive sequences
"""

__version__ = "0.3.0"
