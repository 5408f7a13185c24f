"""
contestnet: bilateral contest games on networks.

Equilibrium computation, stability checks, comparative statics and formation dynamics.
"""

__version__ = "0.1.0"
