"""Series calculus and option pricing for hyperexponential jump diffusions."""

__version__ = "0.1.0"
