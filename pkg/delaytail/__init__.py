"""delaytail - Regenerative delay-tail estimation with emulated amplitude estimation."""

__version__ = "0.1.0"
