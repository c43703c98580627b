"""Mixed-frequency nowcasting toolkit."""

__version__ = "0.1.0"
