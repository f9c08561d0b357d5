"""Utilities package for nxcore."""

from nxcore.utils.size_parser import SizeParsingError, parse_size

__all__ = ["SizeParsingError", "parse_size"]
