"""Tests du parsing des tailles mémoire."""

import pytest

from nxcore.utils.size_parser import SizeParsingError, parse_size


@pytest.mark.parametrize(
    "text,expected",
    [
        ("4096", 4096),
        ("64K", 65536),
        ("64k", 65536),
        ("512M", 512 * 1024**2),
        ("1.5G", 1610612736),
        ("256MiB", 256 * 1024**2),
        ("2T", 2 * 1024**4),
        (" 8K ", 8192),
    ],
)
def test_parse_size_valid(text: str, expected: int):
    """Test des tailles valides avec et sans suffixe."""
    assert parse_size(text) == expected


@pytest.mark.parametrize("text", ["", "abc", "12X", "-5M", "0", "1.2.3G"])
def test_parse_size_invalid(text: str):
    """Test que les tailles mal formées ou nulles sont rejetées."""
    with pytest.raises(SizeParsingError):
        parse_size(text)


def test_size_parsing_error_is_value_error():
    """Test que l'erreur se traite comme une entrée invalide."""
    assert issubclass(SizeParsingError, ValueError)
