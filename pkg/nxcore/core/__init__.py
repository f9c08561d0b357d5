"""Core module: identifiants, formats binaires, stockage et configuration."""
