"""Config package - exports settings."""
from config.settings import settings

__all__ = ['settings']
