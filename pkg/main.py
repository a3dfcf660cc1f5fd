"""
ltisym entry point.
"""
import sys
import os

# Add current directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from app.cli.main import run

if __name__ == "__main__":
    run()
