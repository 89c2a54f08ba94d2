"""
Main entry point for the pnp_fv package.
"""

from .cli import main

if __name__ == "__main__":
    main()
