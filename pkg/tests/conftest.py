import os
import sys

# Make tests/ importable as a package root so the suite can reach its
# oracles and generators without installing them.
sys.path.insert(0, os.path.dirname(__file__))
