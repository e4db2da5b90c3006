import os
import sys

# Make the limitlog package importable without installing it
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))
