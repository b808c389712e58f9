import sys
from pathlib import Path

# make helpers importable as a plain module from any test file
sys.path.insert(0, str(Path(__file__).parent))
