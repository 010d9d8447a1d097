import sys
from pathlib import Path

# Make the sibling helper modules importable under any pytest import mode.
sys.path.insert(0, str(Path(__file__).parent))
