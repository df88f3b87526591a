import sys
import os

sys.path.insert(0, os.getcwd())
