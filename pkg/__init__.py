"""
Shiftlab - subnormality and hyponormality of weighted shifts in class TC
"""

__version__ = "1.0.0"
