#!/usr/bin/env python3
"""
colorstream.py
--------------
Entry point for the streaming graph-coloring toolkit. Forwards to src/cli.py.

  python colorstream.py gen --kind gnp-capped --n 1000 --delta 64 --seed 1 --out streams/g.txt
  python colorstream.py run determ streams/g.txt --out reports/latest/coloring.txt --metrics reports/latest/metrics.txt
  python colorstream.py game --algorithm robust --adversary conflict --trials 100 --seed 7 --n 256 --delta 64

Log level comes from COLORSTREAM_LOG (default INFO); -v forces DEBUG.
"""

import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
